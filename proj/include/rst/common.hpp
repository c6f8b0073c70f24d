#ifndef RST_COMMON_HPP
#define RST_COMMON_HPP

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rst {

// Bad argument or malformed input.
class ValidationError : public std::invalid_argument
{
public:
	using std::invalid_argument::invalid_argument;
};

// A caller broke a sequencing contract (e.g. finetuning without a snapshot).
class ContractError : public std::logic_error
{
public:
	using std::logic_error::logic_error;
};

// 64-bit FNV-1a. Used for feature hashing and every fingerprint in the project,
// so the constants must never change.
constexpr std::uint64_t fnv1a_offset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t fnv1a_prime = 0x100000001b3ULL;

constexpr std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = fnv1a_offset)
{
	for (unsigned char c : bytes) {
		h ^= c;
		h *= fnv1a_prime;
	}
	return h;
}

std::uint64_t fnv1a_bytes(const void* data, std::size_t n, std::uint64_t h = fnv1a_offset);

inline std::uint64_t fnv1a_doubles(std::span<const double> xs, std::uint64_t h = fnv1a_offset)
{
	return fnv1a_bytes(xs.data(), xs.size_bytes(), h);
}

std::string hex64(std::uint64_t v);

// splitmix64 finalizer; mixes a parent seed with a tag into an independent stream seed.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag)
{
	std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
	z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
	z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
	return z ^ (z >> 31);
}

template<typename... Tags>
constexpr std::uint64_t derive_seed(std::uint64_t seed, Tags... tags)
{
	((seed = mix_seed(seed, static_cast<std::uint64_t>(tags))), ...);
	return seed;
}

// std::mt19937_64 is fully specified by the standard; the <random> distributions
// are not, so sampling goes through these helpers to keep results identical
// across standard libraries.
class Rng
{
public:
	explicit Rng(std::uint64_t seed) : engine_(seed) {}

	std::uint64_t next() { return engine_(); }

	// uniform in [0, 1)
	double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

	double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

	// uniform integer in [0, n), rejection sampled
	std::size_t below(std::size_t n);

	// Box-Muller, no caching of the second variate
	double normal();

	template<typename T>
	void shuffle(std::vector<T>& xs)
	{
		for (std::size_t i = xs.size(); i > 1; --i)
			std::swap(xs[i - 1], xs[below(i)]);
	}

	// k distinct indices from [0, n), in draw order
	std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

private:
	std::mt19937_64 engine_;
};

// Round-half-up share of `n` for a percentage; at least 1 when n > 0.
std::size_t percent_of(std::size_t n, double percent);

// Integer allocation of `total` proportional to `weights` by largest remainder.
// Ties in the remainder go to the lower index.
std::vector<std::size_t> largest_remainder(std::size_t total, std::span<const double> weights);

}  // namespace rst

#endif

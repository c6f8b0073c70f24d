#include "rst/common.hpp"

#include "rst/document.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rst {

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> values) : rows(r), cols(c), data(std::move(values))
{
	if (data.size() != r * c)
		throw ValidationError("matrix: " + std::to_string(data.size()) + " values for shape " + std::to_string(r) +
		                      "x" + std::to_string(c));
}

std::uint64_t fnv1a_bytes(const void* data, std::size_t n, std::uint64_t h)
{
	const auto* p = static_cast<const unsigned char*>(data);
	for (std::size_t i = 0; i < n; ++i) {
		h ^= p[i];
		h *= fnv1a_prime;
	}
	return h;
}

std::string hex64(std::uint64_t v)
{
	static constexpr char digits[] = "0123456789abcdef";
	std::string out(16, '0');
	for (int i = 15; i >= 0; --i) {
		out[static_cast<std::size_t>(i)] = digits[v & 0xf];
		v >>= 4;
	}
	return out;
}

std::size_t Rng::below(std::size_t n)
{
	if (n == 0)
		throw ValidationError("Rng::below: empty range");
	const std::uint64_t bound = static_cast<std::uint64_t>(n);
	const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
	std::uint64_t x;
	do {
		x = engine_();
	} while (x >= limit);
	return static_cast<std::size_t>(x % bound);
}

double Rng::normal()
{
	double u1 = uniform();
	while (u1 <= 0.0)
		u1 = uniform();
	const double u2 = uniform();
	return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t n, std::size_t k)
{
	if (k > n)
		throw ValidationError("sample_without_replacement: k > n");
	std::vector<std::size_t> idx(n);
	std::iota(idx.begin(), idx.end(), std::size_t{0});
	// partial Fisher-Yates
	for (std::size_t i = 0; i < k; ++i)
		std::swap(idx[i], idx[i + below(n - i)]);
	idx.resize(k);
	return idx;
}

std::size_t percent_of(std::size_t n, double percent)
{
	if (n == 0)
		return 0;
	auto k = static_cast<std::size_t>(std::floor(static_cast<double>(n) * percent / 100.0 + 0.5));
	return std::clamp<std::size_t>(k, 1, n);
}

std::vector<std::size_t> largest_remainder(std::size_t total, std::span<const double> weights)
{
	const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
	if (weights.empty() || !(wsum > 0.0))
		throw ValidationError("largest_remainder: weights must have positive sum");
	std::vector<std::size_t> counts(weights.size());
	std::vector<double> rem(weights.size());
	std::size_t assigned = 0;
	for (std::size_t i = 0; i < weights.size(); ++i) {
		const double exact = static_cast<double>(total) * weights[i] / wsum;
		counts[i] = static_cast<std::size_t>(std::floor(exact));
		rem[i] = exact - static_cast<double>(counts[i]);
		assigned += counts[i];
	}
	std::vector<std::size_t> order(weights.size());
	std::iota(order.begin(), order.end(), std::size_t{0});
	std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
	for (std::size_t i = 0; assigned < total; ++i, ++assigned)
		++counts[order[i % order.size()]];
	return counts;
}

}  // namespace rst

#ifndef RST_INFOMETRICS_HPP
#define RST_INFOMETRICS_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace rst {

// Probability vector over n >= 2 classes. Entries are non-negative and sum to 1
// within `sum_tolerance`; construction validates.
class Distribution
{
public:
	static constexpr double sum_tolerance = 1e-9;

	explicit Distribution(std::vector<double> probs);

	std::size_t size() const { return probs_.size(); }
	double operator[](std::size_t i) const { return probs_[i]; }
	std::span<const double> probs() const { return probs_; }
	std::size_t argmax() const;

	bool operator==(const Distribution&) const = default;

	static bool is_valid(std::span<const double> probs);

private:
	std::vector<double> probs_;
};

struct ScoreParams
{
	double alpha = 1e-4;
};

// All logarithms are natural; 0 * ln 0 is taken as 0.
double shannon_entropy(const Distribution& p);
double normalized_entropy(const Distribution& p);
double gjs(std::span<const Distribution> dists);

// Candidate score: (prod_i (1 - Hn(P_i)) + alpha) / (GJS(P_1..P_m) + alpha).
// The same code path serves any class count.
double score(std::span<const Distribution> dists, const ScoreParams& params = {});

namespace detail {

// Unchecked forms over raw probability rows; the batch kernels use these.
double entropy(std::span<const double> p);
double normalized_entropy(std::span<const double> p);

// `rows` holds m contiguous rows of length n. `mean` is scratch of length n.
double gjs(std::span<const double> rows, std::size_t m, std::size_t n, std::span<double> mean);
double score(std::span<const double> rows, std::size_t m, std::size_t n, double alpha, std::span<double> mean);

}  // namespace detail

}  // namespace rst

#endif

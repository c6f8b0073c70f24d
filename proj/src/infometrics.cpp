#include "rst/infometrics.hpp"

#include "rst/common.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rst {

bool Distribution::is_valid(std::span<const double> probs)
{
	if (probs.size() < 2)
		return false;
	double sum = 0.0;
	for (double p : probs) {
		if (!(p >= 0.0) || !std::isfinite(p))
			return false;
		sum += p;
	}
	return std::abs(sum - 1.0) <= sum_tolerance;
}

Distribution::Distribution(std::vector<double> probs) : probs_(std::move(probs))
{
	if (probs_.size() < 2)
		throw ValidationError("Distribution: need at least 2 classes, got " + std::to_string(probs_.size()));
	if (!is_valid(probs_))
		throw ValidationError("Distribution: entries must be non-negative and sum to 1");
}

std::size_t Distribution::argmax() const
{
	return static_cast<std::size_t>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

namespace detail {

double entropy(std::span<const double> p)
{
	double h = 0.0;
	for (double x : p)
		if (x > 0.0)
			h -= x * std::log(x);
	return h;
}

double normalized_entropy(std::span<const double> p)
{
	return entropy(p) / std::log(static_cast<double>(p.size()));
}

double gjs(std::span<const double> rows, std::size_t m, std::size_t n, std::span<double> mean)
{
	std::fill(mean.begin(), mean.begin() + static_cast<std::ptrdiff_t>(n), 0.0);
	double member_entropy = 0.0;
	for (std::size_t i = 0; i < m; ++i) {
		auto row = rows.subspan(i * n, n);
		for (std::size_t k = 0; k < n; ++k)
			mean[k] += row[k];
		member_entropy += entropy(row);
	}
	for (std::size_t k = 0; k < n; ++k)
		mean[k] /= static_cast<double>(m);
	const double d = entropy(mean.first(n)) - member_entropy / static_cast<double>(m);
	// concavity makes this non-negative; clip rounding noise
	return d > 0.0 ? d : 0.0;
}

double score(std::span<const double> rows, std::size_t m, std::size_t n, double alpha, std::span<double> mean)
{
	double confidence = 1.0;
	for (std::size_t i = 0; i < m; ++i)
		confidence *= 1.0 - normalized_entropy(rows.subspan(i * n, n));
	return (confidence + alpha) / (gjs(rows, m, n, mean) + alpha);
}

}  // namespace detail

namespace {

void check_same_shape(std::span<const Distribution> dists)
{
	if (dists.size() < 2)
		throw ValidationError("need at least 2 distributions, got " + std::to_string(dists.size()));
	for (const auto& d : dists)
		if (d.size() != dists[0].size())
			throw ValidationError("distributions have mismatched lengths");
}

std::vector<double> stack(std::span<const Distribution> dists)
{
	std::vector<double> rows;
	rows.reserve(dists.size() * dists[0].size());
	for (const auto& d : dists)
		rows.insert(rows.end(), d.probs().begin(), d.probs().end());
	return rows;
}

}  // namespace

double shannon_entropy(const Distribution& p)
{
	return detail::entropy(p.probs());
}

double normalized_entropy(const Distribution& p)
{
	return detail::normalized_entropy(p.probs());
}

double gjs(std::span<const Distribution> dists)
{
	check_same_shape(dists);
	const auto rows = stack(dists);
	std::vector<double> mean(dists[0].size());
	return detail::gjs(rows, dists.size(), dists[0].size(), mean);
}

double score(std::span<const Distribution> dists, const ScoreParams& params)
{
	if (!(params.alpha > 0.0))
		throw ValidationError("score: alpha must be positive");
	check_same_shape(dists);
	const auto rows = stack(dists);
	std::vector<double> mean(dists[0].size());
	return detail::score(rows, dists.size(), dists[0].size(), params.alpha, mean);
}

}  // namespace rst

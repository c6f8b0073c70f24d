#include "rst/kernels.hpp"

#include "rst/common.hpp"
#include "rst/infometrics.hpp"

#include <string>

namespace rst::kernels {

namespace {

void logits_row(const ClassifierState& state, const Document& doc, std::span<double> out, std::vector<double>& hid)
{
	state.logits(doc.features, out, hid);
}

// Exceptions must not escape an OpenMP region, so shapes are checked up front.
void check_dims(const ClassifierState& state, std::span<const Document> docs)
{
	for (const auto& d : docs)
		if (d.features.size() != state.dim())
			throw ValidationError("document '" + d.id + "' has feature length " + std::to_string(d.features.size()) +
			                      ", classifier expects " + std::to_string(state.dim()));
}

void check_stack(std::span<const Matrix> probs)
{
	if (probs.size() < 2)
		throw ValidationError("score kernel: need at least 2 classifiers");
	for (const auto& p : probs)
		if (p.rows != probs[0].rows || p.cols != probs[0].cols)
			throw ValidationError("score kernel: classifier outputs differ in shape");
}

double score_row(std::span<const Matrix> probs, std::size_t row, double alpha, std::vector<double>& rows,
                 std::vector<double>& mean)
{
	const std::size_t n = probs[0].cols;
	for (std::size_t i = 0; i < probs.size(); ++i) {
		auto r = probs[i].row(row);
		std::copy(r.begin(), r.end(), rows.begin() + static_cast<std::ptrdiff_t>(i * n));
	}
	return detail::score(rows, probs.size(), n, alpha, mean);
}

}  // namespace

Matrix logits_serial(const ClassifierState& state, std::span<const Document> docs)
{
	check_dims(state, docs);
	Matrix out(docs.size(), state.classes());
	std::vector<double> hid(state.hidden());
	for (std::size_t i = 0; i < docs.size(); ++i)
		logits_row(state, docs[i], out.row(i), hid);
	return out;
}

Matrix logits_parallel(const ClassifierState& state, std::span<const Document> docs)
{
	check_dims(state, docs);
	Matrix out(docs.size(), state.classes());
	const auto n = static_cast<std::ptrdiff_t>(docs.size());
#pragma omp parallel
	{
		std::vector<double> hid(state.hidden());
#pragma omp for schedule(static)
		for (std::ptrdiff_t i = 0; i < n; ++i)
			logits_row(state, docs[static_cast<std::size_t>(i)], out.row(static_cast<std::size_t>(i)), hid);
	}
	return out;
}

Matrix logits(const ClassifierState& state, std::span<const Document> docs, Exec exec)
{
	return exec == Exec::parallel ? logits_parallel(state, docs) : logits_serial(state, docs);
}

Matrix probabilities(const Matrix& logits, double temperature)
{
	Matrix out(logits.rows, logits.cols);
	for (std::size_t i = 0; i < logits.rows; ++i)
		softmax(logits.row(i), temperature, out.row(i));
	return out;
}

std::vector<double> score_serial(std::span<const Matrix> probs, double alpha)
{
	check_stack(probs);
	const std::size_t m = probs.size(), n = probs[0].cols;
	std::vector<double> out(probs[0].rows);
	std::vector<double> rows(m * n), mean(n);
	for (std::size_t d = 0; d < out.size(); ++d)
		out[d] = score_row(probs, d, alpha, rows, mean);
	return out;
}

std::vector<double> score_parallel(std::span<const Matrix> probs, double alpha)
{
	check_stack(probs);
	const std::size_t m = probs.size(), n = probs[0].cols;
	std::vector<double> out(probs[0].rows);
	const auto count = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel
	{
		std::vector<double> rows(m * n), mean(n);
#pragma omp for schedule(static)
		for (std::ptrdiff_t d = 0; d < count; ++d)
			out[static_cast<std::size_t>(d)] = score_row(probs, static_cast<std::size_t>(d), alpha, rows, mean);
	}
	return out;
}

std::vector<double> score(std::span<const Matrix> probs, double alpha, Exec exec)
{
	return exec == Exec::parallel ? score_parallel(probs, alpha) : score_serial(probs, alpha);
}

}  // namespace rst::kernels

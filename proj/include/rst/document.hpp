#ifndef RST_DOCUMENT_HPP
#define RST_DOCUMENT_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rst {

struct Document
{
	std::string id;
	std::vector<double> features;
	std::optional<int> label;
};

// Dense row-major matrix.
struct Matrix
{
	std::size_t rows = 0;
	std::size_t cols = 0;
	std::vector<double> data;

	Matrix() = default;
	Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
	Matrix(std::size_t r, std::size_t c, std::vector<double> values);

	std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
	std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

	bool operator==(const Matrix&) const = default;
};

}  // namespace rst

#endif

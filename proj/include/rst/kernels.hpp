#ifndef RST_KERNELS_HPP
#define RST_KERNELS_HPP

#include "rst/classifier.hpp"
#include "rst/document.hpp"

#include <span>
#include <vector>

// Batch kernels over whole document sets. Every kernel has a serial reference
// and an OpenMP version; the two must agree bit for bit, since each output row
// depends only on its own input row.
namespace rst::kernels {

enum class Exec { serial, parallel };

// docs.size() x classes matrix of last-layer logits
Matrix logits_serial(const ClassifierState& state, std::span<const Document> docs);
Matrix logits_parallel(const ClassifierState& state, std::span<const Document> docs);
Matrix logits(const ClassifierState& state, std::span<const Document> docs, Exec exec);

// Row-wise softmax at the given temperature.
Matrix probabilities(const Matrix& logits, double temperature = 1.0);

// probs[i] is classifier i's (docs x classes) output; returns one candidate
// score per document.
std::vector<double> score_serial(std::span<const Matrix> probs, double alpha);
std::vector<double> score_parallel(std::span<const Matrix> probs, double alpha);
std::vector<double> score(std::span<const Matrix> probs, double alpha, Exec exec);

}  // namespace rst::kernels

#endif

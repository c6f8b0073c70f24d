#ifndef RST_DATA_HPP
#define RST_DATA_HPP

#include "rst/document.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rst {

struct Corpus
{
	std::vector<Document> documents;
	std::size_t n_classes = 0;
	std::size_t dim = 0;
	std::string provenance;

	// Throws on duplicate ids, wrong feature lengths or labels out of range.
	void validate() const;
};

struct TextRecord
{
	std::string id;
	std::string text;
	std::optional<int> label;
};

struct TextCorpus
{
	std::vector<TextRecord> records;
	std::size_t n_classes = 0;
};

struct JsonlSchema
{
	std::string id_key = "id";
	std::string text_key = "text";
	std::string label_key = "label";
	std::size_t n_classes = 0;  // 0: one more than the largest label seen
};

// One JSON object per line; blank lines are skipped. Errors carry the line number.
TextCorpus load_jsonl(const std::filesystem::path& path, const JsonlSchema& schema = {});
TextCorpus parse_jsonl(std::istream& in, const JsonlSchema& schema = {}, const std::string& source = "<stream>");

struct HashingParams
{
	std::size_t dim = std::size_t{1} << 14;
	bool lowercase = true;
	std::string token_pattern = "[A-Za-z0-9]+";
};

// Signed feature hashing: FNV-1a 64 of each token, bucket = low bits, sign = top
// bit. Rows are L2-normalised; empty text maps to the zero vector.
std::vector<std::vector<double>> featurize_hashed_bow(std::span<const std::string> texts,
                                                     const HashingParams& params = {});
Corpus featurize(const TextCorpus& text, const HashingParams& params = {});

enum class Generator { gaussian_blobs, two_rings };

struct SynthSpec
{
	Generator generator = Generator::gaussian_blobs;
	std::size_t n_classes = 2;
	std::size_t n_total = 1000;
	std::vector<double> class_weights;  // empty: balanced
	std::size_t dim = 2;
	double class_separation = 2.0;
	double overlap_noise_sigma = 1.0;
	std::uint64_t seed = 0;

	void validate() const;
};

// Deterministic in the spec. Class counts follow class_weights exactly
// (largest remainder). Ids are "d" followed by a zero-padded index.
Corpus synth(const SynthSpec& spec);

// Class means used by the blob generator, exposed for tests and benchmarks.
std::vector<std::vector<double>> blob_means(std::size_t n_classes, std::size_t dim, double separation);

struct Split
{
	std::vector<Document> labeled;
	std::vector<Document> unlabeled;      // labels stripped
	std::vector<int> unlabeled_gold;      // parallel to `unlabeled`, -1 where unknown
	std::vector<Document> test;
};

// Stratified partition. Labeled and test sets follow the corpus class
// proportions to the nearest integer; unlabeled documents without a gold label
// are used for U before any labeled ones. Every part is shuffled.
Split stratified_split(const Corpus& corpus, std::size_t n_labeled, std::size_t n_unlabeled, std::size_t n_test,
                       std::uint64_t seed);

// Flips exactly round(flip_rate * |docs|) labels to a uniformly chosen other class.
std::vector<Document> inject_label_noise(std::span<const Document> docs, double flip_rate, std::size_t n_classes,
                                         std::uint64_t seed);

// Adds `shift` to the features of exactly round(fraction * |docs|) documents.
std::vector<Document> inject_distractors(std::span<const Document> docs, double fraction,
                                         std::span<const double> shift, std::uint64_t seed);

// Versioned binary feature cache (sparse rows, little-endian host layout).
void write_feature_sidecar(std::ostream& out, const Corpus& corpus);
Corpus read_feature_sidecar(std::istream& in);

std::uint64_t fingerprint(std::span<const Document> docs, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace rst

#endif

#ifndef RST_EXPERIMENT_HPP
#define RST_EXPERIMENT_HPP

#include "rst/baselines.hpp"
#include "rst/common.hpp"
#include "rst/data.hpp"
#include "rst/eval.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rst {

class ConfigError : public ValidationError
{
public:
	using ValidationError::ValidationError;
};

enum class DataSource { synthetic, jsonl };

// Everything an experiment needs, parsed from an INI-style file with
// [data] [split] [method] [rst] [train] [experiment] [curve] sections.
// Unknown sections and keys are rejected.
struct ExperimentConfig
{
	// [data]
	DataSource source = DataSource::synthetic;
	std::filesystem::path corpus_path;
	std::filesystem::path feature_cache;
	SynthSpec synth;
	HashingParams hashing;
	double distractor_fraction = 0.0;  // of U, shifted along the first feature axis
	double distractor_shift = 0.0;

	// [split]
	std::size_t n_labeled = 100;
	std::size_t n_unlabeled = 1000;
	std::size_t n_test = 1000;
	double label_noise = 0.0;

	// [method]
	std::vector<Variant> variants{Variant::rst_full};
	MetricMode metric = MetricMode::accuracy;
	int positive_class = 1;
	double weight_pseudo = 0.5;
	double validation_fraction = 0.0;

	// [rst] + [train]
	RunConfig run;

	// [experiment]
	std::vector<std::uint64_t> seeds{1, 2, 3};
	std::filesystem::path out_dir = "rst_out";
	bool parallel_cells = false;

	// [curve]
	std::vector<std::size_t> checkpoints;
	std::vector<double> lambda_values{0.1, 0.3, 0.5, 0.7, 0.9};
	std::vector<double> ratio_values{10, 30, 50, 70, 90};
	std::vector<double> m_values{2, 3, 4, 5};

	std::string source_text;  // file contents as read

	void validate() const;
	// Canonical key=value rendering of every effective setting except the output directory.
	std::string canonical() const;
	std::string hash() const;

	VariantSpec variant_spec(Variant v) const;
	EvalSettings eval_settings() const;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

// Builds (L, U, Test) for one seed. Text corpora are featurised once per
// builder and optionally cached in the feature sidecar.
class DataBuilder
{
public:
	explicit DataBuilder(const ExperimentConfig& config);
	Split operator()(std::uint64_t seed) const;
	std::size_t n_classes() const;

private:
	const ExperimentConfig& config_;
	std::optional<Corpus> text_corpus_;
};

std::uint64_t split_fingerprint(const Split& split);

struct CompareRow
{
	Variant variant;
	std::string metric;
	double mean = 0.0;
	double stdev = 0.0;
	std::size_t n_seeds = 0;
	std::string data_fingerprint;
};

struct CompareResult
{
	std::vector<CurvePoint> per_seed;  // one row per (variant, seed, metric)
	std::vector<CompareRow> table;
};

CompareResult compare_variants(const ExperimentConfig& config, const std::vector<Variant>& variants);
void write_compare_table(std::ostream& out, const CompareResult& result, const std::string& config_hash = {});

// Command-line entry points. Exit codes: 0 success, 1 usage/config error, 2 runtime failure.
struct CommandOptions
{
	std::filesystem::path config_path;
	std::optional<std::filesystem::path> out_dir;
	std::optional<std::vector<std::uint64_t>> seeds;
	std::vector<std::string> variants;
	std::string curve;
};

int cmd_run(const CommandOptions& opts);
int cmd_compare(const CommandOptions& opts);
int cmd_curve(const CommandOptions& opts);

}  // namespace rst

#endif

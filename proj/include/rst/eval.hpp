#ifndef RST_EVAL_HPP
#define RST_EVAL_HPP

#include "rst/baselines.hpp"
#include "rst/data.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rst {

enum class MetricMode { accuracy, macro_f1, f1_positive };

std::string_view metric_name(MetricMode m);
std::optional<MetricMode> parse_metric(std::string_view name);

// counts[gold * n + predicted]
struct ConfusionMatrix
{
	std::size_t n_classes = 0;
	std::vector<std::size_t> counts;

	std::size_t at(std::size_t gold, std::size_t predicted) const { return counts[gold * n_classes + predicted]; }
	std::size_t total() const;
	// Empty denominators give 0.
	double precision(std::size_t c) const;
	double recall(std::size_t c) const;
	double f1(std::size_t c) const;
	double accuracy() const;
	double macro_f1() const;
};

struct MetricResult
{
	double value = 0.0;
	ConfusionMatrix confusion;
};

MetricResult metrics(std::span<const int> predictions, std::span<const int> gold, MetricMode mode,
                     std::size_t n_classes, int positive_class = 1);

std::vector<int> gold_labels(std::span<const Document> docs);

struct CurvePoint
{
	std::string variant;
	std::string param;
	double x = 0.0;
	std::optional<std::uint64_t> seed;  // unset on aggregate rows
	std::string aggregate;              // "mean" or "stdev" on aggregate rows
	std::string metric;
	double y = 0.0;
};

// Supplies the (L, U, Test) split for a seed.
using SplitProvider = std::function<Split(std::uint64_t seed)>;

struct EvalSettings
{
	std::vector<std::uint64_t> seeds{1, 2, 3};
	MetricMode metric = MetricMode::accuracy;
	int positive_class = 1;
	bool parallel_cells = false;
};

// Trains `spec` per seed and scores it on the test set.
double evaluate_once(const VariantSpec& spec, const Split& split, const EvalSettings& settings, std::uint64_t seed,
                     RunResult* result_out = nullptr);

// U truncated to each checkpoint size; one curve per seed plus mean and stdev rows.
std::vector<CurvePoint> drift_curve(const VariantSpec& spec, const SplitProvider& data,
                                    std::span<const std::size_t> checkpoints, const EvalSettings& settings);

enum class SweepParam { lambda, sample_ratio, classifiers };
std::string_view sweep_param_name(SweepParam p);

std::vector<CurvePoint> sweep(SweepParam param, std::span<const double> values, const VariantSpec& base,
                              const SplitProvider& data, const EvalSettings& settings);

// Test metric after every epoch of the final classifier's last training phase.
std::vector<CurvePoint> convergence_trace(Variant variant, const VariantSpec& base, const SplitProvider& data,
                                          const EvalSettings& settings);

// Mean and sample standard deviation per (variant, param, x, metric), in first-seen order.
std::vector<CurvePoint> aggregate(std::span<const CurvePoint> per_seed);

constexpr std::string_view csv_header = "variant,param,value,seed,metric,score";
void write_csv(std::ostream& out, std::span<const CurvePoint> points, const std::string& config_hash = {});
std::string format_number(double v);

}  // namespace rst

#endif

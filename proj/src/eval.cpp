#include "rst/eval.hpp"

#include "rst/common.hpp"
#include "rst/kernels.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <ostream>
#include <tuple>

namespace rst {

std::string_view metric_name(MetricMode m)
{
	switch (m) {
	case MetricMode::accuracy: return "accuracy";
	case MetricMode::macro_f1: return "macro_f1";
	case MetricMode::f1_positive: return "f1_positive";
	}
	return "?";
}

std::optional<MetricMode> parse_metric(std::string_view name)
{
	for (auto m : {MetricMode::accuracy, MetricMode::macro_f1, MetricMode::f1_positive})
		if (metric_name(m) == name)
			return m;
	return std::nullopt;
}

std::size_t ConfusionMatrix::total() const
{
	std::size_t t = 0;
	for (auto c : counts)
		t += c;
	return t;
}

double ConfusionMatrix::precision(std::size_t c) const
{
	std::size_t predicted = 0;
	for (std::size_t g = 0; g < n_classes; ++g)
		predicted += at(g, c);
	return predicted == 0 ? 0.0 : static_cast<double>(at(c, c)) / static_cast<double>(predicted);
}

double ConfusionMatrix::recall(std::size_t c) const
{
	std::size_t actual = 0;
	for (std::size_t p = 0; p < n_classes; ++p)
		actual += at(c, p);
	return actual == 0 ? 0.0 : static_cast<double>(at(c, c)) / static_cast<double>(actual);
}

double ConfusionMatrix::f1(std::size_t c) const
{
	const double p = precision(c), r = recall(c);
	return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

double ConfusionMatrix::accuracy() const
{
	const std::size_t t = total();
	if (t == 0)
		return 0.0;
	std::size_t diag = 0;
	for (std::size_t c = 0; c < n_classes; ++c)
		diag += at(c, c);
	return static_cast<double>(diag) / static_cast<double>(t);
}

double ConfusionMatrix::macro_f1() const
{
	double s = 0.0;
	for (std::size_t c = 0; c < n_classes; ++c)
		s += f1(c);
	return n_classes == 0 ? 0.0 : s / static_cast<double>(n_classes);
}

MetricResult metrics(std::span<const int> predictions, std::span<const int> gold, MetricMode mode,
                     std::size_t n_classes, int positive_class)
{
	if (predictions.size() != gold.size())
		throw ValidationError("metrics: " + std::to_string(predictions.size()) + " predictions for " +
		                      std::to_string(gold.size()) + " gold labels");
	if (n_classes < 2)
		throw ValidationError("metrics: need at least 2 classes");
	MetricResult r;
	r.confusion.n_classes = n_classes;
	r.confusion.counts.assign(n_classes * n_classes, 0);
	const auto n = static_cast<int>(n_classes);
	for (std::size_t i = 0; i < gold.size(); ++i) {
		if (gold[i] < 0 || gold[i] >= n || predictions[i] < 0 || predictions[i] >= n)
			throw ValidationError("metrics: label out of range at position " + std::to_string(i));
		++r.confusion.counts[static_cast<std::size_t>(gold[i]) * n_classes + static_cast<std::size_t>(predictions[i])];
	}
	switch (mode) {
	case MetricMode::accuracy: r.value = r.confusion.accuracy(); break;
	case MetricMode::macro_f1: r.value = r.confusion.macro_f1(); break;
	case MetricMode::f1_positive:
		if (positive_class < 0 || positive_class >= n)
			throw ValidationError("metrics: positive class out of range");
		r.value = r.confusion.f1(static_cast<std::size_t>(positive_class));
		break;
	}
	return r;
}

std::vector<int> gold_labels(std::span<const Document> docs)
{
	std::vector<int> out;
	out.reserve(docs.size());
	for (const auto& d : docs) {
		if (!d.label)
			throw ValidationError("document '" + d.id + "' has no gold label");
		out.push_back(*d.label);
	}
	return out;
}

std::string_view sweep_param_name(SweepParam p)
{
	switch (p) {
	case SweepParam::lambda: return "lambda";
	case SweepParam::sample_ratio: return "sample_ratio";
	case SweepParam::classifiers: return "m";
	}
	return "?";
}

namespace {

std::size_t class_count(const Split& split, const VariantSpec& spec)
{
	if (spec.config.n_classes > 0)
		return spec.config.n_classes;
	int top = 1;
	for (const auto* set : {&split.labeled, &split.test})
		for (const auto& d : *set)
			if (d.label)
				top = std::max(top, *d.label);
	return static_cast<std::size_t>(top) + 1;
}

double score_on(const RunResult& result, const Split& split, const VariantSpec& spec, const EvalSettings& settings)
{
	const auto gold = gold_labels(split.test);
	return metrics(predict(result, split.test), gold, settings.metric, class_count(split, spec), settings.positive_class)
	    .value;
}

// Runs `n` independent jobs, optionally in parallel; results land by index.
template<typename Job>
void run_cells(std::size_t n, bool parallel, Job&& job)
{
	std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for if (parallel) schedule(dynamic, 1)
	for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
		try {
			job(static_cast<std::size_t>(i));
		} catch (...) {
			errors[static_cast<std::size_t>(i)] = std::current_exception();
		}
	}
	for (const auto& e : errors)
		if (e)
			std::rethrow_exception(e);
}

std::vector<CurvePoint> with_aggregates(std::vector<CurvePoint> points)
{
	auto agg = aggregate(points);
	points.insert(points.end(), agg.begin(), agg.end());
	return points;
}

}  // namespace

double evaluate_once(const VariantSpec& spec, const Split& split, const EvalSettings& settings, std::uint64_t seed,
                     RunResult* result_out)
{
	VariantSpec s = spec;
	s.config.seed = seed;
	if (s.config.n_classes == 0)
		s.config.n_classes = class_count(split, spec);
	auto result = run_ablation(s, split.labeled, split.unlabeled);
	const double v = score_on(result, split, s, settings);
	if (result_out)
		*result_out = std::move(result);
	return v;
}

std::vector<CurvePoint> drift_curve(const VariantSpec& spec, const SplitProvider& data,
                                    std::span<const std::size_t> checkpoints, const EvalSettings& settings)
{
	if (!std::is_sorted(checkpoints.begin(), checkpoints.end()))
		throw ValidationError("drift checkpoints must be ascending");
	const std::size_t n_ck = checkpoints.size();
	std::vector<Split> splits;
	for (auto seed : settings.seeds)
		splits.push_back(data(seed));

	std::vector<CurvePoint> points(settings.seeds.size() * n_ck);
	run_cells(points.size(), settings.parallel_cells, [&](std::size_t cell) {
		const std::size_t si = cell / n_ck, ci = cell % n_ck;
		Split split = splits[si];
		const std::size_t keep = std::min(checkpoints[ci], split.unlabeled.size());
		split.unlabeled.resize(keep);
		split.unlabeled_gold.resize(keep);
		const double y = evaluate_once(spec, split, settings, settings.seeds[si]);
		points[cell] = {std::string(variant_name(spec.variant)), "n_unlabeled", static_cast<double>(checkpoints[ci]),
		                settings.seeds[si], "", std::string(metric_name(settings.metric)), y};
	});
	return with_aggregates(std::move(points));
}

std::vector<CurvePoint> sweep(SweepParam param, std::span<const double> values, const VariantSpec& base,
                              const SplitProvider& data, const EvalSettings& settings)
{
	if (values.empty())
		throw ValidationError("sweep needs at least one value");
	std::vector<Split> splits;
	for (auto seed : settings.seeds)
		splits.push_back(data(seed));
	const std::size_t n_seeds = settings.seeds.size();

	std::vector<CurvePoint> points(values.size() * n_seeds);
	run_cells(points.size(), settings.parallel_cells, [&](std::size_t cell) {
		const std::size_t vi = cell / n_seeds, si = cell % n_seeds;
		VariantSpec spec = base;
		switch (param) {
		case SweepParam::lambda: spec.config.train.lambda = values[vi]; break;
		case SweepParam::sample_ratio: spec.config.sample_ratio = values[vi]; break;
		case SweepParam::classifiers:
			if (values[vi] < 1.0 || values[vi] != std::floor(values[vi]))
				throw ValidationError("classifier count must be a positive integer");
			spec.config.classifiers = static_cast<std::size_t>(values[vi]);
			break;
		}
		const double y = evaluate_once(spec, splits[si], settings, settings.seeds[si]);
		points[cell] = {std::string(variant_name(spec.variant)), std::string(sweep_param_name(param)), values[vi],
		                settings.seeds[si], "", std::string(metric_name(settings.metric)), y};
	});
	return with_aggregates(std::move(points));
}

std::vector<CurvePoint> convergence_trace(Variant variant, const VariantSpec& base, const SplitProvider& data,
                                          const EvalSettings& settings)
{
	VariantSpec spec = base;
	spec.variant = variant;
	std::vector<std::vector<CurvePoint>> per_seed(settings.seeds.size());
	run_cells(per_seed.size(), settings.parallel_cells, [&](std::size_t si) {
		const Split split = data(settings.seeds[si]);
		VariantSpec s = spec;
		s.config.seed = settings.seeds[si];
		if (s.config.n_classes == 0)
			s.config.n_classes = class_count(split, spec);
		const auto gold = gold_labels(split.test);
		RunHooks hooks;
		hooks.final_epoch = [&](std::size_t epoch, const ClassifierState& state) {
			RunResult probe;
			probe.models.push_back(state);
			const double y = metrics(predict(probe, split.test), gold, settings.metric, s.config.n_classes,
			                         settings.positive_class)
			                     .value;
			per_seed[si].push_back({std::string(variant_name(variant)), "epoch", static_cast<double>(epoch),
			                        settings.seeds[si], "", std::string(metric_name(settings.metric)), y});
		};
		run_ablation(s, split.labeled, split.unlabeled, hooks);
	});
	std::vector<CurvePoint> points;
	for (auto& ps : per_seed)
		points.insert(points.end(), ps.begin(), ps.end());
	return with_aggregates(std::move(points));
}

std::vector<CurvePoint> aggregate(std::span<const CurvePoint> per_seed)
{
	using Key = std::tuple<std::string, std::string, double, std::string>;
	std::vector<Key> order;
	std::map<Key, std::vector<double>> groups;
	for (const auto& p : per_seed) {
		if (!p.seed)
			continue;
		Key k{p.variant, p.param, p.x, p.metric};
		auto [it, fresh] = groups.try_emplace(k);
		if (fresh)
			order.push_back(k);
		it->second.push_back(p.y);
	}
	std::vector<CurvePoint> out;
	for (const auto& k : order) {
		const auto& ys = groups[k];
		double mean = 0.0;
		for (double y : ys)
			mean += y;
		mean /= static_cast<double>(ys.size());
		double var = 0.0;
		for (double y : ys)
			var += (y - mean) * (y - mean);
		const double sd = ys.size() > 1 ? std::sqrt(var / static_cast<double>(ys.size() - 1)) : 0.0;
		const auto& [variant, param, x, metric] = k;
		out.push_back({variant, param, x, std::nullopt, "mean", metric, mean});
		out.push_back({variant, param, x, std::nullopt, "stdev", metric, sd});
	}
	return out;
}

std::string format_number(double v)
{
	char buf[40];
	if (v == std::floor(v) && std::abs(v) < 1e15)
		std::snprintf(buf, sizeof buf, "%.0f", v);
	else
		std::snprintf(buf, sizeof buf, "%.10g", v);
	return buf;
}

void write_csv(std::ostream& out, std::span<const CurvePoint> points, const std::string& config_hash)
{
	if (!config_hash.empty())
		out << "# config_hash=" << config_hash << '\n';
	out << csv_header << '\n';
	for (const auto& p : points) {
		out << p.variant << ',' << p.param << ',' << format_number(p.x) << ','
		    << (p.seed ? std::to_string(*p.seed) : p.aggregate) << ',' << p.metric << ',' << format_number(p.y)
		    << '\n';
	}
}

}  // namespace rst

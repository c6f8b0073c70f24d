#include "rst/experiment.hpp"

#include "rst/common.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

namespace rst {

namespace {

namespace fs = std::filesystem;

std::string trim(std::string s)
{
	const auto b = s.find_first_not_of(" \t\r");
	const auto e = s.find_last_not_of(" \t\r");
	return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s)
{
	std::vector<std::string> out;
	std::stringstream ss(s);
	std::string item;
	while (std::getline(ss, item, ','))
		if (auto t = trim(item); !t.empty())
			out.push_back(t);
	return out;
}

double to_real(const std::string& key, const std::string& v)
{
	double out = 0.0;
	const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
	if (ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(out))
		throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
	return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v)
{
	std::uint64_t out = 0;
	const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
	if (ec != std::errc{} || p != v.data() + v.size())
		throw ConfigError("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
	return out;
}

bool to_bool(const std::string& key, const std::string& v)
{
	if (v == "true" || v == "1" || v == "yes" || v == "on")
		return true;
	if (v == "false" || v == "0" || v == "no" || v == "off")
		return false;
	throw ConfigError("config: '" + key + "' expects a boolean, got '" + v + "'");
}

template<typename T, typename F>
std::vector<T> to_list(const std::string& key, const std::string& v, F conv)
{
	std::vector<T> out;
	for (const auto& item : split_list(v))
		out.push_back(static_cast<T>(conv(key, item)));
	return out;
}

template<typename T>
std::string join(const std::vector<T>& xs, const std::function<std::string(const T&)>& fmt)
{
	std::string s;
	for (std::size_t i = 0; i < xs.size(); ++i)
		s += (i ? "," : "") + fmt(xs[i]);
	return s;
}

std::string num(double v)
{
	return format_number(v);
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters()
{
	static const std::map<std::string, Setter> table = {
	    {"data.source",
	     [](auto& c, auto& k, auto& v) {
		     if (v == "synthetic")
			     c.source = DataSource::synthetic;
		     else if (v == "jsonl")
			     c.source = DataSource::jsonl;
		     else
			     throw ConfigError("config: '" + k + "' must be synthetic or jsonl");
	     }},
	    {"data.path", [](auto& c, auto&, auto& v) { c.corpus_path = v; }},
	    {"data.feature_cache", [](auto& c, auto&, auto& v) { c.feature_cache = v; }},
	    {"data.generator",
	     [](auto& c, auto& k, auto& v) {
		     if (v == "gaussian_blobs")
			     c.synth.generator = Generator::gaussian_blobs;
		     else if (v == "two_rings")
			     c.synth.generator = Generator::two_rings;
		     else
			     throw ConfigError("config: '" + k + "' must be gaussian_blobs or two_rings");
	     }},
	    {"data.n_classes", [](auto& c, auto& k, auto& v) { c.synth.n_classes = to_uint(k, v); }},
	    {"data.n_total", [](auto& c, auto& k, auto& v) { c.synth.n_total = to_uint(k, v); }},
	    {"data.class_weights", [](auto& c, auto& k, auto& v) { c.synth.class_weights = to_list<double>(k, v, to_real); }},
	    {"data.dim", [](auto& c, auto& k, auto& v) { c.synth.dim = to_uint(k, v); }},
	    {"data.separation", [](auto& c, auto& k, auto& v) { c.synth.class_separation = to_real(k, v); }},
	    {"data.sigma", [](auto& c, auto& k, auto& v) { c.synth.overlap_noise_sigma = to_real(k, v); }},
	    {"data.seed", [](auto& c, auto& k, auto& v) { c.synth.seed = to_uint(k, v); }},
	    {"data.distractor_fraction", [](auto& c, auto& k, auto& v) { c.distractor_fraction = to_real(k, v); }},
	    {"data.distractor_shift", [](auto& c, auto& k, auto& v) { c.distractor_shift = to_real(k, v); }},
	    {"data.hash_dim", [](auto& c, auto& k, auto& v) { c.hashing.dim = to_uint(k, v); }},
	    {"data.lowercase", [](auto& c, auto& k, auto& v) { c.hashing.lowercase = to_bool(k, v); }},
	    {"data.token_pattern", [](auto& c, auto&, auto& v) { c.hashing.token_pattern = v; }},

	    {"split.labeled", [](auto& c, auto& k, auto& v) { c.n_labeled = to_uint(k, v); }},
	    {"split.unlabeled", [](auto& c, auto& k, auto& v) { c.n_unlabeled = to_uint(k, v); }},
	    {"split.test", [](auto& c, auto& k, auto& v) { c.n_test = to_uint(k, v); }},
	    {"split.label_noise", [](auto& c, auto& k, auto& v) { c.label_noise = to_real(k, v); }},

	    {"method.variant",
	     [](auto& c, auto& k, auto& v) {
		     c.variants.clear();
		     for (const auto& name : split_list(v)) {
			     auto var = parse_variant(name);
			     if (!var)
				     throw ConfigError("config: '" + k + "' names unknown variant '" + name + "'");
			     c.variants.push_back(*var);
		     }
	     }},
	    {"method.metric",
	     [](auto& c, auto& k, auto& v) {
		     auto m = parse_metric(v);
		     if (!m)
			     throw ConfigError("config: '" + k + "' must be accuracy, macro_f1 or f1_positive");
		     c.metric = *m;
	     }},
	    {"method.positive_class", [](auto& c, auto& k, auto& v) { c.positive_class = static_cast<int>(to_uint(k, v)); }},
	    {"method.weight_pseudo", [](auto& c, auto& k, auto& v) { c.weight_pseudo = to_real(k, v); }},
	    {"method.validation_fraction", [](auto& c, auto& k, auto& v) { c.validation_fraction = to_real(k, v); }},

	    {"rst.K", [](auto& c, auto& k, auto& v) { c.run.step_size = to_uint(k, v); }},
	    {"rst.R", [](auto& c, auto& k, auto& v) { c.run.sample_ratio = to_real(k, v); }},
	    {"rst.alpha", [](auto& c, auto& k, auto& v) { c.run.alpha = to_real(k, v); }},
	    {"rst.m", [](auto& c, auto& k, auto& v) { c.run.classifiers = to_uint(k, v); }},
	    {"rst.lambda", [](auto& c, auto& k, auto& v) { c.run.train.lambda = to_real(k, v); }},
	    {"rst.temperature", [](auto& c, auto& k, auto& v) { c.run.train.temperature = to_real(k, v); }},
	    {"rst.confidence_threshold", [](auto& c, auto& k, auto& v) { c.run.confidence_threshold = to_real(k, v); }},
	    {"rst.growth_cap_fraction", [](auto& c, auto& k, auto& v) { c.run.growth_cap_fraction = to_real(k, v); }},
	    {"rst.mix_fraction", [](auto& c, auto& k, auto& v) { c.run.mix_fraction = to_real(k, v); }},

	    {"train.hidden_width", [](auto& c, auto& k, auto& v) { c.run.hidden_width = to_uint(k, v); }},
	    {"train.learning_rate", [](auto& c, auto& k, auto& v) { c.run.train.learning_rate = to_real(k, v); }},
	    {"train.batch_size", [](auto& c, auto& k, auto& v) { c.run.train.batch_size = to_uint(k, v); }},
	    {"train.epochs", [](auto& c, auto& k, auto& v) { c.run.train.epochs = to_uint(k, v); }},
	    {"train.optimizer",
	     [](auto& c, auto& k, auto& v) {
		     if (v == "adam")
			     c.run.train.optimizer = OptimizerKind::adam;
		     else if (v == "sgd")
			     c.run.train.optimizer = OptimizerKind::sgd;
		     else
			     throw ConfigError("config: '" + k + "' must be adam or sgd");
	     }},
	    {"train.linear_decay", [](auto& c, auto& k, auto& v) { c.run.train.linear_decay = to_bool(k, v); }},
	    {"train.parallel",
	     [](auto& c, auto& k, auto& v) {
		     c.run.execution = to_bool(k, v) ? Execution::parallel : Execution::sequential;
	     }},

	    {"experiment.seeds", [](auto& c, auto& k, auto& v) { c.seeds = to_list<std::uint64_t>(k, v, to_uint); }},
	    {"experiment.out", [](auto& c, auto&, auto& v) { c.out_dir = v; }},
	    {"experiment.parallel_cells", [](auto& c, auto& k, auto& v) { c.parallel_cells = to_bool(k, v); }},

	    {"curve.checkpoints",
	     [](auto& c, auto& k, auto& v) { c.checkpoints = to_list<std::size_t>(k, v, to_uint); }},
	    {"curve.lambda_values", [](auto& c, auto& k, auto& v) { c.lambda_values = to_list<double>(k, v, to_real); }},
	    {"curve.ratio_values", [](auto& c, auto& k, auto& v) { c.ratio_values = to_list<double>(k, v, to_real); }},
	    {"curve.m_values", [](auto& c, auto& k, auto& v) { c.m_values = to_list<double>(k, v, to_real); }},
	};
	return table;
}

}  // namespace

void ExperimentConfig::validate() const
{
	if (source == DataSource::jsonl && corpus_path.empty())
		throw ConfigError("config: data.path is required for jsonl corpora");
	if (source == DataSource::synthetic)
		synth.validate();
	if (!(distractor_fraction >= 0.0 && distractor_fraction <= 1.0))
		throw ConfigError("config: data.distractor_fraction must lie in [0, 1]");
	if (!(label_noise >= 0.0 && label_noise <= 1.0))
		throw ConfigError("config: split.label_noise must lie in [0, 1]");
	if (n_labeled == 0)
		throw ConfigError("config: split.labeled must be positive");
	if (n_test == 0)
		throw ConfigError("config: split.test must be positive");
	if (variants.empty())
		throw ConfigError("config: method.variant is empty");
	if (seeds.empty())
		throw ConfigError("config: experiment.seeds is empty");
	if (!std::is_sorted(checkpoints.begin(), checkpoints.end()))
		throw ConfigError("config: curve.checkpoints must be ascending");
	try {
		run.validate();
		for (auto v : variants)
			variant_spec(v).validate();
	} catch (const ValidationError& e) {
		throw ConfigError(std::string("config: ") + e.what());
	}
	if (source == DataSource::synthetic && run.n_classes != 0 && run.n_classes != synth.n_classes)
		throw ConfigError("config: class count mismatch");
}

std::string ExperimentConfig::canonical() const
{
	std::map<std::string, std::string> kv;
	kv["data.source"] = source == DataSource::synthetic ? "synthetic" : "jsonl";
	if (source == DataSource::jsonl) {
		kv["data.path"] = corpus_path.string();
		kv["data.hash_dim"] = std::to_string(hashing.dim);
		kv["data.lowercase"] = hashing.lowercase ? "true" : "false";
		kv["data.token_pattern"] = hashing.token_pattern;
	} else {
		kv["data.generator"] = synth.generator == Generator::gaussian_blobs ? "gaussian_blobs" : "two_rings";
		kv["data.n_classes"] = std::to_string(synth.n_classes);
		kv["data.n_total"] = std::to_string(synth.n_total);
		kv["data.class_weights"] = join<double>(synth.class_weights, num);
		kv["data.dim"] = std::to_string(synth.dim);
		kv["data.separation"] = num(synth.class_separation);
		kv["data.sigma"] = num(synth.overlap_noise_sigma);
		kv["data.seed"] = std::to_string(synth.seed);
	}
	kv["data.distractor_fraction"] = num(distractor_fraction);
	kv["data.distractor_shift"] = num(distractor_shift);
	kv["split.labeled"] = std::to_string(n_labeled);
	kv["split.unlabeled"] = std::to_string(n_unlabeled);
	kv["split.test"] = std::to_string(n_test);
	kv["split.label_noise"] = num(label_noise);
	kv["method.variant"] = join<Variant>(variants, [](const Variant& v) { return std::string(variant_name(v)); });
	kv["method.metric"] = std::string(metric_name(metric));
	kv["method.positive_class"] = std::to_string(positive_class);
	kv["method.weight_pseudo"] = num(weight_pseudo);
	kv["method.validation_fraction"] = num(validation_fraction);
	kv["rst.K"] = std::to_string(run.step_size);
	kv["rst.R"] = num(run.sample_ratio);
	kv["rst.alpha"] = num(run.alpha);
	kv["rst.m"] = std::to_string(run.classifiers);
	kv["rst.lambda"] = num(run.train.lambda);
	kv["rst.temperature"] = num(run.train.temperature);
	kv["rst.confidence_threshold"] = num(run.confidence_threshold);
	kv["rst.growth_cap_fraction"] = num(run.growth_cap_fraction);
	kv["rst.mix_fraction"] = num(run.mix_fraction);
	kv["train.hidden_width"] = std::to_string(run.hidden_width);
	kv["train.learning_rate"] = num(run.train.learning_rate);
	kv["train.batch_size"] = std::to_string(run.train.batch_size);
	kv["train.epochs"] = std::to_string(run.train.epochs);
	kv["train.optimizer"] = run.train.optimizer == OptimizerKind::adam ? "adam" : "sgd";
	kv["train.linear_decay"] = run.train.linear_decay ? "true" : "false";
	kv["experiment.seeds"] =
	    join<std::uint64_t>(seeds, [](const std::uint64_t& s) { return std::to_string(s); });
	kv["curve.checkpoints"] = join<std::size_t>(checkpoints, [](const std::size_t& s) { return std::to_string(s); });
	kv["curve.lambda_values"] = join<double>(lambda_values, num);
	kv["curve.ratio_values"] = join<double>(ratio_values, num);
	kv["curve.m_values"] = join<double>(m_values, num);

	std::string out;
	for (const auto& [k, v] : kv)
		out += k + "=" + v + "\n";
	return out;
}

std::string ExperimentConfig::hash() const
{
	return hex64(fnv1a(canonical()));
}

VariantSpec ExperimentConfig::variant_spec(Variant v) const
{
	VariantSpec spec;
	spec.variant = v;
	spec.weight_pseudo = weight_pseudo;
	spec.config = run;
	spec.validation_fraction = v == Variant::self_train ? validation_fraction : 0.0;
	return spec;
}

EvalSettings ExperimentConfig::eval_settings() const
{
	EvalSettings s;
	s.seeds = seeds;
	s.metric = metric;
	s.positive_class = positive_class;
	s.parallel_cells = parallel_cells;
	return s;
}

ExperimentConfig parse_config(std::istream& in)
{
	std::stringstream buffer;
	buffer << in.rdbuf();
	ExperimentConfig cfg;
	cfg.source_text = buffer.str();

	boost::property_tree::ptree tree;
	try {
		std::istringstream text(cfg.source_text);
		boost::property_tree::read_ini(text, tree);
	} catch (const boost::property_tree::ini_parser_error& e) {
		throw ConfigError(std::string("config: ") + e.what());
	}
	const auto& table = setters();
	for (const auto& [section, body] : tree) {
		if (body.empty() && !body.data().empty())
			throw ConfigError("config: key '" + section + "' must live inside a [section]");
		for (const auto& [key, value] : body) {
			const std::string full = section + "." + key;
			auto it = table.find(full);
			if (it == table.end())
				throw ConfigError("config: unknown key '" + key + "' in section [" + section + "]");
			it->second(cfg, full, trim(value.data()));
		}
	}
	if (cfg.source == DataSource::synthetic)
		cfg.run.n_classes = cfg.synth.n_classes;
	cfg.validate();
	return cfg;
}

ExperimentConfig load_config(const fs::path& path)
{
	std::ifstream in(path);
	if (!in)
		throw ConfigError("config: cannot read '" + path.string() + "'");
	auto cfg = parse_config(in);
	// relative corpus paths resolve against the config file
	if (!cfg.corpus_path.empty() && cfg.corpus_path.is_relative())
		cfg.corpus_path = path.parent_path() / cfg.corpus_path;
	if (!cfg.feature_cache.empty() && cfg.feature_cache.is_relative())
		cfg.feature_cache = path.parent_path() / cfg.feature_cache;
	return cfg;
}

DataBuilder::DataBuilder(const ExperimentConfig& config) : config_(config)
{
	if (config.source != DataSource::jsonl)
		return;
	if (!config.feature_cache.empty() && fs::exists(config.feature_cache)) {
		std::ifstream in(config.feature_cache, std::ios::binary);
		text_corpus_ = read_feature_sidecar(in);
		if (text_corpus_->dim != config.hashing.dim)
			throw ConfigError("feature cache '" + config.feature_cache.string() + "' has dim " +
			                  std::to_string(text_corpus_->dim) + ", config asks for " +
			                  std::to_string(config.hashing.dim));
		return;
	}
	text_corpus_ = featurize(load_jsonl(config.corpus_path), config.hashing);
	if (!config.feature_cache.empty()) {
		std::ofstream out(config.feature_cache, std::ios::binary);
		write_feature_sidecar(out, *text_corpus_);
	}
}

std::size_t DataBuilder::n_classes() const
{
	return text_corpus_ ? text_corpus_->n_classes : config_.synth.n_classes;
}

Split DataBuilder::operator()(std::uint64_t seed) const
{
	Corpus synthetic;
	const Corpus* corpus = nullptr;
	if (text_corpus_) {
		corpus = &*text_corpus_;
	} else {
		SynthSpec spec = config_.synth;
		spec.seed = derive_seed(config_.synth.seed, seed);
		synthetic = synth(spec);
		corpus = &synthetic;
	}
	const std::uint64_t base = derive_seed(config_.synth.seed, seed, 0x5b1d);
	Split split =
	    stratified_split(*corpus, config_.n_labeled, config_.n_unlabeled, config_.n_test, derive_seed(base, 1));
	if (config_.label_noise > 0.0)
		split.labeled = inject_label_noise(split.labeled, config_.label_noise, corpus->n_classes, derive_seed(base, 2));
	if (config_.distractor_fraction > 0.0) {
		std::vector<double> shift(corpus->dim, 0.0);
		shift[0] = config_.distractor_shift;
		split.unlabeled = inject_distractors(split.unlabeled, config_.distractor_fraction, shift, derive_seed(base, 3));
	}
	return split;
}

std::uint64_t split_fingerprint(const Split& split)
{
	std::uint64_t h = fingerprint(split.labeled);
	h = fingerprint(split.unlabeled, h);
	h = fingerprint(split.test, h);
	return h;
}

CompareResult compare_variants(const ExperimentConfig& config, const std::vector<Variant>& variants)
{
	if (variants.size() < 2)
		throw ConfigError("compare needs at least 2 variants");
	DataBuilder data(config);
	const auto settings = config.eval_settings();
	std::vector<Split> splits;
	std::uint64_t data_print = fnv1a_offset;
	for (auto seed : config.seeds) {
		splits.push_back(data(seed));
		data_print = mix_seed(data_print, split_fingerprint(splits.back()));
	}

	const std::size_t n_seeds = config.seeds.size();
	std::vector<CurvePoint> cells(variants.size() * n_seeds);
	std::vector<std::exception_ptr> errors(cells.size());
#pragma omp parallel for if (config.parallel_cells) schedule(dynamic, 1)
	for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(cells.size()); ++i) {
		const auto cell = static_cast<std::size_t>(i);
		const std::size_t vi = cell / n_seeds, si = cell % n_seeds;
		try {
			const double y = evaluate_once(config.variant_spec(variants[vi]), splits[si], settings, config.seeds[si]);
			cells[cell] = {std::string(variant_name(variants[vi])), "none", 0.0, config.seeds[si], "",
			               std::string(metric_name(config.metric)), y};
		} catch (...) {
			errors[cell] = std::current_exception();
		}
	}
	for (const auto& e : errors)
		if (e)
			std::rethrow_exception(e);

	CompareResult result;
	result.per_seed = cells;
	const auto agg = aggregate(cells);
	for (std::size_t vi = 0; vi < variants.size(); ++vi) {
		CompareRow row{variants[vi], std::string(metric_name(config.metric)), agg[2 * vi].y, agg[2 * vi + 1].y,
		               n_seeds, hex64(data_print)};
		result.table.push_back(row);
	}
	return result;
}

void write_compare_table(std::ostream& out, const CompareResult& result, const std::string& config_hash)
{
	if (!config_hash.empty())
		out << "# config_hash=" << config_hash << '\n';
	out << "variant,metric,mean,stdev,seeds,data_fingerprint\n";
	for (const auto& r : result.table)
		out << variant_name(r.variant) << ',' << r.metric << ',' << format_number(r.mean) << ','
		    << format_number(r.stdev) << ',' << r.n_seeds << ',' << r.data_fingerprint << '\n';
}

namespace {

void report_error(const std::string& kind, const std::string& message)
{
	nlohmann::json j{{"status", "error"}, {"kind", kind}, {"message", message}};
	std::cerr << j.dump() << '\n';
}

void log(const std::string& line)
{
	std::cerr << "[rst] " << line << '\n';
}

ExperimentConfig prepare(const CommandOptions& opts)
{
	auto cfg = load_config(opts.config_path);
	if (opts.out_dir)
		cfg.out_dir = *opts.out_dir;
	if (opts.seeds) {
		if (opts.seeds->empty())
			throw ConfigError("--seeds is empty");
		cfg.seeds = *opts.seeds;
	}
	if (!opts.variants.empty()) {
		cfg.variants.clear();
		for (const auto& name : opts.variants) {
			auto v = parse_variant(name);
			if (!v)
				throw ConfigError("unknown variant '" + name + "'");
			cfg.variants.push_back(*v);
		}
	}
	cfg.validate();
	fs::create_directories(cfg.out_dir);
	std::ofstream(cfg.out_dir / "config.ini") << cfg.source_text;
	std::ofstream(cfg.out_dir / "config.effective.ini") << "# config_hash=" << cfg.hash() << '\n' << cfg.canonical();
	return cfg;
}

template<typename Body>
int guarded(const CommandOptions& opts, Body&& body)
{
	try {
		const auto cfg = prepare(opts);
		body(cfg);
		return 0;
	} catch (const ValidationError& e) {
		report_error("config", e.what());
		return 1;
	} catch (const std::exception& e) {
		report_error("runtime", e.what());
		return 2;
	}
}

std::string file_stem(Variant v, std::uint64_t seed)
{
	return std::string(variant_name(v)) + "_seed" + std::to_string(seed);
}

}  // namespace

int cmd_run(const CommandOptions& opts)
{
	return guarded(opts, [](const ExperimentConfig& cfg) {
		DataBuilder data(cfg);
		const auto hash = cfg.hash();
		const auto settings = cfg.eval_settings();
		const std::size_t n_classes = data.n_classes();
		std::vector<CurvePoint> points;
		for (auto variant : cfg.variants) {
			for (auto seed : cfg.seeds) {
				const Split split = data(seed);
				RunResult result;
				evaluate_once(cfg.variant_spec(variant), split, settings, seed, &result);

				const auto gold = gold_labels(split.test);
				const auto pred = predict(result, split.test);
				std::vector<MetricMode> modes{MetricMode::accuracy, MetricMode::macro_f1};
				if (n_classes == 2)
					modes.push_back(MetricMode::f1_positive);
				for (auto mode : modes) {
					const double y = metrics(pred, gold, mode, n_classes, cfg.positive_class).value;
					points.push_back({std::string(variant_name(variant)), "none", 0.0, seed, "",
					                  std::string(metric_name(mode)), y});
				}
				log(std::string(variant_name(variant)) + " seed " + std::to_string(seed) + " " +
				    std::string(metric_name(cfg.metric)) + "=" +
				    format_number(metrics(pred, gold, cfg.metric, n_classes, cfg.positive_class).value) + " (" +
				    std::to_string(result.report.iterations.size()) + " iterations)");

				const auto stem = file_stem(variant, seed);
				std::ofstream report(cfg.out_dir / ("report_" + stem + ".jsonl"));
				write_report_jsonl(report, result.report, hash, seed);

				Checkpoint ckpt;
				ckpt.meta = {{"config_hash", hash},
				             {"seed", std::to_string(seed)},
				             {"variant", std::string(variant_name(variant))},
				             {"data_fingerprint", hex64(split_fingerprint(split))},
				             {"majority_vote", result.majority_vote ? "true" : "false"}};
				ckpt.models = result.models;
				std::ofstream model(cfg.out_dir / ("model_" + stem + ".ckpt"));
				write_checkpoint(model, ckpt);
			}
		}
		auto all = points;
		const auto agg = aggregate(points);
		all.insert(all.end(), agg.begin(), agg.end());
		std::ofstream csv(cfg.out_dir / "metrics.csv");
		write_csv(csv, all, hash);
		log("wrote " + (cfg.out_dir / "metrics.csv").string());
	});
}

int cmd_compare(const CommandOptions& opts)
{
	return guarded(opts, [](const ExperimentConfig& cfg) {
		const auto result = compare_variants(cfg, cfg.variants);
		const auto hash = cfg.hash();
		auto rows = result.per_seed;
		const auto agg = aggregate(rows);
		rows.insert(rows.end(), agg.begin(), agg.end());
		std::ofstream csv(cfg.out_dir / "compare.csv");
		write_csv(csv, rows, hash);
		std::ofstream table(cfg.out_dir / "compare_table.csv");
		write_compare_table(table, result, hash);
		write_compare_table(std::cerr, result);
	});
}

int cmd_curve(const CommandOptions& opts)
{
	static const std::set<std::string> kinds{"drift", "lambda", "ratio", "m", "convergence"};
	if (!kinds.contains(opts.curve)) {
		report_error("usage", "unknown curve '" + opts.curve + "' (drift, lambda, ratio, m, convergence)");
		return 1;
	}
	return guarded(opts, [&](const ExperimentConfig& cfg) {
		DataBuilder data(cfg);
		const auto settings = cfg.eval_settings();
		const SplitProvider provider = [&](std::uint64_t seed) { return data(seed); };
		auto need = [&](const auto& values, const char* key) {
			if (values.empty())
				throw ConfigError(std::string("config: curve.") + key + " is empty");
		};
		std::vector<CurvePoint> points;
		for (auto variant : cfg.variants) {
			const auto spec = cfg.variant_spec(variant);
			std::vector<CurvePoint> part;
			if (opts.curve == "drift") {
				need(cfg.checkpoints, "checkpoints");
				part = drift_curve(spec, provider, cfg.checkpoints, settings);
			} else if (opts.curve == "lambda") {
				need(cfg.lambda_values, "lambda_values");
				part = sweep(SweepParam::lambda, cfg.lambda_values, spec, provider, settings);
			} else if (opts.curve == "ratio") {
				need(cfg.ratio_values, "ratio_values");
				part = sweep(SweepParam::sample_ratio, cfg.ratio_values, spec, provider, settings);
			} else if (opts.curve == "m") {
				need(cfg.m_values, "m_values");
				part = sweep(SweepParam::classifiers, cfg.m_values, spec, provider, settings);
			} else {
				part = convergence_trace(variant, spec, provider, settings);
			}
			points.insert(points.end(), part.begin(), part.end());
		}
		std::ofstream csv(cfg.out_dir / ("curve_" + opts.curve + ".csv"));
		write_csv(csv, points, cfg.hash());
		log("wrote " + (cfg.out_dir / ("curve_" + opts.curve + ".csv")).string());
	});
}

}  // namespace rst

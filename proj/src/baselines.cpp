#include "rst/baselines.hpp"

#include "rst/common.hpp"
#include "rst/eval.hpp"
#include "rst/kernels.hpp"

#include <algorithm>
#include <array>
#include <exception>

namespace rst {

namespace {

enum : std::uint64_t {
	tag_bootstrap = 0xb007,
	tag_member_init = 1,
	tag_member_train,
	tag_validation = 0x7a11d,
	tag_final = 0xf17a1,
};

constexpr std::array<std::pair<Variant, std::string_view>, 7> variant_names{{
    {Variant::self_train, "self_train"},
    {Variant::weighted_aug, "weighted_aug"},
    {Variant::tri_entropy, "tri_entropy"},
    {Variant::rst_no_subsample, "rst_no_subsample"},
    {Variant::rst_no_pretrain, "rst_no_pretrain"},
    {Variant::rst_plain_ce, "rst_plain_ce"},
    {Variant::rst_full, "rst_full"},
}};

ClassifierState fit_hard(std::span<const Document> docs, std::size_t n_classes, const RunConfig& cfg,
                         std::uint64_t seed, const EpochHook& hook = {})
{
	auto state =
	    ClassifierState::init(docs[0].features.size(), n_classes, cfg.hidden_width, derive_seed(seed, tag_member_init));
	TrainParams params = cfg.train;
	params.seed = derive_seed(seed, tag_member_train);
	train_hard(state, docs, {}, params, hook);
	return state;
}

void move_selected(const Selection& sel, std::vector<Document>& unlabeled, std::vector<Document>& pool,
                   std::vector<PseudoLabel>& pseudo, std::size_t iteration, IterationRecord& rec)
{
	std::vector<char> taken(unlabeled.size(), 0);
	for (const auto& c : sel.chosen) {
		const Document& d = unlabeled[c.index];
		pseudo.push_back(PseudoLabel::make(d, c.mean_logits, iteration));
		pool.push_back({d.id, d.features, pseudo.back().hard_label});
		rec.selected_ids.push_back(c.doc_id);
		taken[c.index] = 1;
	}
	if (!sel.chosen.empty()) {
		rec.max_score = sel.chosen.front().score;
		rec.min_score = sel.chosen.back().score;
	}
	std::size_t w = 0;
	for (std::size_t r = 0; r < unlabeled.size(); ++r)
		if (!taken[r]) {
			if (w != r)
				unlabeled[w] = std::move(unlabeled[r]);
			++w;
		}
	unlabeled.resize(w);
}

RunResult self_train_core(std::span<const Document> labeled, std::span<const Document> unlabeled,
                          const RunConfig& cfg, std::optional<std::size_t> cap, const EpochHook& hook)
{
	cfg.validate();
	check_inputs(labeled, unlabeled);
	const std::size_t n_classes = resolve_classes(labeled, cfg);
	RunConfig single = cfg;
	single.classifiers = 1;

	RunResult result;
	result.report.variant = "self_train";
	result.report.config_fingerprint = cfg.fingerprint();
	std::vector<Document> pool(labeled.begin(), labeled.end());
	std::vector<Document> rest(unlabeled.begin(), unlabeled.end());
	const std::size_t limit = cap.value_or(unlabeled.size());

	for (std::size_t iteration = 1; !rest.empty() && result.pseudo_labels.size() < limit; ++iteration) {
		const auto state = fit_hard(pool, n_classes, cfg, derive_seed(cfg.seed, iteration, 0));
		const Matrix logits[] = {kernels::logits(
		    state, rest, cfg.execution == Execution::parallel ? kernels::Exec::parallel : kernels::Exec::serial)};
		const auto scored = label_and_score(logits, rest, single, Ranking::confidence);
		auto sel = select_top(scored, cfg.step_size, labeled.size(), result.pseudo_labels.size(), cfg);
		if (sel.chosen.size() > limit - result.pseudo_labels.size())
			sel.chosen.resize(limit - result.pseudo_labels.size());

		IterationRecord rec;
		rec.iteration = iteration;
		rec.step = sel.step;
		rec.n_agree = scored.n_agree();
		rec.n_throttled = scored.throttled.size();
		rec.tier = sel.tier;
		move_selected(sel, rest, pool, result.pseudo_labels, iteration, rec);
		rec.labeled_size = labeled.size();
		rec.pseudo_size = result.pseudo_labels.size();
		rec.unlabeled_size = rest.size();
		result.report.iterations.push_back(std::move(rec));
	}

	result.models.push_back(fit_hard(pool, n_classes, cfg, derive_seed(cfg.seed, tag_final), hook));
	result.report.final_fingerprint = result.models.front().fingerprint();
	return result;
}

// Stratified hold-out of `fraction` of L.
std::pair<std::vector<Document>, std::vector<Document>> hold_out(std::span<const Document> labeled, double fraction,
                                                                 std::size_t n_classes, std::uint64_t seed)
{
	std::vector<std::vector<Document>> by_class(n_classes);
	for (const auto& d : labeled)
		by_class[static_cast<std::size_t>(*d.label)].push_back(d);
	Rng rng(seed);
	std::vector<Document> train, val;
	for (auto& docs : by_class) {
		rng.shuffle(docs);
		const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(docs.size())));
		for (std::size_t i = 0; i < docs.size(); ++i)
			(i < k && i + 1 < docs.size() ? val : train).push_back(std::move(docs[i]));
	}
	return {std::move(train), std::move(val)};
}

RunResult tri_entropy_core(std::span<const Document> labeled, std::span<const Document> unlabeled,
                           const RunConfig& cfg, const EpochHook& hook)
{
	cfg.validate();
	check_inputs(labeled, unlabeled);
	const std::size_t n_classes = resolve_classes(labeled, cfg);
	constexpr std::size_t members = 3;
	RunConfig tri = cfg;
	tri.classifiers = members;

	// classical tri-training start: one bootstrap of L per classifier
	std::array<std::vector<Document>, members> boot;
	for (std::size_t i = 0; i < members; ++i) {
		Rng rng(derive_seed(cfg.seed, tag_bootstrap, i));
		for (std::size_t k = 0; k < labeled.size(); ++k)
			boot[i].push_back(labeled[rng.below(labeled.size())]);
	}

	RunResult result;
	result.report.variant = "tri_entropy";
	result.report.config_fingerprint = cfg.fingerprint();
	result.majority_vote = true;
	std::vector<Document> shared;  // adopted pseudo-labels as hard-labeled documents
	std::vector<Document> rest(unlabeled.begin(), unlabeled.end());
	const bool parallel = cfg.execution == Execution::parallel;

	auto train_all = [&](std::uint64_t base, const EpochHook& h) {
		std::vector<ClassifierState> states;
		std::vector<std::optional<ClassifierState>> slots(members);
		std::array<std::exception_ptr, members> errors{};
#pragma omp parallel for if (parallel) schedule(static, 1)
		for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(members); ++i) {
			const auto idx = static_cast<std::size_t>(i);
			try {
				std::vector<Document> docs = boot[idx];
				docs.insert(docs.end(), shared.begin(), shared.end());
				slots[idx] = fit_hard(docs, n_classes, cfg, derive_seed(base, idx), idx == 0 ? h : EpochHook{});
			} catch (...) {
				errors[idx] = std::current_exception();
			}
		}
		for (const auto& e : errors)
			if (e)
				std::rethrow_exception(e);
		for (auto& s : slots)
			states.push_back(std::move(*s));
		return states;
	};

	for (std::size_t iteration = 1; !rest.empty(); ++iteration) {
		const auto states = train_all(derive_seed(cfg.seed, iteration), {});
		const auto scored = label_and_score(states, rest, tri, Ranking::low_entropy);
		const auto sel = select_top(scored, cfg.step_size, labeled.size(), result.pseudo_labels.size(), cfg);

		IterationRecord rec;
		rec.iteration = iteration;
		rec.step = sel.step;
		rec.n_agree = scored.n_agree();
		rec.n_throttled = scored.throttled.size();
		rec.tier = sel.tier;
		move_selected(sel, rest, shared, result.pseudo_labels, iteration, rec);
		rec.labeled_size = labeled.size();
		rec.pseudo_size = result.pseudo_labels.size();
		rec.unlabeled_size = rest.size();
		result.report.iterations.push_back(std::move(rec));
	}

	result.models = train_all(derive_seed(cfg.seed, tag_final), hook);
	std::uint64_t h = fnv1a_offset;
	for (const auto& m : result.models)
		h = mix_seed(h, m.fingerprint());
	result.report.final_fingerprint = h;
	return result;
}

}  // namespace

std::string_view variant_name(Variant v)
{
	for (const auto& [var, name] : variant_names)
		if (var == v)
			return name;
	return "?";
}

std::optional<Variant> parse_variant(std::string_view name)
{
	for (const auto& [var, n] : variant_names)
		if (n == name)
			return var;
	return std::nullopt;
}

std::vector<Variant> all_variants()
{
	std::vector<Variant> out;
	for (const auto& [var, name] : variant_names)
		out.push_back(var);
	return out;
}

void VariantSpec::validate() const
{
	config.validate();
	if (variant == Variant::weighted_aug && !(weight_pseudo > 0.0 && weight_pseudo <= 1.0))
		throw ValidationError("weighted_aug: pseudo-label weight must lie in (0, 1]");
	if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
		throw ValidationError("validation fraction must lie in [0, 1)");
}

RunResult run_self_train(std::span<const Document> labeled, std::span<const Document> unlabeled,
                         const RunConfig& config, const SelfTrainOptions& options)
{
	if (options.validation_fraction <= 0.0 || options.max_pseudo_labels)
		return self_train_core(labeled, unlabeled, config, options.max_pseudo_labels, {});

	const std::size_t n_classes = resolve_classes(labeled, config);
	auto [train, val] = hold_out(labeled, options.validation_fraction, n_classes,
	                             derive_seed(config.seed, tag_validation));
	std::vector<int> gold;
	for (const auto& d : val)
		gold.push_back(*d.label);

	std::optional<RunResult> best;
	double best_f1 = -1.0;
	for (double share : {0.10, 0.25, 0.50, 1.00}) {
		const auto cap = static_cast<std::size_t>(std::llround(share * static_cast<double>(unlabeled.size())));
		auto run = self_train_core(train, unlabeled, config, cap, {});
		const double f1 = val.empty() ? 0.0 : metrics(predict(run, val), gold, MetricMode::macro_f1, n_classes).value;
		if (f1 > best_f1) {
			best_f1 = f1;
			best = std::move(run);
		}
	}
	return std::move(*best);
}

RunResult run_weighted_aug(std::span<const Document> labeled, std::span<const Document> unlabeled,
                           const RunConfig& config, double weight)
{
	VariantSpec spec{.variant = Variant::weighted_aug, .weight_pseudo = weight, .config = config};
	return run_ablation(spec, labeled, unlabeled);
}

RunResult run_tri_entropy(std::span<const Document> labeled, std::span<const Document> unlabeled,
                          const RunConfig& config)
{
	return tri_entropy_core(labeled, unlabeled, config, {});
}

PipelineSpec pipeline_for(const VariantSpec& spec)
{
	PipelineSpec p;
	p.variant = std::string(variant_name(spec.variant));
	p.config = spec.config;
	switch (spec.variant) {
	case Variant::rst_full:
		break;
	case Variant::rst_no_subsample:
		p.config.classifiers = 1;
		p.config.sample_ratio = 100.0;
		p.ranking = Ranking::confidence;
		break;
	case Variant::rst_no_pretrain:
		p.pretrain = PretrainMode::joint_weighted;
		p.pseudo_weight = 1.0;
		break;
	case Variant::weighted_aug:
		p.pretrain = PretrainMode::joint_weighted;
		p.pseudo_weight = spec.weight_pseudo;
		break;
	case Variant::rst_plain_ce:
		p.pretrain = PretrainMode::distill_plain_ce;
		p.config.train.lambda = 0.0;
		break;
	case Variant::self_train:
	case Variant::tri_entropy:
		throw ValidationError("variant '" + std::string(variant_name(spec.variant)) +
		                      "' is not an RST pipeline variant");
	}
	return p;
}

RunResult run_ablation(const VariantSpec& spec, std::span<const Document> labeled,
                       std::span<const Document> unlabeled, const RunHooks& hooks)
{
	spec.validate();
	RunResult result;
	switch (spec.variant) {
	case Variant::self_train:
		if (spec.validation_fraction > 0.0)
			result = run_self_train(labeled, unlabeled, spec.config, {.max_pseudo_labels = std::nullopt, .validation_fraction = spec.validation_fraction});
		else
			result = self_train_core(labeled, unlabeled, spec.config, std::nullopt, hooks.final_epoch);
		break;
	case Variant::tri_entropy:
		result = tri_entropy_core(labeled, unlabeled, spec.config, hooks.final_epoch);
		break;
	default:
		result = run_pipeline(labeled, unlabeled, pipeline_for(spec), hooks);
		break;
	}
	result.report.config_fingerprint = spec.config.fingerprint();
	return result;
}

}  // namespace rst

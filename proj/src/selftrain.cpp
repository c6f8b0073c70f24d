#include "rst/selftrain.hpp"

#include "rst/common.hpp"
#include "rst/kernels.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <ostream>
#include <unordered_set>

namespace rst {

namespace {

// stream tags for derive_seed
enum : std::uint64_t {
	tag_init = 1,
	tag_curriculum,
	tag_soft,
	tag_finetune,
	tag_labeled_sample,
	tag_pseudo_sample,
	tag_final = 0xf17a1,
};

std::size_t argmax(std::span<const double> xs)
{
	return static_cast<std::size_t>(std::max_element(xs.begin(), xs.end()) - xs.begin());
}

const char* tier_name(SelectionTier t)
{
	switch (t) {
	case SelectionTier::survivors: return "survivors";
	case SelectionTier::agreeing: return "agreeing";
	case SelectionTier::all: return "all";
	}
	return "?";
}

}  // namespace

void RunConfig::validate() const
{
	if (step_size < 1)
		throw ValidationError("K (step size) must be >= 1");
	if (!(sample_ratio > 0.0 && sample_ratio <= 100.0))
		throw ValidationError("sample ratio R must lie in (0, 100]");
	if (!(alpha > 0.0))
		throw ValidationError("alpha must be positive");
	if (classifiers < 1)
		throw ValidationError("need at least one classifier");
	if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0))
		throw ValidationError("confidence threshold must lie in [0, 1]");
	if (!(growth_cap_fraction >= 0.0 && growth_cap_fraction <= 1.0))
		throw ValidationError("growth cap fraction must lie in [0, 1]");
	if (!(mix_fraction >= 0.0 && mix_fraction <= 1.0))
		throw ValidationError("mix fraction must lie in [0, 1]");
	train.validate();
}

std::uint64_t RunConfig::fingerprint() const
{
	const double reals[] = {sample_ratio,        alpha,      confidence_threshold, growth_cap_fraction,
	                        mix_fraction,        train.learning_rate, train.temperature, train.lambda};
	const std::uint64_t ints[] = {step_size,
	                              classifiers,
	                              hidden_width,
	                              n_classes,
	                              seed,
	                              train.batch_size,
	                              train.epochs,
	                              static_cast<std::uint64_t>(train.optimizer),
	                              train.linear_decay ? 1u : 0u};
	return fnv1a_bytes(ints, sizeof ints, fnv1a_bytes(reals, sizeof reals));
}

PseudoLabel PseudoLabel::make(const Document& doc, std::vector<double> mean_logits, std::size_t iteration)
{
	Distribution soft(softmax(mean_logits, 1.0));
	const int hard = static_cast<int>(soft.argmax());
	return PseudoLabel{doc.id, doc.features, std::move(mean_logits), std::move(soft), hard, iteration};
}

std::vector<std::size_t> order_curriculum(std::span<const PseudoLabel> pseudo, double mix_fraction, std::uint64_t seed)
{
	if (pseudo.empty())
		return {};
	if (!(mix_fraction >= 0.0 && mix_fraction <= 1.0))
		throw ValidationError("mix fraction must lie in [0, 1]");

	std::map<std::size_t, std::vector<std::size_t>, std::greater<>> by_tag;
	for (std::size_t i = 0; i < pseudo.size(); ++i)
		by_tag[pseudo[i].iteration].push_back(i);
	std::vector<std::vector<std::size_t>> blocks;
	std::vector<std::size_t> home(pseudo.size());
	for (auto& [tag, members] : by_tag) {
		for (std::size_t i : members)
			home[i] = blocks.size();
		blocks.push_back(std::move(members));
	}

	Rng rng(seed);
	for (auto& b : blocks)
		rng.shuffle(b);
	if (blocks.size() > 1) {
		const auto k = static_cast<std::size_t>(std::llround(mix_fraction * static_cast<double>(pseudo.size())));
		const auto floaters = rng.sample_without_replacement(pseudo.size(), k);
		for (std::size_t f : floaters) {
			auto& own = blocks[home[f]];
			own.erase(std::find(own.begin(), own.end(), f));
		}
		for (std::size_t f : floaters) {
			std::size_t target = rng.below(blocks.size() - 1);
			if (target >= home[f])
				++target;
			auto& dst = blocks[target];
			dst.insert(dst.begin() + static_cast<std::ptrdiff_t>(rng.below(dst.size() + 1)), f);
		}
	}

	std::vector<std::size_t> order;
	order.reserve(pseudo.size());
	for (const auto& b : blocks)
		order.insert(order.end(), b.begin(), b.end());
	return order;
}

ScoredPool label_and_score(std::span<const Matrix> member_logits, std::span<const Document> unlabeled,
                           const RunConfig& config, Ranking ranking)
{
	const std::size_t m = member_logits.size();
	if (m == 0)
		throw ValidationError("label_and_score: no classifiers");
	if (ranking == Ranking::uncertainty && m < 2)
		throw ValidationError("label_and_score: the uncertainty score needs at least 2 classifiers");
	const std::size_t n_docs = unlabeled.size();
	for (const auto& z : member_logits)
		if (z.rows != n_docs || z.cols != member_logits[0].cols)
			throw ValidationError("label_and_score: logit matrices do not match U");
	const std::size_t n = member_logits[0].cols;
	const auto exec =
	    config.execution == Execution::parallel ? kernels::Exec::parallel : kernels::Exec::serial;

	std::vector<Matrix> probs;
	probs.reserve(m);
	for (const auto& z : member_logits)
		probs.push_back(kernels::probabilities(z));
	std::vector<double> scores;
	if (ranking == Ranking::uncertainty)
		scores = kernels::score(probs, config.alpha, exec);

	ScoredPool pool;
	std::vector<double> mean_p(n);
	for (std::size_t d = 0; d < n_docs; ++d) {
		Candidate c;
		c.index = d;
		c.doc_id = unlabeled[d].id;
		c.mean_logits.assign(n, 0.0);
		std::fill(mean_p.begin(), mean_p.end(), 0.0);
		bool agree = true;
		const std::size_t first = argmax(probs[0].row(d));
		double mean_entropy = 0.0;
		for (std::size_t i = 0; i < m; ++i) {
			const auto p = probs[i].row(d);
			const auto z = member_logits[i].row(d);
			agree = agree && argmax(p) == first;
			for (std::size_t k = 0; k < n; ++k) {
				mean_p[k] += p[k] / static_cast<double>(m);
				c.mean_logits[k] += z[k] / static_cast<double>(m);
			}
			mean_entropy += detail::entropy(p) / static_cast<double>(m);
		}
		c.hard_label = static_cast<int>(argmax(c.mean_logits));
		c.confidence = *std::max_element(mean_p.begin(), mean_p.end());
		switch (ranking) {
		case Ranking::uncertainty: c.score = scores[d]; break;
		case Ranking::confidence: c.score = c.confidence; break;
		case Ranking::low_entropy: c.score = -mean_entropy; break;
		}
		if (!agree)
			pool.disagreeing.push_back(std::move(c));
		else if (c.confidence < config.confidence_threshold)
			pool.throttled.push_back(std::move(c));
		else
			pool.survivors.push_back(std::move(c));
	}
	return pool;
}

ScoredPool label_and_score(std::span<const ClassifierState> classifiers, std::span<const Document> unlabeled,
                           const RunConfig& config, Ranking ranking)
{
	const auto exec =
	    config.execution == Execution::parallel ? kernels::Exec::parallel : kernels::Exec::serial;
	std::vector<Matrix> logits;
	for (const auto& c : classifiers)
		logits.push_back(kernels::logits(c, unlabeled, exec));
	return label_and_score(logits, unlabeled, config, ranking);
}

std::size_t growth_step(std::size_t k, double cap_fraction, std::size_t labeled, std::size_t pseudo)
{
	// the epsilon keeps e.g. 0.1 * 110 from rounding up to 12
	const double cap = std::ceil(cap_fraction * static_cast<double>(labeled + pseudo) - 1e-9);
	const auto capped = static_cast<std::size_t>(std::max(cap, 0.0));
	return std::max<std::size_t>(1, std::min(k, capped));
}

Selection select_top(const ScoredPool& pool, std::size_t k, std::size_t labeled_size, std::size_t pseudo_size,
                     const RunConfig& config)
{
	Selection sel;
	sel.step = growth_step(k, config.growth_cap_fraction, labeled_size, pseudo_size);
	std::vector<Candidate> ranked;
	if (!pool.survivors.empty()) {
		ranked = pool.survivors;
		sel.tier = SelectionTier::survivors;
	} else if (!pool.throttled.empty()) {
		ranked = pool.throttled;
		sel.tier = SelectionTier::agreeing;
	} else {
		ranked = pool.disagreeing;
		sel.tier = SelectionTier::all;
	}
	const std::size_t take = std::min(sel.step, ranked.size());
	auto better = [](const Candidate& a, const Candidate& b) {
		if (a.score != b.score)
			return a.score > b.score;
		return a.doc_id < b.doc_id;
	};
	std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take), ranked.end(), better);
	ranked.resize(take);
	sel.chosen = std::move(ranked);
	return sel;
}

std::size_t resolve_classes(std::span<const Document> labeled, const RunConfig& config)
{
	if (config.n_classes > 0)
		return config.n_classes;
	int max_label = 1;
	for (const auto& d : labeled)
		if (d.label)
			max_label = std::max(max_label, *d.label);
	return static_cast<std::size_t>(max_label) + 1;
}

void check_inputs(std::span<const Document> labeled, std::span<const Document> unlabeled)
{
	if (labeled.empty())
		throw ValidationError("the labeled set L is empty");
	const std::size_t dim = labeled[0].features.size();
	std::unordered_set<std::string> ids;
	for (const auto* set : {&labeled, &unlabeled})
		for (const auto& d : *set) {
			if (d.features.size() != dim)
				throw ValidationError("document '" + d.id + "' has inconsistent feature length");
			if (!ids.insert(d.id).second)
				throw ValidationError("document id '" + d.id + "' appears more than once across L and U");
		}
	for (const auto& d : labeled)
		if (!d.label)
			throw ValidationError("labeled document '" + d.id + "' has no label");
}

std::uint64_t id_fingerprint(std::span<const Document> docs)
{
	std::uint64_t h = fnv1a_offset;
	for (const auto& d : docs)
		h = fnv1a(d.id, fnv1a("\x1f", h));
	return h;
}

namespace {

std::vector<Document> as_documents(std::span<const PseudoLabel> pseudo)
{
	std::vector<Document> out;
	out.reserve(pseudo.size());
	for (const auto& p : pseudo)
		out.push_back({p.doc_id, p.features, p.hard_label});
	return out;
}

// Trains one classifier from scratch on the given L and S according to the
// pipeline's pretrain mode.
ClassifierState train_model(std::span<const Document> labeled, std::span<const PseudoLabel> pseudo,
                            const PipelineSpec& spec, std::size_t n_classes, std::uint64_t seed, MemberRecord* record,
                            const EpochHook& hook)
{
	const RunConfig& cfg = spec.config;
	auto state = ClassifierState::init(labeled[0].features.size(), n_classes, cfg.hidden_width,
	                                   derive_seed(seed, tag_init));
	TrainParams params = cfg.train;

	if (spec.pretrain == PretrainMode::joint_weighted) {
		auto docs = std::vector<Document>(labeled.begin(), labeled.end());
		std::vector<double> weights(docs.size(), 1.0);
		for (auto& d : as_documents(pseudo)) {
			docs.push_back(std::move(d));
			weights.push_back(spec.pseudo_weight);
		}
		params.seed = derive_seed(seed, tag_finetune);
		train_hard(state, docs, weights, params, hook);
		return state;
	}

	const auto order = order_curriculum(pseudo, cfg.mix_fraction, derive_seed(seed, tag_curriculum));
	std::vector<SoftExample> sequence;
	sequence.reserve(order.size());
	for (std::size_t i : order)
		sequence.push_back({pseudo[i].features, Distribution(softmax(pseudo[i].mean_logits, cfg.temperature()))});
	params.seed = derive_seed(seed, tag_soft);
	train_soft(state, sequence, params);

	params.seed = derive_seed(seed, tag_finetune);
	if (spec.pretrain == PretrainMode::distill_plain_ce) {
		train_hard(state, labeled, {}, params, hook);
		return state;
	}
	const auto snapshot = capture_snapshot(state, labeled, cfg.temperature());
	const auto before = snapshot.checksum();
	train_finetune(state, labeled, snapshot, params, hook);
	if (record) {
		record->snapshot_before = before;
		record->snapshot_after = snapshot.checksum();
	}
	return state;
}

struct MemberOutput
{
	Matrix logits;
	MemberRecord record;
};

MemberOutput run_member(std::span<const Document> labeled, std::span<const Document> unlabeled,
                        std::span<const PseudoLabel> pseudo, const PipelineSpec& spec, std::size_t n_classes,
                        std::size_t iteration, std::size_t member)
{
	const RunConfig& cfg = spec.config;
	const std::uint64_t seed = derive_seed(cfg.seed, iteration, member);
	MemberOutput out;

	Rng l_rng(derive_seed(seed, tag_labeled_sample));
	std::vector<Document> l_sub;
	for (std::size_t i : l_rng.sample_without_replacement(labeled.size(), percent_of(labeled.size(), cfg.sample_ratio)))
		l_sub.push_back(labeled[i]);

	Rng s_rng(derive_seed(seed, tag_pseudo_sample));
	std::vector<PseudoLabel> s_sub;
	std::uint64_t s_print = fnv1a_offset;
	for (std::size_t i : s_rng.sample_without_replacement(pseudo.size(), percent_of(pseudo.size(), cfg.sample_ratio))) {
		s_sub.push_back(pseudo[i]);
		s_print = fnv1a(pseudo[i].doc_id, fnv1a("\x1f", s_print));
	}
	out.record.pseudo_subsample = s_print;
	out.record.labeled_subsample = id_fingerprint(l_sub);

	const auto state = train_model(l_sub, s_sub, spec, n_classes, seed, &out.record, {});
	out.logits = kernels::logits_serial(state, unlabeled);
	return out;
}

}  // namespace

IterationRecord rst_iteration(std::span<const Document> labeled, std::vector<Document>& unlabeled,
                              std::vector<PseudoLabel>& pseudo, const PipelineSpec& spec, std::size_t iteration)
{
	const RunConfig& cfg = spec.config;
	if (unlabeled.empty())
		throw ContractError("rst_iteration called with an empty U");
	const std::size_t n_classes = resolve_classes(labeled, cfg);
	const std::size_t m = cfg.classifiers;

	std::vector<MemberOutput> members(m);
	std::vector<std::exception_ptr> errors(m);
	const bool parallel = cfg.execution == Execution::parallel;
	const auto m_signed = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for if (parallel) schedule(static, 1)
	for (std::ptrdiff_t i = 0; i < m_signed; ++i) {
		const auto idx = static_cast<std::size_t>(i);
		try {
			members[idx] = run_member(labeled, unlabeled, pseudo, spec, n_classes, iteration, idx);
		} catch (...) {
			errors[idx] = std::current_exception();
		}
	}
	for (const auto& e : errors)
		if (e)
			std::rethrow_exception(e);

	// barrier: reduction over the members runs once, in member order
	std::vector<Matrix> logits;
	IterationRecord rec;
	rec.iteration = iteration;
	for (auto& mo : members) {
		logits.push_back(std::move(mo.logits));
		rec.members.push_back(mo.record);
	}
	const auto pool = label_and_score(logits, unlabeled, cfg, spec.ranking);
	const auto sel = select_top(pool, cfg.step_size, labeled.size(), pseudo.size(), cfg);

	rec.step = sel.step;
	rec.n_agree = pool.n_agree();
	rec.n_throttled = pool.throttled.size();
	rec.tier = sel.tier;
	if (!sel.chosen.empty()) {
		rec.max_score = sel.chosen.front().score;
		rec.min_score = sel.chosen.back().score;
	}
	std::vector<char> taken(unlabeled.size(), 0);
	for (const auto& c : sel.chosen) {
		pseudo.push_back(PseudoLabel::make(unlabeled[c.index], c.mean_logits, iteration));
		rec.selected_ids.push_back(c.doc_id);
		taken[c.index] = 1;
	}
	std::size_t w = 0;
	for (std::size_t r = 0; r < unlabeled.size(); ++r)
		if (!taken[r]) {
			if (w != r)
				unlabeled[w] = std::move(unlabeled[r]);
			++w;
		}
	unlabeled.resize(w);

	rec.labeled_size = labeled.size();
	rec.pseudo_size = pseudo.size();
	rec.unlabeled_size = unlabeled.size();
	return rec;
}

RunResult run_pipeline(std::span<const Document> labeled, std::span<const Document> unlabeled,
                       const PipelineSpec& spec, const RunHooks& hooks)
{
	spec.config.validate();
	check_inputs(labeled, unlabeled);
	if (spec.ranking == Ranking::uncertainty && spec.config.classifiers < 2)
		throw ValidationError("the uncertainty score needs at least 2 classifiers");
	if (spec.pretrain == PretrainMode::joint_weighted && !(spec.pseudo_weight > 0.0 && spec.pseudo_weight <= 1.0))
		throw ValidationError("pseudo-label weight must lie in (0, 1]");
	const std::size_t n_classes = resolve_classes(labeled, spec.config);
	for (const auto& d : labeled)
		if (static_cast<std::size_t>(*d.label) >= n_classes || *d.label < 0)
			throw ValidationError("label of '" + d.id + "' is out of range");

	RunResult result;
	result.report.variant = spec.variant;
	result.report.config_fingerprint = spec.config.fingerprint();

	std::vector<Document> pool(unlabeled.begin(), unlabeled.end());
	for (std::size_t iteration = 1; !pool.empty(); ++iteration)
		result.report.iterations.push_back(rst_iteration(labeled, pool, result.pseudo_labels, spec, iteration));

	result.models.push_back(train_model(labeled, result.pseudo_labels, spec, n_classes,
	                                    derive_seed(spec.config.seed, tag_final), nullptr, hooks.final_epoch));
	result.report.final_fingerprint = result.models.front().fingerprint();
	return result;
}

RunResult run_rst(std::span<const Document> labeled, std::span<const Document> unlabeled, const RunConfig& config,
                  const RunHooks& hooks)
{
	PipelineSpec spec;
	spec.config = config;
	return run_pipeline(labeled, unlabeled, spec, hooks);
}

std::vector<int> predict(const RunResult& result, std::span<const Document> docs)
{
	if (result.models.empty())
		throw ContractError("predict: result holds no model");
	std::vector<Matrix> logits;
	for (const auto& m : result.models)
		logits.push_back(kernels::logits_serial(m, docs));
	const std::size_t n = result.models.front().classes();

	std::vector<int> out(docs.size());
	std::vector<double> votes(n), mean_p(n), p(n);
	for (std::size_t d = 0; d < docs.size(); ++d) {
		if (!result.majority_vote || logits.size() == 1) {
			out[d] = static_cast<int>(argmax(logits[0].row(d)));
			continue;
		}
		std::fill(votes.begin(), votes.end(), 0.0);
		std::fill(mean_p.begin(), mean_p.end(), 0.0);
		for (const auto& z : logits) {
			votes[argmax(z.row(d))] += 1.0;
			softmax(z.row(d), 1.0, p);
			for (std::size_t k = 0; k < n; ++k)
				mean_p[k] += p[k];
		}
		const double top = *std::max_element(votes.begin(), votes.end());
		// unique plurality wins; otherwise the mean distribution breaks the tie
		if (std::count(votes.begin(), votes.end(), top) == 1) {
			out[d] = static_cast<int>(argmax(votes));
		} else {
			for (std::size_t k = 0; k < n; ++k)
				if (votes[k] != top)
					mean_p[k] = -1.0;
			out[d] = static_cast<int>(argmax(mean_p));
		}
	}
	return out;
}

void write_report_jsonl(std::ostream& out, const RunReport& report, const std::string& config_hash,
                        std::uint64_t seed)
{
	for (const auto& it : report.iterations) {
		nlohmann::json j;
		j["variant"] = report.variant;
		j["config_hash"] = config_hash;
		j["seed"] = seed;
		j["iteration"] = it.iteration;
		j["step"] = it.step;
		j["n_agree"] = it.n_agree;
		j["n_throttled"] = it.n_throttled;
		j["selected_ids"] = it.selected_ids;
		j["min_score"] = it.min_score;
		j["max_score"] = it.max_score;
		j["L"] = it.labeled_size;
		j["S"] = it.pseudo_size;
		j["U"] = it.unlabeled_size;
		j["selection_pool"] = tier_name(it.tier);
		out << j.dump() << '\n';
	}
}

}  // namespace rst

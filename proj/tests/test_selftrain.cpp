#include "doctest.h"

#include "helpers.hpp"
#include "rst/common.hpp"
#include "rst/selftrain.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace {

rst::PseudoLabel pl(const std::string& id, std::size_t iteration)
{
	return rst::PseudoLabel::make({id, {0.0}, std::nullopt}, {0.3, -0.3}, iteration);
}

rst::Candidate cand(const std::string& id, double score, std::size_t index = 0)
{
	rst::Candidate c;
	c.doc_id = id;
	c.score = score;
	c.index = index;
	c.mean_logits = {1.0, 0.0};
	return c;
}

rst::Matrix one_row(std::vector<double> logits)
{
	return {1, logits.size(), std::move(logits)};
}

}  // namespace

TEST_CASE("pseudo-labels store consistent soft and hard labels")
{
	const auto p = rst::PseudoLabel::make({"d", {1.0, 2.0}, std::nullopt}, {0.2, 1.5, -0.4}, 3);
	const auto soft = rst::softmax(p.mean_logits, 1.0);
	for (std::size_t k = 0; k < 3; ++k)
		CHECK(std::abs(p.soft_label[k] - soft[k]) <= 1e-9);
	CHECK(p.hard_label == 1);
	CHECK(p.iteration == 3);
}

TEST_CASE("curriculum ordering")
{
	CHECK(rst::order_curriculum({}, 0.2, 1).empty());

	const std::vector<rst::PseudoLabel> s{pl("a", 1), pl("b", 1), pl("c", 2), pl("d", 3)};
	const auto order = rst::order_curriculum(s, 0.0, 1);
	REQUIRE(order.size() == 4);
	CHECK(s[order[0]].iteration == 3);
	CHECK(s[order[1]].iteration == 2);
	CHECK(s[order[2]].iteration == 1);
	CHECK(s[order[3]].iteration == 1);

	std::vector<rst::PseudoLabel> many;
	for (std::size_t i = 0; i < 60; ++i)
		many.push_back(pl("p" + std::to_string(i), 1 + i / 20));
	for (std::uint64_t seed = 0; seed < 5; ++seed) {
		auto mixed = rst::order_curriculum(many, 0.2, seed);
		CHECK(mixed == rst::order_curriculum(many, 0.2, seed));
		std::sort(mixed.begin(), mixed.end());
		for (std::size_t i = 0; i < 60; ++i)
			CHECK(mixed[i] == i);
	}
}

TEST_CASE("label_and_score filters")
{
	rst::RunConfig cfg;
	std::vector<rst::Document> u{{"d", {0.0}, std::nullopt}};

	SUBCASE("identical confident members score (1 + alpha) / alpha")
	{
		const std::vector<rst::Matrix> z{one_row({800.0, 0.0}), one_row({800.0, 0.0})};
		const auto pool = rst::label_and_score(z, u, cfg);
		REQUIRE(pool.survivors.size() == 1);
		CHECK(pool.survivors[0].score == 10001.0);
		CHECK(pool.survivors[0].hard_label == 0);
	}
	SUBCASE("disagreement excludes the document")
	{
		const std::vector<rst::Matrix> z{one_row({5.0, 0.0}), one_row({0.0, 5.0})};
		const auto pool = rst::label_and_score(z, u, cfg);
		CHECK(pool.survivors.empty());
		CHECK(pool.n_agree() == 0);
		CHECK(pool.disagreeing.size() == 1);
	}
	SUBCASE("low confidence is throttled")
	{
		const double z0 = std::log(0.6 / 0.4);
		const std::vector<rst::Matrix> z{one_row({z0, 0.0}), one_row({z0, 0.0})};
		const auto pool = rst::label_and_score(z, u, cfg);
		CHECK(pool.survivors.empty());
		CHECK(pool.throttled.size() == 1);
	}
	SUBCASE("the stored logits are the member mean")
	{
		const std::vector<rst::Matrix> z{one_row({6.0, 1.0}), one_row({4.0, -1.0})};
		const auto pool = rst::label_and_score(z, u, cfg);
		REQUIRE(pool.survivors.size() == 1);
		CHECK(pool.survivors[0].mean_logits == std::vector<double>{5.0, 0.0});
	}
	SUBCASE("the uncertainty score needs two members")
	{
		const std::vector<rst::Matrix> z{one_row({6.0, 1.0})};
		CHECK_THROWS_AS(rst::label_and_score(z, u, cfg), rst::ValidationError);
		CHECK(rst::label_and_score(z, u, cfg, rst::Ranking::confidence).survivors.size() == 1);
	}
}

TEST_CASE("growth step")
{
	CHECK(rst::growth_step(100, 0.1, 100, 0) == 10);
	CHECK(rst::growth_step(100, 0.1, 100, 10) == 11);
	CHECK(rst::growth_step(100, 0.1, 100, 11) == 12);
	CHECK(rst::growth_step(100, 0.1, 5000, 0) == 100);
	CHECK(rst::growth_step(100, 0.0, 100, 0) == 1);
	CHECK(rst::growth_step(3, 0.1, 4, 0) == 1);
}

TEST_CASE("select_top")
{
	rst::RunConfig cfg;
	SUBCASE("the largest scores win")
	{
		rst::ScoredPool pool;
		for (int i = 0; i < 10; ++i)
			pool.survivors.push_back(cand("d" + std::to_string(i), i));
		const auto sel = rst::select_top(pool, 3, 30, 0, cfg);
		REQUIRE(sel.chosen.size() == 3);
		CHECK(sel.chosen[0].doc_id == "d9");
		CHECK(sel.chosen[2].doc_id == "d7");
		CHECK(sel.tier == rst::SelectionTier::survivors);
	}
	SUBCASE("ties go to the lower id")
	{
		rst::ScoredPool pool;
		pool.survivors = {cand("b", 1.0), cand("c", 2.0), cand("a", 1.0)};
		const auto sel = rst::select_top(pool, 2, 100, 0, cfg);
		CHECK(sel.chosen[1].doc_id == "a");
	}
	SUBCASE("fallback tiers keep the loop moving")
	{
		rst::ScoredPool pool;
		pool.throttled = {cand("t1", 0.5), cand("t2", 0.7)};
		pool.disagreeing = {cand("x", 9.0)};
		auto sel = rst::select_top(pool, 100, 10, 0, cfg);
		CHECK(sel.tier == rst::SelectionTier::agreeing);
		REQUIRE(sel.chosen.size() == 1);
		CHECK(sel.chosen[0].doc_id == "t2");

		pool.throttled.clear();
		sel = rst::select_top(pool, 100, 10, 0, cfg);
		CHECK(sel.tier == rst::SelectionTier::all);
		CHECK(sel.chosen.size() == 1);
	}
}

TEST_CASE("one iteration moves the selection from U to S")
{
	const auto split = testing::blobs(40, 200, 0 + 10, 1);
	auto u = split.unlabeled;
	std::vector<rst::PseudoLabel> s;
	rst::PipelineSpec spec;
	spec.config = testing::quick_config();
	const auto labeled_before = rst::fingerprint(split.labeled);

	const auto r1 = rst::rst_iteration(split.labeled, u, s, spec, 1);
	CHECK(r1.step == 4);
	CHECK(u.size() == 200 - r1.selected_ids.size());
	CHECK(s.size() == r1.selected_ids.size());
	CHECK(r1.members.size() == 2);
	// S is empty in the first iteration
	CHECK(r1.members[0].pseudo_subsample == r1.members[1].pseudo_subsample);
	CHECK(r1.members[0].labeled_subsample != r1.members[1].labeled_subsample);
	for (const auto& p : s)
		CHECK(p.iteration == 1);

	for (std::size_t it = 2; it <= 6; ++it)
		rst::rst_iteration(split.labeled, u, s, spec, it);
	const auto r7 = rst::rst_iteration(split.labeled, u, s, spec, 7);
	CHECK(s.size() - r7.selected_ids.size() >= 20);
	CHECK(r7.members[0].pseudo_subsample != r7.members[1].pseudo_subsample);
	for (const auto& m : r7.members)
		CHECK(m.snapshot_before == m.snapshot_after);
	CHECK(rst::fingerprint(split.labeled) == labeled_before);
}

TEST_CASE("run_rst exhausts U and conserves the partition")
{
	const auto split = testing::blobs(50, 300, 10, 2);
	const auto r = rst::run_rst(split.labeled, split.unlabeled, testing::quick_config());
	REQUIRE_FALSE(r.report.iterations.empty());
	CHECK(r.report.iterations.back().unlabeled_size == 0);
	CHECK(r.pseudo_labels.size() == 300);
	std::set<std::string> ids;
	for (const auto& d : split.labeled)
		ids.insert(d.id);
	for (const auto& p : r.pseudo_labels)
		CHECK(ids.insert(p.doc_id).second);
	std::size_t prev = 300;
	for (const auto& it : r.report.iterations) {
		CHECK(it.unlabeled_size < prev);
		CHECK(it.labeled_size + it.pseudo_size + it.unlabeled_size == 350);
		prev = it.unlabeled_size;
	}
	CHECK(r.report.iterations.size() <= 300);
	REQUIRE(r.models.size() == 1);
	CHECK(r.report.final_fingerprint == r.models[0].fingerprint());
}

TEST_CASE("run_rst is deterministic and execution-mode independent")
{
	const auto split = testing::blobs(40, 150, 10, 3);
	auto cfg = testing::quick_config(5);
	const auto a = rst::run_rst(split.labeled, split.unlabeled, cfg);
	const auto b = rst::run_rst(split.labeled, split.unlabeled, cfg);
	cfg.execution = rst::Execution::parallel;
	const auto c = rst::run_rst(split.labeled, split.unlabeled, cfg);
	CHECK(a.report.iterations == b.report.iterations);
	CHECK(a.report.iterations == c.report.iterations);
	CHECK(a.models == c.models);
	CHECK(a.report.config_fingerprint == c.report.config_fingerprint);
}

TEST_CASE("empty U gives a supervised classifier finetuned against its own snapshot")
{
	const auto split = testing::blobs(40, 0, 10, 4);
	const auto cfg = testing::quick_config();
	const auto r = rst::run_rst(split.labeled, {}, cfg);
	CHECK(r.report.iterations.empty());
	REQUIRE(r.models.size() == 1);
	const auto& m = r.models[0];
	auto fresh = rst::ClassifierState::init(m.dim(), m.classes(), m.hidden(), m.seed());
	const auto snap = rst::capture_snapshot(fresh, split.labeled, cfg.temperature());
	const double l_trained = rst::loss_eq1(m, split.labeled, snap, 0.0, cfg.temperature());
	const double l_fresh = rst::loss_eq1(fresh, split.labeled, snap, 0.0, cfg.temperature());
	CHECK(l_trained < l_fresh);
}

TEST_CASE("input validation")
{
	const auto split = testing::blobs(20, 20, 10, 5);
	auto cfg = testing::quick_config();
	CHECK_THROWS_AS(rst::run_rst({}, split.unlabeled, cfg), rst::ValidationError);
	cfg.sample_ratio = 0.0;
	CHECK_THROWS_AS(rst::run_rst(split.labeled, split.unlabeled, cfg), rst::ValidationError);
	cfg = testing::quick_config();
	cfg.classifiers = 1;
	CHECK_THROWS_AS(rst::run_rst(split.labeled, split.unlabeled, cfg), rst::ValidationError);
	auto dup = split.unlabeled;
	dup[0].id = split.labeled[0].id;
	CHECK_THROWS_AS(rst::run_rst(split.labeled, dup, testing::quick_config()), rst::ValidationError);
}

TEST_CASE("config fingerprint ignores execution mode only")
{
	rst::RunConfig a;
	auto b = a;
	b.execution = rst::Execution::parallel;
	CHECK(a.fingerprint() == b.fingerprint());
	b.train.lambda = 0.5;
	CHECK(a.fingerprint() != b.fingerprint());
}

TEST_CASE("report lines carry the expected fields")
{
	const auto split = testing::blobs(30, 40, 10, 6);
	const auto r = rst::run_rst(split.labeled, split.unlabeled, testing::quick_config());
	std::ostringstream out;
	rst::write_report_jsonl(out, r.report, "abc", 7);
	std::istringstream lines(out.str());
	std::string first;
	std::getline(lines, first);
	for (const char* key : {"\"iteration\":1", "\"step\":3", "\"n_agree\"", "\"n_throttled\"", "\"selected_ids\"",
	                        "\"min_score\"", "\"max_score\"", "\"L\":30", "\"S\"", "\"U\"", "\"variant\":\"rst_full\"",
	                        "\"config_hash\":\"abc\"", "\"seed\":7"})
		CHECK(first.find(key) != std::string::npos);
}

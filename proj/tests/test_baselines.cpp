#include "doctest.h"

#include "helpers.hpp"
#include "rst/common.hpp"
#include "rst/baselines.hpp"

#include <cmath>

TEST_CASE("variant names round trip")
{
	for (auto v : rst::all_variants())
		CHECK(rst::parse_variant(rst::variant_name(v)) == v);
	CHECK(rst::all_variants().size() == 7);
	CHECK_FALSE(rst::parse_variant("rst_magic").has_value());
}

TEST_CASE("pipeline mapping replaces one mechanism per ablation")
{
	rst::VariantSpec spec;
	spec.variant = rst::Variant::rst_no_subsample;
	auto p = rst::pipeline_for(spec);
	CHECK(p.config.classifiers == 1);
	CHECK(p.ranking == rst::Ranking::confidence);
	CHECK(p.pretrain == rst::PretrainMode::distill_finetune);

	spec.variant = rst::Variant::rst_plain_ce;
	p = rst::pipeline_for(spec);
	CHECK(p.config.train.lambda == 0.0);
	CHECK(p.pretrain == rst::PretrainMode::distill_plain_ce);
	CHECK(p.ranking == rst::Ranking::uncertainty);

	spec.variant = rst::Variant::rst_no_pretrain;
	p = rst::pipeline_for(spec);
	CHECK(p.pretrain == rst::PretrainMode::joint_weighted);
	CHECK(p.pseudo_weight == 1.0);
	CHECK(p.config.classifiers == 2);

	spec.variant = rst::Variant::weighted_aug;
	p = rst::pipeline_for(spec);
	CHECK(p.pretrain == rst::PretrainMode::joint_weighted);
	CHECK(p.pseudo_weight == 0.5);

	spec.variant = rst::Variant::self_train;
	CHECK_THROWS_AS(rst::pipeline_for(spec), rst::ValidationError);
}

TEST_CASE("every variant terminates and exhausts U")
{
	const auto split = testing::blobs(40, 120, 10, 1);
	for (auto v : rst::all_variants()) {
		CAPTURE(rst::variant_name(v));
		rst::VariantSpec spec;
		spec.variant = v;
		spec.config = testing::quick_config();
		const auto r = rst::run_ablation(spec, split.labeled, split.unlabeled);
		REQUIRE_FALSE(r.report.iterations.empty());
		CHECK(r.report.iterations.back().unlabeled_size == 0);
		CHECK(r.pseudo_labels.size() == 120);
		CHECK(r.report.config_fingerprint == spec.config.fingerprint());
		CHECK(r.report.variant == std::string(rst::variant_name(v)));
		CHECK(rst::predict(r, split.test).size() == split.test.size());
	}
}

TEST_CASE("rst_full dispatch equals run_rst")
{
	const auto split = testing::blobs(30, 80, 10, 2);
	rst::VariantSpec spec;
	spec.config = testing::quick_config(3);
	const auto a = rst::run_ablation(spec, split.labeled, split.unlabeled);
	const auto b = rst::run_rst(split.labeled, split.unlabeled, spec.config);
	CHECK(a.models == b.models);
	CHECK(a.report.iterations == b.report.iterations);
}

TEST_CASE("self-training")
{
	const auto split = testing::blobs(40, 150, 10, 4);
	auto cfg = testing::quick_config(2);

	SUBCASE("empty U trains on L only")
	{
		const auto r = rst::run_self_train(split.labeled, {}, cfg);
		CHECK(r.report.iterations.empty());
		CHECK(r.models.size() == 1);
	}
	SUBCASE("selections clear the threshold while anything does")
	{
		const auto r = rst::run_self_train(split.labeled, split.unlabeled, cfg);
		for (const auto& it : r.report.iterations)
			if (it.tier == rst::SelectionTier::survivors)
				CHECK(it.min_score >= 0.9);
		const auto again = rst::run_self_train(split.labeled, split.unlabeled, cfg);
		CHECK(r.models == again.models);
	}
	SUBCASE("a cap stops early")
	{
		rst::SelfTrainOptions opts;
		opts.max_pseudo_labels = 25;
		const auto r = rst::run_self_train(split.labeled, split.unlabeled, cfg, opts);
		CHECK(r.pseudo_labels.size() == 25);
	}
	SUBCASE("validation picks one of the grid caps")
	{
		rst::SelfTrainOptions opts;
		opts.validation_fraction = 0.2;
		const auto r = rst::run_self_train(split.labeled, split.unlabeled, cfg, opts);
		const auto n = r.pseudo_labels.size();
		CHECK((n == 15 || n == 38 || n == 75 || n == 150));
	}
}

TEST_CASE("tri-training")
{
	const auto split = testing::blobs(40, 100, 30, 6);
	const auto r = rst::run_tri_entropy(split.labeled, split.unlabeled, testing::quick_config());
	CHECK(r.models.size() == 3);
	CHECK(r.majority_vote);

	SUBCASE("identical one-hot outputs rank first")
	{
		std::vector<rst::Document> u{{"a", {0.0}, std::nullopt}, {"b", {0.0}, std::nullopt}};
		const rst::Matrix sharp{2, 2, {900.0, 0.0, 2.0, 0.0}};
		const std::vector<rst::Matrix> z{sharp, sharp, sharp};
		rst::RunConfig cfg;
		cfg.confidence_threshold = 0.0;
		const auto pool = rst::label_and_score(z, u, cfg, rst::Ranking::low_entropy);
		const auto sel = rst::select_top(pool, 1, 100, 0, cfg);
		CHECK(sel.chosen[0].doc_id == "a");
		CHECK(sel.chosen[0].score == 0.0);
	}
	SUBCASE("majority vote")
	{
		// two models predict class 0 everywhere, one predicts class 1
		rst::RunResult vote;
		vote.majority_vote = true;
		for (double b : {3.0, 3.0, -9.0}) {
			auto s = rst::ClassifierState::init(1, 2, 0, 1, rst::InitScheme::zeros);
			s.parameters()[2] = b;
			vote.models.push_back(s);
		}
		std::vector<rst::Document> docs{{"x", {0.0}, 0}};
		CHECK(rst::predict(vote, docs) == std::vector<int>{0});
	}
}

TEST_CASE("weighted augmentation validates its weight")
{
	const auto split = testing::blobs(20, 20, 10, 7);
	CHECK_THROWS_AS(rst::run_weighted_aug(split.labeled, split.unlabeled, testing::quick_config(), 0.0),
	                rst::ValidationError);
	CHECK_THROWS_AS(rst::run_weighted_aug(split.labeled, split.unlabeled, testing::quick_config(), 1.5),
	                rst::ValidationError);
	const auto r = rst::run_weighted_aug(split.labeled, split.unlabeled, testing::quick_config(), 0.5);
	CHECK(r.report.iterations.back().unlabeled_size == 0);
}

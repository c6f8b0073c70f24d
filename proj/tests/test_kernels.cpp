#include "doctest.h"

#include "helpers.hpp"
#include "rst/infometrics.hpp"
#include "rst/common.hpp"
#include "rst/kernels.hpp"

#include <cstring>

namespace k = rst::kernels;

namespace {

bool same_bits(const std::vector<double>& a, const std::vector<double>& b)
{
	return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("logit kernels agree bit for bit")
{
	const auto split = testing::blobs(50, 700, 50, 3, 3, 6);
	for (std::size_t hidden : {0, 7}) {
		const auto s = rst::ClassifierState::init(6, 3, hidden, 4);
		const auto a = k::logits_serial(s, split.unlabeled);
		const auto b = k::logits_parallel(s, split.unlabeled);
		CHECK(a.rows == 700);
		CHECK(a.cols == 3);
		CHECK(same_bits(a.data, b.data));
		const auto row = s.logits(split.unlabeled[123].features);
		CHECK(same_bits(row, std::vector<double>(a.row(123).begin(), a.row(123).end())));
	}
}

TEST_CASE("logit kernels validate dimensions")
{
	const auto s = rst::ClassifierState::init(3, 2, 0, 1);
	std::vector<rst::Document> docs{{"a", {1.0, 2.0}, std::nullopt}};
	CHECK_THROWS_AS(k::logits_serial(s, docs), rst::ValidationError);
	CHECK_THROWS_AS(k::logits_parallel(s, docs), rst::ValidationError);
}

TEST_CASE("score kernels agree with each other and with the scalar metric")
{
	const auto split = testing::blobs(20, 500, 20, 9, 4, 3);
	std::vector<rst::Matrix> probs;
	for (std::uint64_t i = 0; i < 3; ++i)
		probs.push_back(k::probabilities(k::logits_serial(rst::ClassifierState::init(3, 4, 2, i), split.unlabeled)));
	const auto a = k::score_serial(probs, 1e-4);
	const auto b = k::score_parallel(probs, 1e-4);
	CHECK(same_bits(a, b));
	for (std::size_t d = 0; d < 500; d += 37) {
		std::vector<rst::Distribution> ds;
		for (const auto& p : probs)
			ds.emplace_back(std::vector<double>(p.row(d).begin(), p.row(d).end()));
		CHECK(a[d] == rst::score(ds));
	}
	std::vector<rst::Matrix> one{probs[0]};
	CHECK_THROWS_AS(k::score_serial(one, 1e-4), rst::ValidationError);
}

TEST_CASE("probabilities are row-wise softmax")
{
	rst::Matrix z{2, 2, {2.0, 0.0, 0.0, 0.0}};
	const auto p = k::probabilities(z, 2.0);
	CHECK(p.row(0)[0] == doctest::Approx(0.7310585786).epsilon(1e-9));
	CHECK(p.row(1)[0] == 0.5);
}

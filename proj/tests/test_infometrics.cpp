#include "doctest.h"

#include "rst/common.hpp"
#include "rst/infometrics.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <vector>

using rst::Distribution;
using Real = boost::multiprecision::cpp_bin_float_50;

namespace {

Real hp_entropy(const std::vector<double>& p)
{
	Real h = 0;
	for (double x : p)
		if (x > 0)
			h -= Real(x) * log(Real(x));
	return h;
}

std::vector<Distribution> pair(std::vector<double> a, std::vector<double> b)
{
	return {Distribution(std::move(a)), Distribution(std::move(b))};
}

}  // namespace

TEST_CASE("entropy fixtures")
{
	CHECK(rst::shannon_entropy(Distribution({1.0, 0.0})) == 0.0);
	CHECK(rst::shannon_entropy(Distribution({0.5, 0.5})) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
	const double expect = hp_entropy({0.9, 0.1}).convert_to<double>();
	CHECK(rst::shannon_entropy(Distribution({0.9, 0.1})) == doctest::Approx(expect).epsilon(1e-14));
	CHECK(expect == doctest::Approx(0.325083).epsilon(1e-6));
}

TEST_CASE("normalized entropy fixtures")
{
	CHECK(rst::normalized_entropy(Distribution({0.25, 0.25, 0.25, 0.25})) == doctest::Approx(1.0).epsilon(1e-15));
	for (std::size_t n : {2, 3, 7}) {
		std::vector<double> p(n, 0.0);
		p[n - 1] = 1.0;
		CHECK(rst::normalized_entropy(Distribution(p)) == 0.0);
	}
	const double expect = (hp_entropy({0.9, 0.1}) / log(Real(2))).convert_to<double>();
	CHECK(rst::normalized_entropy(Distribution({0.9, 0.1})) == doctest::Approx(expect).epsilon(1e-14));
	CHECK(expect == doctest::Approx(0.468996).epsilon(1e-6));
	CHECK(expect == doctest::Approx(0.4690).epsilon(1e-4));
}

TEST_CASE("gjs fixtures")
{
	CHECK(rst::gjs(pair({0.3, 0.7}, {0.3, 0.7})) == 0.0);
	CHECK(rst::gjs(pair({1, 0}, {0, 1})) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
	const Real expect = hp_entropy({0.85, 0.15}) - (hp_entropy({0.9, 0.1}) + hp_entropy({0.8, 0.2})) / 2;
	CHECK(rst::gjs(pair({0.9, 0.1}, {0.8, 0.2})) == doctest::Approx(expect.convert_to<double>()).epsilon(1e-10));
	CHECK(expect.convert_to<double>() == doctest::Approx(0.00997).epsilon(1e-3));
}

TEST_CASE("score fixtures")
{
	CHECK(rst::score(pair({1, 0}, {1, 0})) == 10001.0);
	CHECK(rst::score(pair({0.5, 0.5}, {0.5, 0.5})) == doctest::Approx(1.0).epsilon(1e-12));

	const Real ln2 = log(Real(2));
	const Real h1 = hp_entropy({0.9, 0.1}), h2 = hp_entropy({0.8, 0.2});
	const Real g = hp_entropy({0.85, 0.15}) - (h1 + h2) / 2;
	const Real alpha = Real(1e-4);
	const Real expect = ((1 - h1 / ln2) * (1 - h2 / ln2) + alpha) / (g + alpha);
	const double s = rst::score(pair({0.9, 0.1}, {0.8, 0.2}));
	CHECK(s == doctest::Approx(expect.convert_to<double>()).epsilon(1e-10));
	CHECK(s == doctest::Approx(14.7).epsilon(0.01));
}

TEST_CASE("distribution validation")
{
	CHECK_THROWS_AS(Distribution({1.0}), rst::ValidationError);
	CHECK_THROWS_AS(Distribution({0.6, 0.6}), rst::ValidationError);
	CHECK_THROWS_AS(Distribution({1.2, -0.2}), rst::ValidationError);
	CHECK_THROWS_AS(Distribution({NAN, 1.0}), rst::ValidationError);
	CHECK_NOTHROW(Distribution({0.5, 0.5 + 1e-12}));
	CHECK(Distribution({0.2, 0.5, 0.3}).argmax() == 1);
}

TEST_CASE("gjs and score reject bad inputs")
{
	const std::vector<Distribution> one{Distribution({0.5, 0.5})};
	CHECK_THROWS_AS(rst::gjs(one), rst::ValidationError);
	CHECK_THROWS_AS(rst::gjs(pair({0.5, 0.5}, {0.2, 0.3, 0.5})), rst::ValidationError);
	CHECK_THROWS_AS(rst::score(pair({0.5, 0.5}, {0.5, 0.5}), {0.0}), rst::ValidationError);
}

TEST_CASE("metric properties on random tuples")
{
	rst::Rng rng(3);
	for (int rep = 0; rep < 300; ++rep) {
		const std::size_t n = 2 + rng.below(9), m = 2 + rng.below(4);
		std::vector<Distribution> ds;
		for (std::size_t i = 0; i < m; ++i) {
			std::vector<double> p(n);
			double s = 0;
			for (auto& x : p)
				s += (x = rng.uniform());
			for (auto& x : p)
				x /= s;
			ds.emplace_back(p);
		}
		for (const auto& d : ds) {
			const double hn = rst::normalized_entropy(d);
			CHECK(hn >= 0.0);
			CHECK(hn <= 1.0 + 1e-12);
		}
		const double g = rst::gjs(ds);
		CHECK(g >= 0.0);
		CHECK(g <= std::log(static_cast<double>(m)) + 1e-12);

		// member order does not matter
		auto rotated = ds;
		std::rotate(rotated.begin(), rotated.begin() + 1, rotated.end());
		CHECK(rst::gjs(rotated) == doctest::Approx(g).epsilon(1e-12));
		CHECK(rst::score(rotated) == doctest::Approx(rst::score(ds)).epsilon(1e-12));
		CHECK(rst::score(ds) > 0.0);
	}
}

TEST_CASE("raw-row forms agree with the checked ones")
{
	const std::vector<double> rows{0.7, 0.2, 0.1, 0.1, 0.6, 0.3, 0.3, 0.3, 0.4};
	std::vector<double> mean(3);
	std::vector<Distribution> ds{Distribution({0.7, 0.2, 0.1}), Distribution({0.1, 0.6, 0.3}),
	                             Distribution({0.3, 0.3, 0.4})};
	CHECK(rst::detail::gjs(rows, 3, 3, mean) == rst::gjs(ds));
	CHECK(rst::detail::score(rows, 3, 3, 1e-4, mean) == rst::score(ds));
}

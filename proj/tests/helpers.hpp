#ifndef RST_TEST_HELPERS_HPP
#define RST_TEST_HELPERS_HPP

#include "rst/data.hpp"
#include "rst/selftrain.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

namespace testing {

inline rst::Split blobs(std::size_t n_labeled, std::size_t n_unlabeled, std::size_t n_test, std::uint64_t seed,
                        std::size_t n_classes = 2, std::size_t dim = 2, double separation = 3.0)
{
	rst::SynthSpec s;
	s.n_classes = n_classes;
	s.dim = dim;
	s.class_separation = separation;
	s.n_total = n_labeled + n_unlabeled + n_test;
	s.seed = seed;
	return rst::stratified_split(rst::synth(s), n_labeled, n_unlabeled, n_test, seed);
}

// Small, fast settings for loop-level tests.
inline rst::RunConfig quick_config(std::uint64_t seed = 1)
{
	rst::RunConfig c;
	c.seed = seed;
	c.n_classes = 2;
	c.train.learning_rate = 0.1;
	c.train.epochs = 5;
	return c;
}

inline std::string slurp(const std::filesystem::path& p)
{
	std::ifstream in(p, std::ios::binary);
	return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testing

#endif

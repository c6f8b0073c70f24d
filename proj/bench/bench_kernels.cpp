// Serial reference kernels against their OpenMP versions.
#include "rst/data.hpp"
#include "rst/kernels.hpp"
#include "rst/selftrain.hpp"

#include <benchmark/benchmark.h>

namespace {

rst::Corpus corpus(std::size_t n, std::size_t dim)
{
	rst::SynthSpec s;
	s.n_total = n;
	s.dim = dim;
	s.seed = 7;
	return rst::synth(s);
}

void logits(benchmark::State& st, rst::kernels::Exec exec)
{
	const auto c = corpus(static_cast<std::size_t>(st.range(0)), 64);
	const auto model = rst::ClassifierState::init(64, 2, 32, 1);
	for (auto _ : st)
		benchmark::DoNotOptimize(rst::kernels::logits(model, c.documents, exec));
	st.SetItemsProcessed(st.iterations() * st.range(0));
}

void score(benchmark::State& st, rst::kernels::Exec exec)
{
	const auto c = corpus(static_cast<std::size_t>(st.range(0)), 16);
	std::vector<rst::Matrix> probs;
	for (std::uint64_t k = 0; k < 3; ++k)
		probs.push_back(rst::kernels::probabilities(
		    rst::kernels::logits(rst::ClassifierState::init(16, 2, 0, k), c.documents, rst::kernels::Exec::serial)));
	for (auto _ : st)
		benchmark::DoNotOptimize(rst::kernels::score(probs, 1e-4, exec));
	st.SetItemsProcessed(st.iterations() * st.range(0));
}

void iteration(benchmark::State& st, rst::Execution exec)
{
	const auto c = corpus(1200, 8);
	const auto split = rst::stratified_split(c, 100, 1000, 100, 3);
	rst::PipelineSpec spec;
	spec.config.execution = exec;
	spec.config.n_classes = 2;
	spec.config.classifiers = static_cast<std::size_t>(st.range(0));
	spec.config.train.epochs = 5;
	for (auto _ : st) {
		auto u = split.unlabeled;
		std::vector<rst::PseudoLabel> s;
		benchmark::DoNotOptimize(rst::rst_iteration(split.labeled, u, s, spec, 0));
	}
}

}  // namespace

BENCHMARK_CAPTURE(logits, serial, rst::kernels::Exec::serial)->Arg(1000)->Arg(10000);
BENCHMARK_CAPTURE(logits, parallel, rst::kernels::Exec::parallel)->Arg(1000)->Arg(10000);
BENCHMARK_CAPTURE(score, serial, rst::kernels::Exec::serial)->Arg(1000)->Arg(100000);
BENCHMARK_CAPTURE(score, parallel, rst::kernels::Exec::parallel)->Arg(1000)->Arg(100000);
BENCHMARK_CAPTURE(iteration, sequential, rst::Execution::sequential)->Arg(2)->Arg(4);
BENCHMARK_CAPTURE(iteration, parallel, rst::Execution::parallel)->Arg(2)->Arg(4);

BENCHMARK_MAIN();

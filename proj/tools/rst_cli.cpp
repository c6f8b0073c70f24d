#include "rst/experiment.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv)
{
	CLI::App app{"Robust self-training experiments"};
	app.require_subcommand(1);

	rst::CommandOptions opts;
	std::string out;
	std::vector<std::uint64_t> seeds;

	auto add_common = [&](CLI::App* sub) {
		sub->add_option("--config", opts.config_path, "experiment INI file")->required();
		sub->add_option("--out", out, "output directory (overrides [experiment] out)");
		sub->add_option("--seeds", seeds, "comma-separated seeds")->delimiter(',');
		sub->add_option("--variant", opts.variants, "variant name, repeatable")->delimiter(',');
	};

	auto* run = app.add_subcommand("run", "train the configured variants and write reports, models and metrics");
	add_common(run);
	auto* compare = app.add_subcommand("compare", "evaluate variants over seeds and print a comparison table");
	add_common(compare);
	auto* curve = app.add_subcommand("curve", "drift, lambda, ratio, m or convergence curves");
	add_common(curve);
	curve->add_option("kind", opts.curve, "drift | lambda | ratio | m | convergence")->required();

	try {
		app.parse(argc, argv);
	} catch (const CLI::ParseError& e) {
		return app.exit(e) == 0 ? 0 : 1;
	}
	if (!out.empty())
		opts.out_dir = out;
	if (!seeds.empty())
		opts.seeds = seeds;

	if (run->parsed())
		return rst::cmd_run(opts);
	if (compare->parsed())
		return rst::cmd_compare(opts);
	return rst::cmd_curve(opts);
}

#include "doctest.h"

#include "helpers.hpp"
#include "rst/common.hpp"
#include "rst/experiment.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

const char* minimal = R"(# tiny synthetic run
[data]
source = synthetic
n_total = 300
separation = 3.0
seed = 2

[split]
labeled = 40
unlabeled = 100
test = 60

[train]
learning_rate = 0.1
epochs = 4

[experiment]
seeds = 1,2
)";

struct Scratch
{
	fs::path dir;

	explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("rst_cli_test_" + name))
	{
		fs::remove_all(dir);
		fs::create_directories(dir);
	}
	~Scratch() { fs::remove_all(dir); }

	fs::path write(const std::string& name, const std::string& text) const
	{
		std::ofstream(dir / name) << text;
		return dir / name;
	}
};

// Captures std::cerr for the lifetime of the object.
struct CaptureErr
{
	std::ostringstream buf;
	std::streambuf* old = std::cerr.rdbuf(buf.rdbuf());
	~CaptureErr() { std::cerr.rdbuf(old); }
};

rst::CommandOptions options(const fs::path& config, const fs::path& out)
{
	rst::CommandOptions o;
	o.config_path = config;
	o.out_dir = out;
	return o;
}

std::size_t count_lines_with(const std::string& text, const std::string& needle)
{
	std::istringstream in(text);
	std::size_t n = 0;
	for (std::string line; std::getline(in, line);)
		n += line.find(needle) != std::string::npos;
	return n;
}

}  // namespace

TEST_CASE("config parsing")
{
	std::istringstream in(minimal);
	const auto cfg = rst::parse_config(in);
	CHECK(cfg.synth.n_total == 300);
	CHECK(cfg.n_labeled == 40);
	CHECK(cfg.run.train.epochs == 4);
	CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2});
	CHECK(cfg.run.step_size == 100);
	CHECK(cfg.run.train.lambda == 0.3);
	CHECK(cfg.lambda_values == std::vector<double>{0.1, 0.3, 0.5, 0.7, 0.9});

	std::istringstream same(minimal);
	CHECK(rst::parse_config(same).hash() == cfg.hash());
	std::istringstream changed(std::string(minimal) + "\n[rst]\nlambda = 0.5\n");
	CHECK(rst::parse_config(changed).hash() != cfg.hash());

	std::istringstream unknown_key(std::string(minimal) + "\n[rst]\nbeta = 2\n");
	CHECK_THROWS_WITH_AS(rst::parse_config(unknown_key), doctest::Contains("beta"), rst::ConfigError);
	std::istringstream unknown_section("[extras]\nx = 1\n");
	CHECK_THROWS_AS(rst::parse_config(unknown_section), rst::ConfigError);
	std::istringstream bad_number("[rst]\nlambda = high\n");
	CHECK_THROWS_AS(rst::parse_config(bad_number), rst::ConfigError);
	std::istringstream bad_range("[rst]\nlambda = 1.5\n");
	CHECK_THROWS_AS(rst::parse_config(bad_range), rst::ConfigError);
	std::istringstream bad_variant("[method]\nvariant = rst_full,nope\n");
	CHECK_THROWS_AS(rst::parse_config(bad_variant), rst::ConfigError);
}

TEST_CASE("run writes reproducible outputs")
{
	Scratch s("run");
	const auto config = s.write("exp.ini", minimal);
	const auto before = testing::slurp(config);
	CaptureErr err;
	REQUIRE(rst::cmd_run(options(config, s.dir / "a")) == 0);
	REQUIRE(rst::cmd_run(options(config, s.dir / "b")) == 0);
	CHECK(testing::slurp(config) == before);

	for (const char* f : {"metrics.csv", "config.ini", "config.effective.ini", "report_rst_full_seed1.jsonl",
	                      "model_rst_full_seed2.ckpt"})
		CHECK(fs::exists(s.dir / "a" / f));
	const auto csv = testing::slurp(s.dir / "a" / "metrics.csv");
	CHECK(csv == testing::slurp(s.dir / "b" / "metrics.csv"));
	CHECK(testing::slurp(s.dir / "a" / "model_rst_full_seed1.ckpt") ==
	      testing::slurp(s.dir / "b" / "model_rst_full_seed1.ckpt"));
	CHECK(testing::slurp(s.dir / "a" / "config.ini") == minimal);

	std::istringstream in(minimal);
	const auto hash = rst::parse_config(in).hash();
	CHECK(csv.rfind("# config_hash=" + hash + "\n", 0) == 0);
	CHECK(testing::slurp(s.dir / "a" / "report_rst_full_seed1.jsonl").find(hash) != std::string::npos);
	CHECK(testing::slurp(s.dir / "a" / "model_rst_full_seed1.ckpt").find(hash) != std::string::npos);
	CHECK(count_lines_with(csv, ",accuracy,") == 2 + 2);
}

TEST_CASE("command errors")
{
	Scratch s("errors");
	CaptureErr err;
	CHECK(rst::cmd_run(options(s.dir / "missing.ini", s.dir / "out")) == 1);
	CHECK(err.buf.str().find("missing.ini") != std::string::npos);
	CHECK(err.buf.str().find("\"status\":\"error\"") != std::string::npos);

	const auto config = s.write("exp.ini", minimal);
	auto o = options(config, s.dir / "out");
	o.variants = {"rst_full", "not_a_variant"};
	CHECK(rst::cmd_compare(o) == 1);
	o.variants = {"rst_full"};
	CHECK(rst::cmd_compare(o) == 1);

	auto c = options(config, s.dir / "out");
	c.curve = "spiral";
	CHECK(rst::cmd_curve(c) == 1);
	const auto empty = s.write("empty.ini", std::string(minimal) + "\n[curve]\nlambda_values =\n");
	auto e = options(empty, s.dir / "out");
	e.curve = "lambda";
	CHECK(rst::cmd_curve(e) == 1);
}

TEST_CASE("compare emits one row per variant over a shared split")
{
	Scratch s("compare");
	const auto config = s.write("exp.ini", minimal);
	auto o = options(config, s.dir / "out");
	o.variants = {"rst_full", "self_train"};
	CaptureErr err;
	REQUIRE(rst::cmd_compare(o) == 0);
	const auto table = testing::slurp(s.dir / "out" / "compare_table.csv");
	CHECK(count_lines_with(table, "rst_full,") == 1);
	CHECK(count_lines_with(table, "self_train,") == 1);

	std::istringstream in(minimal);
	const auto cfg = rst::parse_config(in);
	const auto r = rst::compare_variants(cfg, {rst::Variant::rst_full, rst::Variant::self_train});
	REQUIRE(r.table.size() == 2);
	CHECK(r.table[0].data_fingerprint == r.table[1].data_fingerprint);
	CHECK(r.per_seed.size() == 4);

	REQUIRE(rst::cmd_compare(o) == 0);
	CHECK(testing::slurp(s.dir / "out" / "compare_table.csv") == table);
}

TEST_CASE("curves")
{
	Scratch s("curve");
	const auto config =
	    s.write("exp.ini", std::string(minimal) + "\n[curve]\ncheckpoints = 0,50,100\nlambda_values = 0.1,0.3,0.5,0.7,0.9\n");
	CaptureErr err;
	auto o = options(config, s.dir / "out");
	o.curve = "drift";
	REQUIRE(rst::cmd_curve(o) == 0);
	const auto drift = testing::slurp(s.dir / "out" / "curve_drift.csv");
	CHECK(count_lines_with(drift, "n_unlabeled") == 3 * 2 + 3 * 2);
	CHECK(count_lines_with(drift, ",1,accuracy") == 3);

	o.curve = "lambda";
	o.seeds = std::vector<std::uint64_t>{4};
	REQUIRE(rst::cmd_curve(o) == 0);
	const auto sweep = testing::slurp(s.dir / "out" / "curve_lambda.csv");
	CHECK(count_lines_with(sweep, ",4,accuracy") == 5);

	o.curve = "convergence";
	REQUIRE(rst::cmd_curve(o) == 0);
	CHECK(count_lines_with(testing::slurp(s.dir / "out" / "curve_convergence.csv"), ",4,accuracy") == 4);
}

TEST_CASE("text corpora run end to end through the feature cache")
{
	Scratch s("jsonl");
	std::string corpus;
	const char* pos[] = {"great", "lovely", "superb", "fine", "good"};
	const char* neg[] = {"awful", "dull", "poor", "bad", "weak"};
	for (int i = 0; i < 120; ++i) {
		const bool y = i % 2;
		corpus += "{\"id\":\"t" + std::to_string(i) + "\",\"text\":\"a " + (y ? pos[i % 5] : neg[i % 5]) +
		          " movie " + std::to_string(i % 7) + "\",\"label\":" + (y ? "1" : "0") + "}\n";
	}
	s.write("corpus.jsonl", corpus);
	const auto config = s.write("text.ini", R"([data]
source = jsonl
path = corpus.jsonl
feature_cache = corpus.feat
hash_dim = 256

[split]
labeled = 20
unlabeled = 60
test = 40

[train]
learning_rate = 0.1
epochs = 5

[experiment]
seeds = 1
)");
	CaptureErr err;
	REQUIRE(rst::cmd_run(options(config, s.dir / "a")) == 0);
	CHECK(fs::exists(s.dir / "corpus.feat"));
	REQUIRE(rst::cmd_run(options(config, s.dir / "b")) == 0);
	CHECK(testing::slurp(s.dir / "a" / "metrics.csv") == testing::slurp(s.dir / "b" / "metrics.csv"));
}

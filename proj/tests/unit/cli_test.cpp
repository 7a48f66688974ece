#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "settings.hpp"
#include "support/temp_dir.hpp"
#include "wavecast/metrics.hpp"
#include "wavecast/series.hpp"

using namespace wavecast;

namespace {

struct Outcome {
	int code = 0;
	std::string out;
	std::string err;
};

Outcome run(const std::vector<std::string> &args) {
	std::ostringstream out, err;
	const int code = cli::run_cli(args, out, err);
	return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path &path) {
	std::ifstream in(path, std::ios::binary);
	std::ostringstream s;
	s << in.rdbuf();
	return s.str();
}

void write_series(const std::filesystem::path &path, const std::vector<double> &values) {
	std::ofstream out(path);
	out << "value\n";
	for (double v : values) {
		out << format_double(v) << "\n";
	}
}

std::vector<double> trend_seasonal(std::size_t n) {
	std::vector<double> y(n);
	for (std::size_t t = 0; t < n; ++t) {
		y[t] = static_cast<double>(t) / 100.0 + std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 24.0);
	}
	return y;
}

void write_metrics(const std::filesystem::path &path, const std::vector<std::vector<double>> &cases,
                   const std::vector<std::string> &models) {
	eval::MetricTable table;
	for (std::size_t c = 0; c < cases.size(); ++c) {
		for (std::size_t m = 0; m < models.size(); ++m) {
			const double v = cases[c][m];
			table.add({"d" + std::to_string(c), "short", models[m], {v, v, v, v}});
		}
	}
	eval::write_metrics_csv(path, table);
}

class CliTest : public ::testing::Test {
protected:
	test_support::TempDir dir{"wavecast-cli"};
	std::string path(const std::string &name) const { return (dir / name).string(); }
};

} // namespace

TEST_F(CliTest, Version) {
	const auto r = run({"version"});
	EXPECT_EQ(r.code, 0);
	EXPECT_NE(r.out.find("wavecast "), std::string::npos);
}

TEST_F(CliTest, UsageErrorsExitTwo) {
	EXPECT_EQ(run({}).code, 2);
	EXPECT_EQ(run({"frobnicate"}).code, 2);
	EXPECT_EQ(run({"run", "--bogus"}).code, 2);
	EXPECT_EQ(run({"run", "--help"}).code, 0);
}

TEST_F(CliTest, NaiveRunRepeatsLastTrainingValue) {
	write_series(dir / "ten.csv", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
	const auto r = run({"run", "--data", path("ten.csv"), "--column", "value", "--test-len", "2", "--model", "naive",
	                    "--out", path("o")});
	ASSERT_EQ(r.code, 0) << r.err;
	EXPECT_EQ(slurp(dir / "o" / "predictions_naive.csv"), "index,actual,predicted\n8,9,8\n9,10,8\n");
	const auto metrics = eval::read_metrics_csv(dir / "o" / "metrics.csv");
	ASSERT_EQ(metrics.rows.size(), 1u);
	EXPECT_DOUBLE_EQ(metrics.rows[0].scores.mae, 1.5);
}

TEST_F(CliTest, RunIsByteIdenticalForSameSeed) {
	write_series(dir / "s.csv", trend_seasonal(100));
	const std::vector<std::string> base{"run", "--data", path("s.csv"), "--column", "value", "--test-len", "12",
	                                    "--epochs", "2", "--model", "wtransformer", "--model", "transformer"};
	auto first = base, second = base;
	first.insert(first.end(), {"--out", path("a")});
	second.insert(second.end(), {"--out", path("b"), "--jobs", "3"});
	ASSERT_EQ(run(first).code, 0);
	ASSERT_EQ(run(second).code, 0);
	for (const std::string file : {"predictions_wtransformer.csv", "predictions_transformer.csv", "metrics.csv"}) {
		EXPECT_EQ(slurp(dir / "a" / file), slurp(dir / "b" / file)) << file;
	}
	const auto metrics = eval::read_metrics_csv(dir / "a" / "metrics.csv");
	EXPECT_EQ(metrics.rows.size(), 2u);
	EXPECT_TRUE(std::filesystem::exists(dir / "a" / "loss_transformer.csv"));
	EXPECT_TRUE(std::filesystem::exists(dir / "a" / "loss_wtransformer_D1.csv"));
	EXPECT_TRUE(std::filesystem::exists(dir / "a" / "forecast.svg"));
}

TEST_F(CliTest, ManifestReplaysRun) {
	write_series(dir / "s.csv", trend_seasonal(80));
	ASSERT_EQ(run({"run", "--data", path("s.csv"), "--column", "value", "--test-len", "10", "--epochs", "1",
	               "--seed", "9", "--out", path("a")})
	              .code,
	          0);
	const auto replay = run({"run", "--config", path("a/manifest.txt"), "--out", path("b")});
	ASSERT_EQ(replay.code, 0) << replay.err;
	EXPECT_EQ(slurp(dir / "a" / "predictions_wtransformer.csv"), slurp(dir / "b" / "predictions_wtransformer.csv"));
	EXPECT_EQ(slurp(dir / "a" / "metrics.csv"), slurp(dir / "b" / "metrics.csv"));
	const auto manifest = slurp(dir / "b" / "manifest.txt");
	EXPECT_NE(manifest.find("seed=9\n"), std::string::npos);
	EXPECT_NE(manifest.find("result.data_fnv1a64="), std::string::npos);
}

TEST_F(CliTest, SettingPrecedence) {
	{
		std::ofstream config(dir / "c.txt");
		config << "# comment\nepochs = 3\nseed=5\nmodel=naive\n";
	}
	cli::RunConfig c;
	for (const auto &[k, v] : cli::read_settings(dir / "c.txt")) {
		cli::apply_setting(c, k, v);
	}
	EXPECT_EQ(c.transformer.epochs, 3u);
	EXPECT_EQ(c.seed, 5u);
	EXPECT_EQ(c.models, (std::vector<std::string>{"naive"}));

	write_series(dir / "s.csv", trend_seasonal(40));
	ASSERT_EQ(run({"run", "--config", path("c.txt"), "--data", path("s.csv"), "--column", "value", "--test-len",
	               "5", "--epochs", "1", "--out", path("o")})
	              .code,
	          0);
	const auto manifest = slurp(dir / "o" / "manifest.txt");
	EXPECT_NE(manifest.find("epochs=1\n"), std::string::npos);
	EXPECT_NE(manifest.find("seed=5\n"), std::string::npos);
}

TEST_F(CliTest, SeedFallsBackToEnvironment) {
	write_series(dir / "s.csv", trend_seasonal(40));
	::setenv("WAVECAST_SEED", "77", 1);
	const auto from_env = run({"run", "--data", path("s.csv"), "--column", "value", "--test-len", "5", "--model",
	                           "naive", "--out", path("e")});
	const auto from_flag = run({"run", "--data", path("s.csv"), "--column", "value", "--test-len", "5", "--model",
	                            "naive", "--seed", "3", "--out", path("f")});
	::setenv("WAVECAST_SEED", "x", 1);
	const auto bad_env = run({"run", "--data", path("s.csv"), "--column", "value", "--test-len", "5", "--model",
	                          "naive", "--out", path("g")});
	::unsetenv("WAVECAST_SEED");
	ASSERT_EQ(from_env.code, 0);
	ASSERT_EQ(from_flag.code, 0);
	EXPECT_NE(slurp(dir / "e" / "manifest.txt").find("seed=77\n"), std::string::npos);
	EXPECT_NE(slurp(dir / "f" / "manifest.txt").find("seed=3\n"), std::string::npos);
	EXPECT_EQ(bad_env.code, 2);
}

TEST_F(CliTest, InputErrorsExitTwoWithMessage) {
	const auto missing = run({"decompose", "--data", path("nope.csv"), "--out", path("o")});
	EXPECT_EQ(missing.code, 2);
	EXPECT_NE(missing.err.find("nope.csv"), std::string::npos);

	write_series(dir / "s.csv", trend_seasonal(30));
	EXPECT_EQ(run({"run", "--data", path("s.csv"), "--column", "value", "--out", path("o")}).code, 2);
	EXPECT_EQ(run({"run", "--data", path("s.csv"), "--column", "value", "--test-len", "x"}).code, 2);
	EXPECT_EQ(run({"run", "--data", path("s.csv"), "--column", "value", "--test-len", "5", "--model", "arima"}).code,
	          2);
	EXPECT_EQ(run({"run", "--data", path("s.csv"), "--column", "value", "--test-len", "5", "--heads", "3"}).code, 2);
	{
		std::ofstream config(dir / "bad.txt");
		config << "epochz=3\n";
	}
	const auto bad_key = run({"run", "--config", path("bad.txt")});
	EXPECT_EQ(bad_key.code, 2);
	EXPECT_NE(bad_key.err.find("epochz"), std::string::npos);
}

TEST_F(CliTest, DivergenceExitsOneWithStage) {
	write_series(dir / "s.csv", trend_seasonal(40));
	const auto r = run({"run", "--data", path("s.csv"), "--column", "value", "--test-len", "5", "--model",
	                    "transformer", "--epochs", "2", "--lr", "1e300", "--out", path("o")});
	EXPECT_EQ(r.code, 1);
	EXPECT_NE(r.err.find("transformer:"), std::string::npos) << r.err;
}

TEST_F(CliTest, DecomposeWritesSevenSeriesForLongTrainingSplit) {
	// 2137 training points, like the website-traffic series.
	write_series(dir / "traffic.csv", trend_seasonal(2137 + 30));
	const auto r = run({"decompose", "--data", path("traffic.csv"), "--column", "value", "--test-len", "30", "--out",
	                    path("d")});
	ASSERT_EQ(r.code, 0) << r.err;
	std::size_t bands = 0;
	for (const auto &entry : std::filesystem::directory_iterator(dir / "d")) {
		bands += entry.path().filename().string().starts_with("band_") ? 1 : 0;
	}
	EXPECT_EQ(bands, 7u);
	EXPECT_TRUE(std::filesystem::exists(dir / "d" / "band_S6.csv"));
	EXPECT_TRUE(std::filesystem::exists(dir / "d" / "decomposition.svg"));
	const auto smooth = load_csv(dir / "d" / "band_S6.csv", {.has_header = true, .column = "value"});
	EXPECT_EQ(smooth.size(), 2137u);
}

TEST_F(CliTest, DecomposeConstantInputGivesZeroDetails) {
	write_series(dir / "c.csv", std::vector<double>(64, 2.5));
	ASSERT_EQ(run({"decompose", "--data", path("c.csv"), "--column", "value", "--out", path("d")}).code, 0);
	for (const std::string band : {"D1", "D2", "D3"}) {
		const auto s = load_csv(dir / "d" / ("band_" + band + ".csv"), {.has_header = true, .column = "value"});
		for (double v : s.values()) {
			EXPECT_EQ(v, 0.0) << band;
		}
	}
}

TEST_F(CliTest, EvaluateMatchesRunMetrics) {
	write_series(dir / "s.csv", trend_seasonal(50));
	ASSERT_EQ(run({"run", "--data", path("s.csv"), "--column", "value", "--test-len", "6", "--model", "naive",
	               "--model", "transformer", "--epochs", "1", "--out", path("r")})
	              .code,
	          0);
	const auto r = run({"evaluate", "--data", path("s.csv"), "--column", "value", "--test-len", "6", "--predictions",
	                    path("r/predictions_naive.csv"), "--predictions", path("r/predictions_transformer.csv"),
	                    "--out", path("e")});
	ASSERT_EQ(r.code, 0) << r.err;
	EXPECT_EQ(slurp(dir / "r" / "metrics.csv"), slurp(dir / "e" / "metrics.csv"));
	const auto mismatch = run({"evaluate", "--data", path("s.csv"), "--column", "value", "--test-len", "7",
	                           "--predictions", path("r/predictions_naive.csv"), "--out", path("e2")});
	EXPECT_EQ(mismatch.code, 2);
}

TEST_F(CliTest, McbFixtures) {
	write_metrics(dir / "dom.csv", {{1, 2}, {3, 4}}, {"A", "B"});
	ASSERT_EQ(run({"mcb", "--metrics", path("dom.csv"), "--out", path("m1")}).code, 0);
	const auto dominance = slurp(dir / "m1" / "mcb_short.csv");
	EXPECT_TRUE(dominance.starts_with("model,mean_rank,half_width,lower,upper,not_significantly_worse\n"));
	EXPECT_NE(dominance.find("\nA,1,"), std::string::npos);
	EXPECT_NE(dominance.find("\nB,2,"), std::string::npos);
	EXPECT_TRUE(std::filesystem::exists(dir / "m1" / "mcb_short.svg"));

	write_metrics(dir / "tie.csv", {{5, 5, 5}}, {"A", "B", "C"});
	ASSERT_EQ(run({"mcb", "--metrics", path("tie.csv"), "--out", path("m2")}).code, 0);
	const auto ties = slurp(dir / "m2" / "mcb_short.csv");
	for (const std::string model : {"A", "B", "C"}) {
		EXPECT_NE(ties.find("\n" + model + ",2,"), std::string::npos);
	}

	write_metrics(dir / "abc.csv", {{1, 2, 3}, {3, 1, 2}}, {"A", "B", "C"});
	ASSERT_EQ(run({"mcb", "--metrics", path("abc.csv"), "--out", path("m3")}).code, 0);
	const auto abc = slurp(dir / "m3" / "mcb_short.csv");
	EXPECT_NE(abc.find("\nB,1.5,"), std::string::npos);
	EXPECT_NE(abc.find("\nA,2,"), std::string::npos);
	EXPECT_NE(abc.find("\nC,2.5,"), std::string::npos);
}

TEST_F(CliTest, McbMissingCellIsNamed) {
	{
		std::ofstream out(dir / "gap.csv");
		out << "data,horizon,model,rmse,mae,smape,mase\n"
		    << "d0,short,A,1,1,1,1\nd0,short,B,2,2,2,2\nd1,short,A,1,1,1,1\n";
	}
	const auto r = run({"mcb", "--metrics", path("gap.csv"), "--out", path("m")});
	EXPECT_EQ(r.code, 2);
	EXPECT_NE(r.err.find("d1"), std::string::npos) << r.err;
	EXPECT_NE(r.err.find("B"), std::string::npos) << r.err;
}

TEST_F(CliTest, PaperModeRuns) {
	write_series(dir / "s.csv", trend_seasonal(60));
	const auto r = run({"run", "--data", path("s.csv"), "--column", "value", "--test-len", "8", "--model",
	                    "wtransformer", "--epochs", "1", "--paper-mode", "--save-models", "--out", path("p")});
	ASSERT_EQ(r.code, 0) << r.err;
	EXPECT_NE(slurp(dir / "p" / "manifest.txt").find("paper-mode=true\n"), std::string::npos);
	EXPECT_TRUE(std::filesystem::exists(dir / "p" / "models" / "wtransformer_D1.ckpt"));
}

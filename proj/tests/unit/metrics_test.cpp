#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "support/temp_dir.hpp"
#include "wavecast/errors.hpp"
#include "wavecast/metrics.hpp"
#include "wavecast/rng.hpp"

using namespace wavecast;
using namespace wavecast::eval;

namespace {

using Vec = std::vector<double>;

// Table with one metric row per (dataset, model); every metric gets `value`.
MetricTable table_from(const std::vector<std::vector<double>> &cases, const std::vector<std::string> &models,
                       const std::string &horizon = "short") {
	MetricTable table;
	for (std::size_t c = 0; c < cases.size(); ++c) {
		for (std::size_t m = 0; m < models.size(); ++m) {
			const double v = cases[c][m];
			table.add({"data" + std::to_string(c), horizon, models[m], {v, v, v, v}});
		}
	}
	return table;
}

} // namespace

TEST(PointMetrics, GoldenValues) {
	EXPECT_NEAR(rmse(Vec{0, 0}, Vec{3, 4}), std::sqrt(12.5), 1e-12);
	EXPECT_NEAR(mae(Vec{0, 0}, Vec{3, 4}), 3.5, 1e-12);
	EXPECT_EQ(rmse(Vec{1}, Vec{3}), 2.0);
	EXPECT_EQ(mae(Vec{1}, Vec{3}), 2.0);
	EXPECT_NEAR(smape(Vec{100}, Vec{50}), 200.0 * 50.0 / 150.0, 1e-12);
	EXPECT_NEAR(smape(Vec{100, 200}, Vec{110, 180}), (200.0 * 10 / 210 + 200.0 * 20 / 380) / 2, 1e-12);
	EXPECT_NEAR(smape(Vec{100, 200}, Vec{110, 180}), 10.025, 1e-3);
	EXPECT_NEAR(mase(Vec{10, 10}, Vec{12, 9}, Vec{1, 2, 3, 4}), 1.5, 1e-12);
}

TEST(PointMetrics, PerfectForecastScoresZero) {
	const Vec a{1.5, -2, 7};
	EXPECT_EQ(rmse(a, a), 0.0);
	EXPECT_EQ(mae(a, a), 0.0);
	EXPECT_EQ(smape(a, a), 0.0);
	EXPECT_EQ(mase(a, a, Vec{1, 3}), 0.0);
	EXPECT_EQ(smape(Vec{0, 0}, Vec{0, 0}), 0.0);
}

TEST(PointMetrics, ErrorPaths) {
	EXPECT_THROW(rmse(Vec{1, 2}, Vec{1}), InputError);
	EXPECT_THROW(mae(Vec{}, Vec{}), InputError);
	EXPECT_THROW(smape(Vec{1}, Vec{1, 2}), InputError);
	EXPECT_THROW(mase(Vec{1}, Vec{2}, Vec{5, 5, 5}), InputError);
	EXPECT_THROW(mase(Vec{1}, Vec{2}, Vec{5}), InputError);
	EXPECT_THROW(mase(Vec{1, 2}, Vec{2}, Vec{1, 2}), InputError);
}

TEST(PointMetrics, SeasonalMase) {
	// Period-2 naive MAE of [1, 5, 2, 7] is (1 + 2) / 2.
	EXPECT_NEAR(mase(Vec{0}, Vec{3}, Vec{1, 5, 2, 7}, 2), 2.0, 1e-12);
	EXPECT_THROW(mase(Vec{0}, Vec{3}, Vec{1, 5}, 2), InputError);
}

TEST(PointMetrics, Properties) {
	Rng rng(1);
	for (int trial = 0; trial < 2000; ++trial) {
		const std::size_t h = 1 + rng.below(20);
		Vec a(h), p(h), in(2 + rng.below(20));
		for (std::size_t i = 0; i < h; ++i) {
			a[i] = rng.uniform(-100, 100);
			p[i] = rng.uniform(-100, 100);
		}
		for (auto &v : in) {
			v = rng.uniform(-100, 100);
		}
		EXPECT_GE(rmse(a, p), mae(a, p) - 1e-12);
		const double s = smape(a, p);
		EXPECT_GE(s, 0.0);
		EXPECT_LE(s, 200.0);

		std::vector<std::size_t> idx(h);
		for (std::size_t i = 0; i < h; ++i) {
			idx[i] = i;
		}
		rng.shuffle(std::span<std::size_t>(idx));
		Vec ar(h), pr(h);
		for (std::size_t i = 0; i < h; ++i) {
			ar[i] = a[idx[i]];
			pr[i] = p[idx[i]];
		}
		EXPECT_NEAR(rmse(ar, pr), rmse(a, p), 1e-10);
		EXPECT_NEAR(smape(ar, pr), smape(a, p), 1e-10);

		const double c = rng.uniform(0.01, 100);
		Vec ac(a), pc(p), ic(in);
		for (auto &v : ac) v *= c;
		for (auto &v : pc) v *= c;
		for (auto &v : ic) v *= c;
		EXPECT_NEAR(rmse(ac, pc), c * rmse(a, p), 1e-9 * c * rmse(a, p) + 1e-12);
		EXPECT_NEAR(mae(ac, pc), c * mae(a, p), 1e-9 * c * mae(a, p) + 1e-12);
		EXPECT_NEAR(smape(ac, pc), smape(a, p), 1e-9);
		EXPECT_NEAR(mase(ac, pc, ic), mase(a, p, in), 1e-9 * mase(a, p, in));
	}
}

TEST(PointMetrics, EqualAbsoluteErrorsGiveRmseEqualMae) {
	EXPECT_NEAR(rmse(Vec{0, 0, 0}, Vec{2, -2, 2}), mae(Vec{0, 0, 0}, Vec{2, -2, 2}), 1e-15);
}

TEST(Ranks, MidRanksAndNonFinite) {
	EXPECT_EQ(rank_with_ties(Vec{3, 1, 2}), (Vec{3, 1, 2}));
	EXPECT_EQ(rank_with_ties(Vec{1, 1, 2}), (Vec{1.5, 1.5, 3}));
	EXPECT_EQ(rank_with_ties(Vec{INFINITY, 0, NAN}), (Vec{2.5, 1, 2.5}));
	EXPECT_EQ(rank_with_ties(Vec{5, 5, 5, 5}), (Vec{2.5, 2.5, 2.5, 2.5}));
}

TEST(StudentizedRange, TwoGroupsIsScaledNormalQuantile) {
	// q(2, inf) = sqrt(2) * z_{1 - alpha/2}
	EXPECT_NEAR(studentized_range_quantile(2, 0.05), std::sqrt(2.0) * 1.959963984540054, 1e-6);
	EXPECT_NEAR(studentized_range_quantile(2, 0.10), std::sqrt(2.0) * 1.6448536269514722, 1e-6);
	EXPECT_NEAR(studentized_range_quantile(2, 0.01), std::sqrt(2.0) * 2.5758293035489004, 1e-6);
}

TEST(StudentizedRange, PublishedTableValues) {
	EXPECT_NEAR(studentized_range_quantile(3, 0.05), 3.314, 1e-3);
	EXPECT_NEAR(studentized_range_quantile(5, 0.05), 3.858, 1e-3);
	EXPECT_NEAR(studentized_range_quantile(10, 0.05), 4.474, 1e-3);
	EXPECT_NEAR(studentized_range_quantile(20, 0.05), 5.012, 1e-3);
	EXPECT_NEAR(studentized_range_quantile(3, 0.01), 4.120, 1e-3);
	for (std::size_t k = 3; k <= 20; ++k) {
		EXPECT_GT(studentized_range_quantile(k, 0.05), studentized_range_quantile(k - 1, 0.05));
		EXPECT_GT(studentized_range_quantile(k, 0.01), studentized_range_quantile(k, 0.05));
		EXPECT_GT(studentized_range_quantile(k, 0.05), studentized_range_quantile(k, 0.10));
	}
	EXPECT_THROW(studentized_range_quantile(1, 0.05), InputError);
	EXPECT_THROW(studentized_range_quantile(21, 0.05), InputError);
	EXPECT_THROW(studentized_range_quantile(3, 0.2), InputError);
}

TEST(Mcb, Dominance) {
	const auto result = mcb(table_from({{1, 2}, {0.5, 9}, {3, 4}}, {"A", "B"}));
	EXPECT_EQ(result.entry("A").mean_rank, 1.0);
	EXPECT_EQ(result.entry("B").mean_rank, 2.0);
	EXPECT_EQ(result.best, "A");
	EXPECT_EQ(result.cases, 12u);
}

TEST(Mcb, ThreeModelsTwoCases) {
	MetricTable table;
	// One dataset, one metric column populated per case by using two datasets
	// whose four metrics all carry the same triple.
	table = table_from({{1, 2, 3}, {3, 1, 2}}, {"A", "B", "C"});
	const auto result = mcb(table);
	EXPECT_DOUBLE_EQ(result.entry("A").mean_rank, 2.0);
	EXPECT_DOUBLE_EQ(result.entry("B").mean_rank, 1.5);
	EXPECT_DOUBLE_EQ(result.entry("C").mean_rank, 2.5);
	EXPECT_EQ(result.best, "B");
	EXPECT_EQ(result.entries.front().model, "B");
	EXPECT_EQ(result.entries.back().model, "C");
}

TEST(Mcb, AllTies) {
	for (std::size_t k = 2; k <= 6; ++k) {
		std::vector<std::string> models;
		for (std::size_t m = 0; m < k; ++m) {
			models.push_back("M" + std::to_string(m));
		}
		const auto result = mcb(table_from({std::vector<double>(k, 1.0), std::vector<double>(k, 4.0)}, models));
		for (const auto &e : result.entries) {
			EXPECT_DOUBLE_EQ(e.mean_rank, (static_cast<double>(k) + 1) / 2);
			EXPECT_TRUE(e.not_significantly_worse);
		}
	}
}

TEST(Mcb, HalfWidthFormulaAndShrinkage) {
	const double q = studentized_range_quantile(3, 0.05);
	EXPECT_NEAR(mcb_half_width(3, 28, 0.05), 0.5 * q * std::sqrt(3.0 * 4.0 / (6.0 * 28.0)), 1e-15);
	const double w8 = mcb_half_width(3, 8, 0.05);
	const double w28 = mcb_half_width(3, 28, 0.05);
	const double w56 = mcb_half_width(3, 56, 0.05);
	EXPECT_GT(w8, w28);
	EXPECT_GT(w28, w56);
	EXPECT_THROW(mcb_half_width(3, 0, 0.05), InputError);
}

TEST(Mcb, MeanRanksAverageToMidpoint) {
	Rng rng(2);
	std::vector<std::vector<double>> cases(7, std::vector<double>(4));
	for (auto &c : cases) {
		for (auto &v : c) {
			v = std::floor(rng.uniform(0, 5));
		}
	}
	const auto result = mcb(table_from(cases, {"A", "B", "C", "D"}));
	double total = 0;
	for (const auto &e : result.entries) {
		EXPECT_GE(e.mean_rank, 1.0);
		EXPECT_LE(e.mean_rank, 4.0);
		total += e.mean_rank;
	}
	EXPECT_NEAR(total, 4.0 * 5.0 / 2.0, 1e-12);
}

TEST(Mcb, MonotoneTransformLeavesResultUnchanged) {
	Rng rng(3);
	std::vector<std::vector<double>> cases(7, std::vector<double>(3));
	for (auto &c : cases) {
		for (auto &v : c) {
			v = rng.uniform(0.1, 10);
		}
	}
	auto transformed = cases;
	for (auto &c : transformed) {
		for (auto &v : c) {
			v = std::exp(3 * v) + 5;
		}
	}
	const auto a = mcb(table_from(cases, {"A", "B", "C"}));
	const auto b = mcb(table_from(transformed, {"A", "B", "C"}));
	ASSERT_EQ(a.entries.size(), b.entries.size());
	for (std::size_t i = 0; i < a.entries.size(); ++i) {
		EXPECT_EQ(a.entries[i].model, b.entries[i].model);
		EXPECT_EQ(a.entries[i].mean_rank, b.entries[i].mean_rank);
		EXPECT_EQ(a.entries[i].half_width, b.entries[i].half_width);
		EXPECT_EQ(a.entries[i].not_significantly_worse, b.entries[i].not_significantly_worse);
	}
}

TEST(Mcb, SignificanceFlag) {
	std::vector<std::vector<double>> cases(14, std::vector<double>{1, 2, 3});
	const auto result = mcb(table_from(cases, {"A", "B", "C"}));
	// 56 cases of strict dominance: intervals are narrow and disjoint.
	EXPECT_TRUE(result.entry("A").not_significantly_worse);
	EXPECT_FALSE(result.entry("B").not_significantly_worse);
	EXPECT_FALSE(result.entry("C").not_significantly_worse);
}

TEST(Mcb, NonFiniteRanksWorst) {
	const auto result = mcb(table_from({{1, INFINITY}, {1, 2}}, {"A", "B"}));
	EXPECT_EQ(result.entry("A").mean_rank, 1.0);
	EXPECT_EQ(result.entry("B").mean_rank, 2.0);
}

TEST(Mcb, PerHorizonPooling) {
	auto table = table_from({{1, 2}}, {"A", "B"}, "short");
	table.append(table_from({{2, 1}}, {"A", "B"}, "long"));
	EXPECT_EQ(mcb(table, 0.05, "short").best, "A");
	EXPECT_EQ(mcb(table, 0.05, "long").best, "B");
	EXPECT_EQ(mcb(table).cases, 8u);
	EXPECT_THROW(mcb(table, 0.05, "medium"), InputError);
}

TEST(Mcb, ErrorPaths) {
	auto missing = table_from({{1, 2}, {1, 2}}, {"A", "B"});
	missing.rows.pop_back();
	EXPECT_THROW(mcb(missing), InputError);
	EXPECT_THROW(mcb(table_from({{1}}, {"A"})), InputError);
	auto duplicate = table_from({{1, 2}}, {"A", "B"});
	duplicate.add(duplicate.rows.front());
	EXPECT_THROW(mcb(duplicate), InputError);
}

TEST(MetricsCsv, RoundTrip) {
	MetricTable table;
	table.add({"nflx", "short", "wtransformer", {1.5, 1.25, 3.0 / 7.0, 0.9}});
	table.add({"nflx", "short", "tcn", {INFINITY, INFINITY, 200, INFINITY}});
	test_support::TempDir dir;
	write_metrics_csv(dir / "m.csv", table);
	const auto back = read_metrics_csv(dir / "m.csv");
	ASSERT_EQ(back.rows.size(), 2u);
	EXPECT_EQ(back.rows[0].scores.smape, 3.0 / 7.0);
	EXPECT_EQ(back.rows[1].model, "tcn");
	EXPECT_TRUE(std::isinf(back.rows[1].scores.rmse));
	EXPECT_EQ(back.models(), (std::vector<std::string>{"wtransformer", "tcn"}));
}

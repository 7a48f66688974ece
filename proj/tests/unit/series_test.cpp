#include <cmath>
#include <fstream>

#include <gtest/gtest.h>

#include "support/temp_dir.hpp"
#include "wavecast/errors.hpp"
#include "wavecast/modwt.hpp"
#include "wavecast/rng.hpp"
#include "wavecast/series.hpp"

using namespace wavecast;

namespace {

void write_text(const std::filesystem::path &path, const std::string &text) {
	std::ofstream out(path);
	out << text;
}

} // namespace

TEST(TimeSeries, RejectsEmptyAndNonFinite) {
	EXPECT_THROW(TimeSeries({}), InputError);
	EXPECT_THROW(TimeSeries({1.0, std::nan("")}), InputError);
	EXPECT_THROW(TimeSeries({INFINITY}), InputError);
}

TEST(LoadCsv, ReadsColumnInRowOrder) {
	test_support::TempDir dir;
	write_text(dir / "a.csv", "value\n1.0\n2.0\n3.0\n");
	const auto s = load_csv(dir / "a.csv", {.has_header = true, .column = "value"});
	ASSERT_EQ(s.size(), 3u);
	EXPECT_EQ(s[0], 1.0);
	EXPECT_EQ(s[1], 2.0);
	EXPECT_EQ(s[2], 3.0);
}

TEST(LoadCsv, SelectsColumnByIndexWithoutHeader) {
	test_support::TempDir dir;
	write_text(dir / "a.csv", "2020-01-01,5.5\r\n2020-01-02,6.25\r\n");
	const auto s = load_csv(dir / "a.csv", {.has_header = false, .column = "1"});
	ASSERT_EQ(s.size(), 2u);
	EXPECT_EQ(s[1], 6.25);
}

TEST(LoadCsv, NonNumericCellNamesRow) {
	test_support::TempDir dir;
	write_text(dir / "a.csv", "value\n1\n2\n3\nabc\n5\n");
	try {
		load_csv(dir / "a.csv", {.has_header = true, .column = "value"});
		FAIL() << "expected an error";
	} catch (const InputError &e) {
		EXPECT_NE(std::string(e.what()).find("row 5"), std::string::npos) << e.what();
	}
}

TEST(LoadCsv, MissingFileAndEmptyColumn) {
	test_support::TempDir dir;
	EXPECT_THROW(load_csv(dir / "nope.csv"), InputError);
	write_text(dir / "empty.csv", "value\n");
	EXPECT_THROW(load_csv(dir / "empty.csv", {.has_header = true, .column = "value"}), InputError);
	write_text(dir / "named.csv", "a,b\n1,2\n");
	EXPECT_THROW(load_csv(dir / "named.csv", {.has_header = true, .column = "c"}), InputError);
	EXPECT_THROW(load_csv(dir / "named.csv", {.has_header = false, .column = "b"}), InputError);
}

TEST(LoadCsv, MissingValueIsAnError) {
	test_support::TempDir dir;
	write_text(dir / "gap.csv", "value\n1\n\n2\n,\n");
	EXPECT_THROW(load_csv(dir / "gap.csv", {.has_header = true, .column = "value"}), InputError);
}

TEST(LoadCsv, DailySeriesOfTwoHundredFiftyFourRows) {
	// Same length as the NFLX daily closing-price series used for evaluation.
	test_support::TempDir dir;
	std::ofstream out(dir / "nflx.csv");
	out << "Date,Close\n";
	for (int i = 0; i < 254; ++i) {
		out << "d" << i << "," << 300.0 + i * 0.5 << "\n";
	}
	out.close();
	const auto s = load_csv(dir / "nflx.csv", {.has_header = true, .column = "Close"});
	EXPECT_EQ(s.size(), 254u);
	const auto parts = split(s, {30});
	EXPECT_EQ(parts.train.size(), 224u);
	EXPECT_EQ(wavelet::default_level_count(parts.train.size()), 4u);
}

TEST(LoadCsv, WriteThenLoadRoundTripsExactly) {
	test_support::TempDir dir;
	Rng rng(3);
	std::vector<double> values(100);
	for (auto &v : values) {
		v = rng.normal() * 1e3 + 1.0 / 3.0;
	}
	const TimeSeries original(values);
	write_csv(dir / "s.csv", original);
	const auto first = load_csv(dir / "s.csv", {.has_header = true, .column = "value"});
	write_csv(dir / "s2.csv", first);
	const auto second = load_csv(dir / "s2.csv", {.has_header = true, .column = "value"});
	EXPECT_EQ(first, original);
	EXPECT_EQ(second, first);
}

TEST(Split, ChronologicalHoldout) {
	const TimeSeries s({1, 2, 3, 4, 5});
	const auto parts = split(s, {2});
	EXPECT_EQ(std::vector<double>(parts.train.values().begin(), parts.train.values().end()),
	          (std::vector<double>{1, 2, 3}));
	EXPECT_EQ(std::vector<double>(parts.test.values().begin(), parts.test.values().end()),
	          (std::vector<double>{4, 5}));
	EXPECT_EQ(parts.test.start_index(), 3);
}

TEST(Split, ErrorPaths) {
	const TimeSeries s({1, 2, 3});
	EXPECT_THROW(split(s, {0}), InputError);
	EXPECT_THROW(split(s, {3}), InputError);
	EXPECT_THROW(split(s, {4}), InputError);
}

TEST(Split, ConcatRestoresOriginalForEveryHorizon) {
	Rng rng(11);
	for (int trial = 0; trial < 50; ++trial) {
		const std::size_t n = 2 + rng.below(200);
		std::vector<double> values(n);
		for (auto &v : values) {
			v = rng.uniform(-100, 100);
		}
		const TimeSeries s(values, static_cast<std::int64_t>(rng.below(10)));
		const std::size_t h = 1 + rng.below(n - 1);
		const auto parts = split(s, {h});
		EXPECT_EQ(concat(parts.train, parts.test), s);
	}
}

TEST(Scaler, ConstantSeriesFallsBackToUnitScale) {
	const std::vector<double> train{2, 2, 2};
	const auto scaler = fit_scaler(train);
	EXPECT_EQ(scaler.shift, 2.0);
	EXPECT_EQ(scaler.scale, 1.0);
	EXPECT_EQ(scaler.apply(2.0), 0.0);
}

TEST(Scaler, MeanAndPopulationStd) {
	const std::vector<double> train{0, 2};
	const auto scaler = fit_scaler(train);
	EXPECT_DOUBLE_EQ(scaler.shift, 1.0);
	EXPECT_DOUBLE_EQ(scaler.scale, 1.0);
	EXPECT_DOUBLE_EQ(scaler.apply(3.0), 2.0);

	const std::vector<double> wider{1, 2, 3, 4};
	const auto s2 = fit_scaler(wider);
	EXPECT_DOUBLE_EQ(s2.shift, 2.5);
	EXPECT_DOUBLE_EQ(s2.scale, std::sqrt(1.25));
}

TEST(Scaler, RoundTrip) {
	const auto scaler = fit_scaler(std::vector<double>{3.0, -1.0, 10.0, 4.5});
	for (double x : {-5.0, 0.0, 7.25}) {
		EXPECT_NEAR(scaler.invert(scaler.apply(x)), x, 1e-12 * std::max(1.0, std::abs(x)));
	}
	Rng rng(5);
	for (int trial = 0; trial < 200; ++trial) {
		std::vector<double> train(2 + rng.below(50));
		const double offset = rng.uniform(-1e4, 1e4);
		for (auto &v : train) {
			v = offset + rng.normal() * rng.uniform(1e-3, 1e3);
		}
		const auto sc = fit_scaler(train);
		const double x = rng.uniform(-1e5, 1e5);
		EXPECT_LE(std::abs(sc.invert(sc.apply(x)) - x), 1e-12 * std::max(1.0, std::abs(x)));
	}
}

TEST(Frequency, LabelsRoundTrip) {
	for (auto f : {Frequency::five_min, Frequency::daily, Frequency::weekly, Frequency::monthly, Frequency::other}) {
		EXPECT_EQ(parse_frequency(to_string(f)), f);
	}
	EXPECT_THROW(parse_frequency("hourly"), InputError);
}

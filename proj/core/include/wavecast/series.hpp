#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace wavecast {

enum class Frequency { five_min, daily, weekly, monthly, other };

std::string to_string(Frequency frequency);
Frequency parse_frequency(const std::string &label);

/// Univariate, regularly sampled series. Value i is observed at time
/// start_index + i. Never empty, never holds NaN or infinity.
class TimeSeries {
public:
	explicit TimeSeries(std::vector<double> values, std::int64_t start_index = 0,
	                    Frequency frequency = Frequency::other);

	std::span<const double> values() const { return values_; }
	std::size_t size() const { return values_.size(); }
	double operator[](std::size_t i) const { return values_[i]; }
	std::int64_t start_index() const { return start_index_; }
	Frequency frequency() const { return frequency_; }

	/// Elements [offset, offset + count) as a new series with shifted start index.
	TimeSeries slice(std::size_t offset, std::size_t count) const;

	friend bool operator==(const TimeSeries &, const TimeSeries &) = default;

private:
	std::vector<double> values_;
	std::int64_t start_index_ = 0;
	Frequency frequency_ = Frequency::other;
};

struct SplitSpec {
	std::size_t test_len = 0;
};

struct TrainTestSplit {
	TimeSeries train;
	TimeSeries test;
};

/// Chronological holdout: the last test_len observations become the test split.
TrainTestSplit split(const TimeSeries &series, SplitSpec spec);

/// Joins two adjacent splits back into one series.
TimeSeries concat(const TimeSeries &head, const TimeSeries &tail);

/// z-score transform fit on a training split.
struct AffineScaler {
	double shift = 0.0;
	double scale = 1.0;

	double apply(double x) const { return (x - shift) / scale; }
	double invert(double z) const { return z * scale + shift; }
	std::vector<double> apply(std::span<const double> xs) const;
	std::vector<double> invert(std::span<const double> zs) const;
};

/// Mean and population standard deviation of the data. Falls back to
/// scale 1 for fewer than two values or zero spread.
AffineScaler fit_scaler(std::span<const double> train);

struct CsvOptions {
	bool has_header = true;
	/// Column name (requires a header) or zero-based index.
	std::string column = "0";
	Frequency frequency = Frequency::other;
};

/// Reads one column of a CSV file. Errors name the offending 1-based file row.
TimeSeries load_csv(const std::filesystem::path &path, const CsvOptions &options = {});

/// Writes `t,value` rows; load_csv with column "value" reads it back exactly.
void write_csv(const std::filesystem::path &path, const TimeSeries &series);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Strict full-string parse; returns false on trailing junk or overflow.
bool parse_double(std::string_view text, double &out);

} // namespace wavecast

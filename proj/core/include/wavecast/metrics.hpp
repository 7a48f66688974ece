#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wavecast::eval {

double rmse(std::span<const double> actual, std::span<const double> predicted);
double mae(std::span<const double> actual, std::span<const double> predicted);

/// Symmetric MAPE on the 0-200 scale. A term with |a| + |p| == 0 counts as 0.
double smape(std::span<const double> actual, std::span<const double> predicted);

/// Forecast MAE over the in-sample MAE of the seasonal naive forecast with
/// the given period (1 = previous value).
double mase(std::span<const double> actual, std::span<const double> predicted, std::span<const double> insample,
            std::size_t period = 1);

struct Scores {
	double rmse = 0.0;
	double mae = 0.0;
	double smape = 0.0;
	double mase = 0.0;
};

Scores score(std::span<const double> actual, std::span<const double> predicted, std::span<const double> insample,
             std::size_t period = 1);

struct MetricRow {
	std::string dataset;
	std::string horizon; // "short" / "long"
	std::string model;
	Scores scores;
};

/// Rows of (dataset, horizon, model) -> metrics, in the CSV layout
/// `data,horizon,model,rmse,mae,smape,mase`.
struct MetricTable {
	std::vector<MetricRow> rows;

	void add(MetricRow row) { rows.push_back(std::move(row)); }
	void append(const MetricTable &other);
	std::vector<std::string> models() const;
	std::vector<std::string> horizons() const;
};

void write_metrics_csv(const std::filesystem::path &path, const MetricTable &table);
MetricTable read_metrics_csv(const std::filesystem::path &path);

struct McbEntry {
	std::string model;
	double mean_rank = 0.0;
	double half_width = 0.0;
	/// Interval overlaps the best model's interval.
	bool not_significantly_worse = false;
};

struct McbResult {
	std::vector<McbEntry> entries; // sorted by mean rank, best first
	std::string best;
	std::size_t cases = 0;
	double alpha = 0.05;

	const McbEntry &entry(const std::string &model) const;
};

/// Upper-alpha quantile of the Studentized range with k groups and infinite
/// degrees of freedom. Tabulated for k in [2, 20] and alpha in {0.10, 0.05, 0.01}.
double studentized_range_quantile(std::size_t k, double alpha);

/// Half-width of the rank interval: 0.5 * q_alpha(k) * sqrt(k (k+1) / (6 n)).
double mcb_half_width(std::size_t k, std::size_t cases, double alpha);

/// Mid-ranks of `values` (1 = smallest). Non-finite values rank after every
/// finite value and tie among themselves.
std::vector<double> rank_with_ties(std::span<const double> values);

/// Multiple comparisons with the best over every (dataset, horizon, metric)
/// case in the table, optionally restricted to one horizon tag.
McbResult mcb(const MetricTable &table, double alpha = 0.05, const std::optional<std::string> &horizon = std::nullopt);

} // namespace wavecast::eval

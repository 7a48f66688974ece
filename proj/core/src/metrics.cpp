#include "wavecast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "wavecast/errors.hpp"
#include "wavecast/series.hpp"

namespace wavecast::eval {

namespace {

void check_pair(std::span<const double> actual, std::span<const double> predicted, const char *metric) {
	if (actual.size() != predicted.size()) {
		throw InputError(std::string(metric) + ": actual has " + std::to_string(actual.size()) +
		                 " values, prediction has " + std::to_string(predicted.size()));
	}
	if (actual.empty()) {
		throw InputError(std::string(metric) + ": empty input");
	}
}

} // namespace

double rmse(std::span<const double> actual, std::span<const double> predicted) {
	check_pair(actual, predicted, "rmse");
	double total = 0.0;
	for (std::size_t i = 0; i < actual.size(); ++i) {
		const double e = actual[i] - predicted[i];
		total += e * e;
	}
	return std::sqrt(total / static_cast<double>(actual.size()));
}

double mae(std::span<const double> actual, std::span<const double> predicted) {
	check_pair(actual, predicted, "mae");
	double total = 0.0;
	for (std::size_t i = 0; i < actual.size(); ++i) {
		total += std::abs(actual[i] - predicted[i]);
	}
	return total / static_cast<double>(actual.size());
}

double smape(std::span<const double> actual, std::span<const double> predicted) {
	check_pair(actual, predicted, "smape");
	double total = 0.0;
	for (std::size_t i = 0; i < actual.size(); ++i) {
		const double denom = std::abs(actual[i]) + std::abs(predicted[i]);
		if (denom > 0.0) {
			total += std::abs(predicted[i] - actual[i]) / denom;
		}
	}
	return 200.0 * total / static_cast<double>(actual.size());
}

double mase(std::span<const double> actual, std::span<const double> predicted, std::span<const double> insample,
            std::size_t period) {
	check_pair(actual, predicted, "mase");
	if (period == 0) {
		throw InputError("mase: seasonal period must be positive");
	}
	if (insample.size() <= period) {
		throw InputError("mase: in-sample series needs more than " + std::to_string(period) + " values");
	}
	double naive = 0.0;
	for (std::size_t t = period; t < insample.size(); ++t) {
		naive += std::abs(insample[t] - insample[t - period]);
	}
	naive /= static_cast<double>(insample.size() - period);
	if (!(naive > 0.0)) {
		throw InputError("mase: in-sample naive error is zero (constant series), scaling undefined");
	}
	return mae(actual, predicted) / naive;
}

Scores score(std::span<const double> actual, std::span<const double> predicted, std::span<const double> insample,
             std::size_t period) {
	return {rmse(actual, predicted), mae(actual, predicted), smape(actual, predicted),
	        mase(actual, predicted, insample, period)};
}

void MetricTable::append(const MetricTable &other) { rows.insert(rows.end(), other.rows.begin(), other.rows.end()); }

std::vector<std::string> MetricTable::models() const {
	std::vector<std::string> out;
	for (const auto &r : rows) {
		if (std::find(out.begin(), out.end(), r.model) == out.end()) {
			out.push_back(r.model);
		}
	}
	return out;
}

std::vector<std::string> MetricTable::horizons() const {
	std::vector<std::string> out;
	for (const auto &r : rows) {
		if (std::find(out.begin(), out.end(), r.horizon) == out.end()) {
			out.push_back(r.horizon);
		}
	}
	return out;
}

void write_metrics_csv(const std::filesystem::path &path, const MetricTable &table) {
	std::ofstream out(path);
	if (!out) {
		throw InputError("cannot write '" + path.string() + "'");
	}
	out << "data,horizon,model,rmse,mae,smape,mase\n";
	for (const auto &r : table.rows) {
		out << r.dataset << ',' << r.horizon << ',' << r.model << ',' << format_double(r.scores.rmse) << ','
		    << format_double(r.scores.mae) << ',' << format_double(r.scores.smape) << ','
		    << format_double(r.scores.mase) << '\n';
	}
}

MetricTable read_metrics_csv(const std::filesystem::path &path) {
	std::ifstream in(path);
	if (!in) {
		throw InputError("cannot open '" + path.string() + "'");
	}
	std::string line;
	if (!std::getline(in, line) || line.rfind("data,horizon,model", 0) != 0) {
		throw InputError("'" + path.string() + "' is not a metrics CSV (expected header data,horizon,model,...)");
	}
	MetricTable table;
	std::size_t row = 1;
	while (std::getline(in, line)) {
		++row;
		if (!line.empty() && line.back() == '\r') {
			line.pop_back();
		}
		if (line.empty()) {
			continue;
		}
		std::vector<std::string> fields;
		std::istringstream cells(line);
		std::string cell;
		while (std::getline(cells, cell, ',')) {
			fields.push_back(cell);
		}
		if (fields.size() != 7) {
			throw InputError("row " + std::to_string(row) + " of '" + path.string() + "' has " +
			                 std::to_string(fields.size()) + " fields, expected 7");
		}
		MetricRow r{fields[0], fields[1], fields[2], {}};
		double *targets[] = {&r.scores.rmse, &r.scores.mae, &r.scores.smape, &r.scores.mase};
		for (std::size_t k = 0; k < 4; ++k) {
			// "inf" and "nan" are accepted: diverged models still get ranked.
			if (!parse_double(fields[3 + k], *targets[k])) {
				throw InputError("row " + std::to_string(row) + " of '" + path.string() + "': bad number '" +
				                 fields[3 + k] + "'");
			}
		}
		table.add(std::move(r));
	}
	return table;
}

} // namespace wavecast::eval

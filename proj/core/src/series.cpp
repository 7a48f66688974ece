#include "wavecast/series.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "wavecast/errors.hpp"

namespace wavecast {

namespace {

std::string_view trim(std::string_view s) {
	while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
		s.remove_prefix(1);
	}
	while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
		s.remove_suffix(1);
	}
	if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
		s = s.substr(1, s.size() - 2);
	}
	return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
	std::vector<std::string_view> fields;
	std::size_t begin = 0;
	while (true) {
		const auto comma = line.find(',', begin);
		if (comma == std::string_view::npos) {
			fields.push_back(trim(line.substr(begin)));
			break;
		}
		fields.push_back(trim(line.substr(begin, comma - begin)));
		begin = comma + 1;
	}
	return fields;
}

bool parse_index(const std::string &text, std::size_t &out) {
	if (text.empty()) {
		return false;
	}
	const auto *end = text.data() + text.size();
	auto [ptr, ec] = std::from_chars(text.data(), end, out);
	return ec == std::errc() && ptr == end;
}

} // namespace

std::string to_string(Frequency frequency) {
	switch (frequency) {
	case Frequency::five_min:
		return "five_min";
	case Frequency::daily:
		return "daily";
	case Frequency::weekly:
		return "weekly";
	case Frequency::monthly:
		return "monthly";
	case Frequency::other:
		break;
	}
	return "other";
}

Frequency parse_frequency(const std::string &label) {
	for (auto f : {Frequency::five_min, Frequency::daily, Frequency::weekly, Frequency::monthly,
	               Frequency::other}) {
		if (to_string(f) == label) {
			return f;
		}
	}
	throw InputError("unknown frequency label '" + label + "'");
}

TimeSeries::TimeSeries(std::vector<double> values, std::int64_t start_index, Frequency frequency)
    : values_(std::move(values)), start_index_(start_index), frequency_(frequency) {
	if (values_.empty()) {
		throw InputError("time series must hold at least one observation");
	}
	for (std::size_t i = 0; i < values_.size(); ++i) {
		if (!std::isfinite(values_[i])) {
			throw InputError("time series value at position " + std::to_string(i) + " is not finite");
		}
	}
}

TimeSeries TimeSeries::slice(std::size_t offset, std::size_t count) const {
	if (offset + count > values_.size()) {
		throw InputError("slice out of range");
	}
	std::vector<double> part(values_.begin() + static_cast<std::ptrdiff_t>(offset),
	                         values_.begin() + static_cast<std::ptrdiff_t>(offset + count));
	return TimeSeries(std::move(part), start_index_ + static_cast<std::int64_t>(offset), frequency_);
}

TrainTestSplit split(const TimeSeries &series, SplitSpec spec) {
	if (spec.test_len == 0) {
		throw InputError("test length must be positive");
	}
	if (spec.test_len >= series.size()) {
		throw InputError("test length " + std::to_string(spec.test_len) +
		                 " leaves no training data in a series of length " + std::to_string(series.size()));
	}
	const auto n_train = series.size() - spec.test_len;
	return {series.slice(0, n_train), series.slice(n_train, spec.test_len)};
}

TimeSeries concat(const TimeSeries &head, const TimeSeries &tail) {
	std::vector<double> values(head.values().begin(), head.values().end());
	values.insert(values.end(), tail.values().begin(), tail.values().end());
	return TimeSeries(std::move(values), head.start_index(), head.frequency());
}

std::vector<double> AffineScaler::apply(std::span<const double> xs) const {
	std::vector<double> out(xs.size());
	for (std::size_t i = 0; i < xs.size(); ++i) {
		out[i] = apply(xs[i]);
	}
	return out;
}

std::vector<double> AffineScaler::invert(std::span<const double> zs) const {
	std::vector<double> out(zs.size());
	for (std::size_t i = 0; i < zs.size(); ++i) {
		out[i] = invert(zs[i]);
	}
	return out;
}

AffineScaler fit_scaler(std::span<const double> train) {
	AffineScaler scaler;
	if (train.empty()) {
		return scaler;
	}
	const double n = static_cast<double>(train.size());
	scaler.shift = std::accumulate(train.begin(), train.end(), 0.0) / n;
	if (train.size() < 2) {
		return scaler;
	}
	double ss = 0.0;
	for (double x : train) {
		ss += (x - scaler.shift) * (x - scaler.shift);
	}
	const double sd = std::sqrt(ss / n);
	// Relative threshold: a constant series can leave rounding residue in ss.
	if (sd > 1e-12 * std::max(1.0, std::abs(scaler.shift))) {
		scaler.scale = sd;
	}
	return scaler;
}

TimeSeries load_csv(const std::filesystem::path &path, const CsvOptions &options) {
	std::ifstream in(path);
	if (!in) {
		throw InputError("cannot open '" + path.string() + "'");
	}

	std::string line;
	std::size_t row = 0;
	std::size_t column = 0;
	bool column_known = false;

	if (parse_index(options.column, column)) {
		column_known = true;
	} else if (!options.has_header) {
		throw InputError("column '" + options.column + "' is a name but the file has no header row");
	}

	if (options.has_header) {
		if (!std::getline(in, line)) {
			throw InputError("'" + path.string() + "' is empty");
		}
		++row;
		if (line.rfind("\xEF\xBB\xBF", 0) == 0) {
			line.erase(0, 3);
		}
		if (!column_known) {
			const auto names = split_fields(line);
			for (std::size_t i = 0; i < names.size(); ++i) {
				if (names[i] == options.column) {
					column = i;
					column_known = true;
					break;
				}
			}
			if (!column_known) {
				throw InputError("column '" + options.column + "' not found in header of '" + path.string() + "'");
			}
		}
	}

	std::vector<double> values;
	while (std::getline(in, line)) {
		++row;
		if (row == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) {
			line.erase(0, 3);
		}
		if (trim(line).empty()) {
			continue;
		}
		const auto fields = split_fields(line);
		if (column >= fields.size()) {
			throw InputError("row " + std::to_string(row) + " of '" + path.string() + "' has no column " +
			                 std::to_string(column));
		}
		double value = 0.0;
		if (!parse_double(fields[column], value)) {
			throw InputError("row " + std::to_string(row) + " of '" + path.string() + "': cannot parse '" +
			                 std::string(fields[column]) + "' as a number");
		}
		if (!std::isfinite(value)) {
			throw InputError("row " + std::to_string(row) + " of '" + path.string() + "': value is not finite");
		}
		values.push_back(value);
	}
	if (values.empty()) {
		throw InputError("'" + path.string() + "' holds no observations");
	}
	return TimeSeries(std::move(values), 0, options.frequency);
}

void write_csv(const std::filesystem::path &path, const TimeSeries &series) {
	std::ofstream out(path);
	if (!out) {
		throw InputError("cannot write '" + path.string() + "'");
	}
	out << "t,value\n";
	for (std::size_t i = 0; i < series.size(); ++i) {
		out << series.start_index() + static_cast<std::int64_t>(i) << ',' << format_double(series[i]) << '\n';
	}
}

std::string format_double(double value) {
	std::array<char, 32> buf{};
	auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
	return std::string(buf.data(), ptr);
}

bool parse_double(std::string_view text, double &out) {
	if (text.empty()) {
		return false;
	}
	if (text.front() == '+') {
		text.remove_prefix(1);
	}
	const auto *end = text.data() + text.size();
	auto [ptr, ec] = std::from_chars(text.data(), end, out);
	return ec == std::errc() && ptr == end;
}

} // namespace wavecast

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

#include "wavecast/errors.hpp"
#include "wavecast/metrics.hpp"

namespace wavecast::eval {

namespace {

// Studentized range upper quantiles q(k, inf) for k = 2..20.
constexpr std::array<double, 19> kQuantile10 = {
    2.32617431, 2.90238021, 3.24044622, 3.47828055, 3.66072094, 3.80809826, 3.93134910,
    4.03702313, 4.12934640, 4.21120025, 4.28463460, 4.35115820, 4.41191262, 4.46778182,
    4.51946370, 4.56751864, 4.61240307, 4.65449360, 4.69410441};
constexpr std::array<double, 19> kQuantile05 = {
    2.77180765, 3.31449316, 3.63315957, 3.85765551, 4.03009205, 4.16955416, 4.28630941,
    4.38650912, 4.47412422, 4.55186358, 4.62165547, 4.68491985, 4.74273171, 4.79592386,
    4.84515418, 4.89095113, 4.93374536, 4.97389235, 5.01168879};
constexpr std::array<double, 19> kQuantile01 = {
    3.64277274, 4.12030321, 4.40280086, 4.60282104, 4.75704725, 4.88216619, 4.98718269,
    5.07750568, 5.15663496, 5.22696288, 5.29019558, 5.34759154, 5.40010499, 5.44847621,
    5.49329077, 5.53501959, 5.57404691, 5.61069019, 5.64521470};

double metric_value(const Scores &s, std::size_t metric) {
	switch (metric) {
	case 0:
		return s.rmse;
	case 1:
		return s.mae;
	case 2:
		return s.smape;
	default:
		return s.mase;
	}
}

constexpr std::array<const char *, 4> kMetricNames = {"rmse", "mae", "smape", "mase"};

} // namespace

const McbEntry &McbResult::entry(const std::string &model) const {
	for (const auto &e : entries) {
		if (e.model == model) {
			return e;
		}
	}
	throw InputError("model '" + model + "' is not part of the MCB result");
}

double studentized_range_quantile(std::size_t k, double alpha) {
	if (k < 2 || k > 20) {
		throw InputError("Studentized range quantile is tabulated for 2..20 models, got " + std::to_string(k));
	}
	const std::array<double, 19> *table = nullptr;
	if (std::abs(alpha - 0.10) < 1e-12) {
		table = &kQuantile10;
	} else if (std::abs(alpha - 0.05) < 1e-12) {
		table = &kQuantile05;
	} else if (std::abs(alpha - 0.01) < 1e-12) {
		table = &kQuantile01;
	} else {
		throw InputError("MCB alpha must be 0.10, 0.05 or 0.01");
	}
	return (*table)[k - 2];
}

double mcb_half_width(std::size_t k, std::size_t cases, double alpha) {
	if (cases == 0) {
		throw InputError("MCB needs at least one case");
	}
	const double kk = static_cast<double>(k);
	return 0.5 * studentized_range_quantile(k, alpha) * std::sqrt(kk * (kk + 1.0) / (6.0 * static_cast<double>(cases)));
}

std::vector<double> rank_with_ties(std::span<const double> values) {
	const std::size_t n = values.size();
	std::vector<std::size_t> order(n);
	std::iota(order.begin(), order.end(), std::size_t{0});
	// NaN and +/-inf count as the worst outcome.
	auto key = [&](std::size_t i) {
		return std::isfinite(values[i]) ? std::make_pair(0, values[i]) : std::make_pair(1, 0.0);
	};
	std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
	std::vector<double> ranks(n);
	std::size_t i = 0;
	while (i < n) {
		std::size_t j = i + 1;
		while (j < n && key(order[j]) == key(order[i])) {
			++j;
		}
		const double mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
		for (std::size_t t = i; t < j; ++t) {
			ranks[order[t]] = mid;
		}
		i = j;
	}
	return ranks;
}

McbResult mcb(const MetricTable &table, double alpha, const std::optional<std::string> &horizon) {
	std::vector<const MetricRow *> rows;
	for (const auto &r : table.rows) {
		if (!horizon || r.horizon == *horizon) {
			rows.push_back(&r);
		}
	}
	MetricTable filtered;
	for (const auto *r : rows) {
		filtered.add(*r);
	}
	const auto models = filtered.models();
	const std::size_t k = models.size();
	if (k < 2) {
		throw InputError("MCB needs at least two models, found " + std::to_string(k));
	}

	// (dataset, horizon) -> model -> scores
	std::map<std::pair<std::string, std::string>, std::map<std::string, Scores>> cells;
	for (const auto *r : rows) {
		auto &slot = cells[{r->dataset, r->horizon}];
		if (!slot.emplace(r->model, r->scores).second) {
			throw InputError("duplicate metrics row for data=" + r->dataset + " horizon=" + r->horizon +
			                 " model=" + r->model);
		}
	}
	for (const auto &[key, by_model] : cells) {
		for (const auto &m : models) {
			if (!by_model.contains(m)) {
				throw InputError("missing metrics cell: data=" + key.first + " horizon=" + key.second + " model=" + m);
			}
		}
	}

	std::vector<double> rank_sum(k, 0.0);
	std::size_t cases = 0;
	std::vector<double> values(k);
	for (const auto &[key, by_model] : cells) {
		for (std::size_t metric = 0; metric < kMetricNames.size(); ++metric) {
			for (std::size_t m = 0; m < k; ++m) {
				values[m] = metric_value(by_model.at(models[m]), metric);
			}
			const auto ranks = rank_with_ties(values);
			for (std::size_t m = 0; m < k; ++m) {
				rank_sum[m] += ranks[m];
			}
			++cases;
		}
	}

	McbResult result;
	result.cases = cases;
	result.alpha = alpha;
	const double half = mcb_half_width(k, cases, alpha);
	for (std::size_t m = 0; m < k; ++m) {
		result.entries.push_back({models[m], rank_sum[m] / static_cast<double>(cases), half, false});
	}
	std::stable_sort(result.entries.begin(), result.entries.end(),
	                 [](const McbEntry &a, const McbEntry &b) { return a.mean_rank < b.mean_rank; });
	result.best = result.entries.front().model;
	const double best_upper = result.entries.front().mean_rank + half;
	for (auto &e : result.entries) {
		e.not_significantly_worse = e.mean_rank - e.half_width <= best_upper;
	}
	return result;
}

} // namespace wavecast::eval

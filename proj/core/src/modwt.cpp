#include "wavecast/modwt.hpp"

#include <cmath>
#include <numbers>

#include "wavecast/errors.hpp"

namespace wavecast::wavelet {

namespace {

// One pyramid stage: circular filtering of `in` with taps spaced `stride` apart.
// out[t] = sum_l taps[l] * in[(t - stride * l) mod N]
void analysis_stage(std::span<const double> in, std::span<const double> taps, std::size_t stride,
                    std::span<double> out) {
	const std::size_t n = in.size();
	for (std::size_t t = 0; t < n; ++t) {
		double acc = 0.0;
		for (std::size_t l = 0; l < taps.size(); ++l) {
			const std::size_t lag = (stride * l) % n;
			acc += taps[l] * in[(t + n - lag) % n];
		}
		out[t] = acc;
	}
}

// Adjoint of analysis_stage: circular correlation.
// out[t] += sum_l taps[l] * in[(t + stride * l) mod N]
void synthesis_stage(std::span<const double> in, std::span<const double> taps, std::size_t stride,
                     std::span<double> out) {
	const std::size_t n = in.size();
	for (std::size_t t = 0; t < n; ++t) {
		double acc = 0.0;
		for (std::size_t l = 0; l < taps.size(); ++l) {
			const std::size_t lead = (stride * l) % n;
			acc += taps[l] * in[(t + lead) % n];
		}
		out[t] += acc;
	}
}

std::size_t stride_for(std::size_t level) { return std::size_t{1} << (level - 1); }

// Inverse pyramid from `level` down to 0. `wavelet_at(j)` returns the level-j
// wavelet series or an empty span for a zeroed band.
template <typename WaveletAt>
std::vector<double> reconstruct(std::vector<double> scaling, std::size_t level, const WaveletFilter &filter,
                                WaveletAt wavelet_at) {
	const auto g = filter.modwt_scaling();
	const auto h = filter.modwt_wavelet();
	const std::size_t n = scaling.size();
	std::vector<double> next(n);
	for (std::size_t j = level; j >= 1; --j) {
		std::fill(next.begin(), next.end(), 0.0);
		synthesis_stage(scaling, g, stride_for(j), next);
		if (const std::span<const double> w = wavelet_at(j); !w.empty()) {
			synthesis_stage(w, h, stride_for(j), next);
		}
		std::swap(scaling, next);
	}
	return scaling;
}

} // namespace

WaveletFilter WaveletFilter::haar() {
	const double r = 1.0 / std::numbers::sqrt2;
	return WaveletFilter{Family::haar, {r, r}, {r, -r}};
}

std::vector<double> WaveletFilter::modwt_scaling() const {
	std::vector<double> out(scaling);
	for (auto &v : out) {
		v /= std::numbers::sqrt2;
	}
	return out;
}

std::vector<double> WaveletFilter::modwt_wavelet() const {
	std::vector<double> out(wavelet);
	for (auto &v : out) {
		v /= std::numbers::sqrt2;
	}
	return out;
}

std::string WaveletFilter::name() const {
	switch (family) {
	case Family::haar:
		break;
	}
	return "haar";
}

std::vector<std::vector<double>> WaveletDecomposition::bands() const {
	std::vector<std::vector<double>> out(details);
	out.push_back(smooth);
	return out;
}

std::size_t default_level_count(std::size_t n) {
	if (n < 8) {
		throw InputError("default level count needs at least 8 observations, got " + std::to_string(n));
	}
	const auto total = static_cast<std::size_t>(std::floor(std::log(static_cast<double>(n))));
	return total - 1;
}

std::size_t equivalent_filter_length(std::size_t filter_length, std::size_t level) {
	return ((std::size_t{1} << level) - 1) * (filter_length - 1) + 1;
}

WaveletCoefficients modwt(std::span<const double> series, const WaveletFilter &filter, std::size_t levels) {
	const std::size_t n = series.size();
	if (levels == 0) {
		throw InputError("MODWT needs at least one level");
	}
	if (levels >= 63 || equivalent_filter_length(filter.length(), levels) > n) {
		throw InputError("level " + std::to_string(levels) + " " + filter.name() +
		                 " equivalent filter is longer than the series (N=" + std::to_string(n) + ")");
	}
	for (std::size_t t = 0; t < n; ++t) {
		if (!std::isfinite(series[t])) {
			throw InputError("MODWT input value at position " + std::to_string(t) + " is not finite");
		}
	}

	const auto g = filter.modwt_scaling();
	const auto h = filter.modwt_wavelet();

	WaveletCoefficients out;
	out.filter = filter;
	out.wavelet.resize(levels, std::vector<double>(n));
	std::vector<double> scaling(series.begin(), series.end());
	std::vector<double> next(n);
	for (std::size_t j = 1; j <= levels; ++j) {
		analysis_stage(scaling, h, stride_for(j), out.wavelet[j - 1]);
		analysis_stage(scaling, g, stride_for(j), next);
		std::swap(scaling, next);
	}
	out.scaling = std::move(scaling);
	return out;
}

std::vector<double> inverse_modwt(const WaveletCoefficients &coefficients) {
	const std::size_t n = coefficients.length();
	for (const auto &w : coefficients.wavelet) {
		if (w.size() != n) {
			throw InputError("MODWT coefficient series have inconsistent lengths");
		}
	}
	return reconstruct(coefficients.scaling, coefficients.levels(), coefficients.filter,
	                   [&](std::size_t j) { return std::span<const double>(coefficients.wavelet[j - 1]); });
}

WaveletDecomposition mra(const WaveletCoefficients &coefficients) {
	const std::size_t n = coefficients.length();
	const std::size_t levels = coefficients.levels();
	if (levels == 0 || n == 0) {
		throw InputError("MRA needs at least one level of non-empty coefficients");
	}
	for (const auto &w : coefficients.wavelet) {
		if (w.size() != n) {
			throw InputError("MODWT coefficient series have inconsistent lengths");
		}
	}

	WaveletDecomposition out;
	out.raw = coefficients;
	out.details.reserve(levels);
	const std::vector<double> zeros(n, 0.0);
	for (std::size_t band = 1; band <= levels; ++band) {
		// Only W_band is kept; scaling and all other wavelet bands are zero.
		auto detail = reconstruct(zeros, band, coefficients.filter, [&](std::size_t j) {
			return j == band ? std::span<const double>(coefficients.wavelet[j - 1]) : std::span<const double>();
		});
		out.details.push_back(std::move(detail));
	}
	out.smooth = reconstruct(coefficients.scaling, levels, coefficients.filter,
	                         [](std::size_t) { return std::span<const double>(); });
	return out;
}

std::vector<double> imodwt(const WaveletDecomposition &decomposition) {
	const std::size_t n = decomposition.length();
	std::vector<double> out(decomposition.smooth);
	for (const auto &detail : decomposition.details) {
		if (detail.size() != n) {
			throw InputError("MRA series have inconsistent lengths");
		}
		for (std::size_t t = 0; t < n; ++t) {
			out[t] += detail[t];
		}
	}
	return out;
}

WaveletDecomposition decompose(std::span<const double> series, const WaveletFilter &filter, std::size_t levels) {
	return mra(modwt(series, filter, levels));
}

} // namespace wavecast::wavelet

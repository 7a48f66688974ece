#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace wavecast::wavelet {

enum class Family { haar };

/// Orthonormal DWT filter pair. MODWT filters are these divided by sqrt(2).
struct WaveletFilter {
	Family family = Family::haar;
	std::vector<double> scaling; // g, sums to sqrt(2)
	std::vector<double> wavelet; // h, sums to 0

	static WaveletFilter haar();

	std::size_t length() const { return scaling.size(); }
	std::vector<double> modwt_scaling() const;
	std::vector<double> modwt_wavelet() const;
	std::string name() const;
};

/// Raw MODWT output: wavelet series W_1..W_J and the level-J scaling series V_J.
struct WaveletCoefficients {
	std::vector<std::vector<double>> wavelet;
	std::vector<double> scaling;
	WaveletFilter filter;

	std::size_t levels() const { return wavelet.size(); }
	std::size_t length() const { return scaling.size(); }
};

/// Additive multiresolution analysis: details D_1..D_J plus smooth S_J, all of
/// the input's length and summing to it pointwise.
struct WaveletDecomposition {
	std::vector<std::vector<double>> details;
	std::vector<double> smooth;
	WaveletCoefficients raw;

	std::size_t levels() const { return details.size(); }
	std::size_t length() const { return smooth.size(); }

	/// D_1, ..., D_J, S_J in that order.
	std::vector<std::vector<double>> bands() const;
};

/// Number of detail levels for a series of length n: floor(ln n) - 1, so that
/// details plus smooth make floor(ln n) series. Requires n >= 8.
std::size_t default_level_count(std::size_t n);

/// Width of the level-j equivalent filter, (2^j - 1)(L - 1) + 1.
std::size_t equivalent_filter_length(std::size_t filter_length, std::size_t level);

/// Pyramid MODWT with circular boundaries.
WaveletCoefficients modwt(std::span<const double> series, const WaveletFilter &filter, std::size_t levels);

/// Inverse pyramid; reconstructs the series from raw coefficients.
std::vector<double> inverse_modwt(const WaveletCoefficients &coefficients);

/// Splits raw coefficients into MRA details and smooth by inverting one band
/// at a time with every other band zeroed.
WaveletDecomposition mra(const WaveletCoefficients &coefficients);

/// Recombines an MRA (or any list of per-band forecasts): elementwise sum.
std::vector<double> imodwt(const WaveletDecomposition &decomposition);

/// Convenience: modwt followed by mra.
WaveletDecomposition decompose(std::span<const double> series, const WaveletFilter &filter, std::size_t levels);

} // namespace wavecast::wavelet

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wavecast/modwt.hpp"
#include "wavecast/series.hpp"
#include "wavecast/transformer.hpp"

namespace wavecast::forecast {

/// One decomposition band with its own scaler and model. `history` is the
/// scaled band over the training period; forecasts continue from its end.
struct BandModel {
	std::string name; // "D1".."DJ", "S<J>"
	AffineScaler scaler;
	nn::TransformerModel model;
	std::vector<double> history;
	std::vector<double> loss_trace;
};

/// J + 1 independently trained transformers over the MRA bands of a training
/// series, ordered D_1..D_J then S_J. A zero-level ensemble has a single band
/// holding the raw series.
struct WTransformerEnsemble {
	wavelet::WaveletDecomposition decomposition;
	std::vector<BandModel> bands;
	nn::TransformerConfig config;
	std::uint64_t base_seed = 42;

	std::size_t levels() const { return bands.empty() ? 0 : bands.size() - 1; }
};

struct ForecastResult {
	std::string model_tag;
	std::vector<double> predictions;                     // raw units
	std::vector<std::vector<double>> band_predictions;   // raw units, one row per band
	std::size_t horizon() const { return predictions.size(); }
};

struct FitOptions {
	/// Detail level count; defaults to default_level_count(N_train). 0 trains
	/// one model on the undecomposed series.
	std::optional<std::size_t> levels;
	std::uint64_t base_seed = 42;
	/// Upper bound on concurrently trained bands.
	std::size_t jobs = 1;
};

/// Decomposes the training series, scales each band on itself and trains
/// one transformer per band with seed base_seed + band index.
WTransformerEnsemble fit(const TimeSeries &train, const nn::TransformerConfig &config, const FitOptions &options = {});

/// Literal reading of the original pipeline: MODWT over `full` (train and
/// test together), bands cut back to the first `train_len` points for
/// training. Leaks future values into training bands through the circular
/// filters; kept for comparison runs.
WTransformerEnsemble fit_joint_decomposition(const TimeSeries &full, std::size_t train_len,
                                             const nn::TransformerConfig &config, const FitOptions &options = {});

/// Recursive h-step forecast of every band, unscaled and summed.
ForecastResult forecast(const WTransformerEnsemble &ensemble, std::size_t horizon, std::size_t jobs = 1);

/// Single transformer on the scaled raw series. Identical to a zero-level ensemble.
ForecastResult fit_forecast_baseline_transformer(const TimeSeries &train, const nn::TransformerConfig &config,
                                                 std::size_t horizon, std::uint64_t seed);

/// Repeats the last training value.
ForecastResult naive_forecast(const TimeSeries &train, std::size_t horizon);

} // namespace wavecast::forecast

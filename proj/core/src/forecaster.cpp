#include "wavecast/forecaster.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include "wavecast/errors.hpp"

namespace wavecast::forecast {

namespace {

// Runs task(i) for i in [0, count) on up to `jobs` threads. Rethrows the
// exception of the lowest failing index.
template <typename Task>
void run_indexed(std::size_t count, std::size_t jobs, Task task) {
	std::vector<std::exception_ptr> errors(count);
	const std::size_t workers = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(count, 1));
	if (workers == 1) {
		for (std::size_t i = 0; i < count; ++i) {
			try {
				task(i);
			} catch (...) {
				errors[i] = std::current_exception();
			}
		}
	} else {
		std::atomic<std::size_t> next{0};
		std::vector<std::thread> pool;
		for (std::size_t w = 0; w < workers; ++w) {
			pool.emplace_back([&] {
				for (std::size_t i = next++; i < count; i = next++) {
					try {
						task(i);
					} catch (...) {
						errors[i] = std::current_exception();
					}
				}
			});
		}
		for (auto &t : pool) {
			t.join();
		}
	}
	for (const auto &e : errors) {
		if (e) {
			std::rethrow_exception(e);
		}
	}
}

std::vector<std::string> band_names(std::size_t levels) {
	std::vector<std::string> names;
	for (std::size_t j = 1; j <= levels; ++j) {
		names.push_back("D" + std::to_string(j));
	}
	names.push_back(levels == 0 ? "raw" : "S" + std::to_string(levels));
	return names;
}

void check_length(std::size_t n, std::size_t levels, const nn::TransformerConfig &config) {
	const std::size_t needed = levels == 0 ? config.input_len + 1 : std::max<std::size_t>(8, config.input_len + 1);
	if (n < needed) {
		throw InputError("training series of length " + std::to_string(n) + " is too short (need at least " +
		                 std::to_string(needed) + " observations)");
	}
}

wavelet::WaveletDecomposition undecomposed(std::span<const double> values) {
	wavelet::WaveletDecomposition d;
	d.smooth.assign(values.begin(), values.end());
	d.raw.scaling = d.smooth;
	d.raw.filter = wavelet::WaveletFilter::haar();
	return d;
}

WTransformerEnsemble train_ensemble(wavelet::WaveletDecomposition decomposition, std::size_t train_len,
                                    const nn::TransformerConfig &config, const FitOptions &options) {
	WTransformerEnsemble ensemble;
	ensemble.config = config;
	ensemble.base_seed = options.base_seed;

	const auto bands = decomposition.bands();
	const auto names = band_names(decomposition.levels());
	for (std::size_t i = 0; i < bands.size(); ++i) {
		const std::span<const double> band(bands[i].data(), train_len);
		const AffineScaler scaler = fit_scaler(band);
		ensemble.bands.push_back(
		    BandModel{names[i], scaler, nn::TransformerModel(config, options.base_seed + i), scaler.apply(band), {}});
	}
	ensemble.decomposition = std::move(decomposition);

	run_indexed(ensemble.bands.size(), options.jobs, [&](std::size_t i) {
		auto &band = ensemble.bands[i];
		try {
			band.loss_trace = band.model.train(band.history).epoch_loss;
		} catch (const NumericError &e) {
			throw NumericError("band " + band.name + ": " + e.what());
		}
	});
	return ensemble;
}

} // namespace

WTransformerEnsemble fit(const TimeSeries &train, const nn::TransformerConfig &config, const FitOptions &options) {
	config.validate();
	const std::size_t n = train.size();
	const std::size_t levels = options.levels ? *options.levels : wavelet::default_level_count(n);
	check_length(n, levels, config);
	auto decomposition = levels == 0 ? undecomposed(train.values())
	                                 : wavelet::decompose(train.values(), wavelet::WaveletFilter::haar(), levels);
	return train_ensemble(std::move(decomposition), n, config, options);
}

WTransformerEnsemble fit_joint_decomposition(const TimeSeries &full, std::size_t train_len,
                                             const nn::TransformerConfig &config, const FitOptions &options) {
	config.validate();
	if (train_len == 0 || train_len > full.size()) {
		throw InputError("training length " + std::to_string(train_len) + " does not fit a series of length " +
		                 std::to_string(full.size()));
	}
	const std::size_t levels = options.levels ? *options.levels : wavelet::default_level_count(train_len);
	check_length(train_len, levels, config);
	auto decomposition = levels == 0 ? undecomposed(full.values())
	                                 : wavelet::decompose(full.values(), wavelet::WaveletFilter::haar(), levels);
	return train_ensemble(std::move(decomposition), train_len, config, options);
}

ForecastResult forecast(const WTransformerEnsemble &ensemble, std::size_t horizon, std::size_t jobs) {
	if (horizon < 1) {
		throw InputError("forecast horizon must be at least 1");
	}
	if (ensemble.bands.empty()) {
		throw InputError("ensemble has no trained bands");
	}
	ForecastResult result;
	result.model_tag = ensemble.levels() == 0 ? "transformer" : "wtransformer";
	result.band_predictions.resize(ensemble.bands.size());
	run_indexed(ensemble.bands.size(), jobs, [&](std::size_t i) {
		const auto &band = ensemble.bands[i];
		result.band_predictions[i] = band.scaler.invert(band.model.predict_recursive(band.history, horizon));
	});
	result.predictions.assign(horizon, 0.0);
	for (const auto &band : result.band_predictions) {
		for (std::size_t t = 0; t < horizon; ++t) {
			result.predictions[t] += band[t];
		}
	}
	return result;
}

ForecastResult fit_forecast_baseline_transformer(const TimeSeries &train, const nn::TransformerConfig &config,
                                                 std::size_t horizon, std::uint64_t seed) {
	FitOptions options;
	options.levels = 0;
	options.base_seed = seed;
	return forecast(fit(train, config, options), horizon);
}

ForecastResult naive_forecast(const TimeSeries &train, std::size_t horizon) {
	if (train.size() < 2) {
		throw InputError("naive forecast needs at least two training values");
	}
	if (horizon < 1) {
		throw InputError("forecast horizon must be at least 1");
	}
	ForecastResult result;
	result.model_tag = "naive";
	result.predictions.assign(horizon, train[train.size() - 1]);
	result.band_predictions.push_back(result.predictions);
	return result;
}

} // namespace wavecast::forecast

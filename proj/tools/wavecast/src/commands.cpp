#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "plot.hpp"
#include "wavecast/errors.hpp"
#include "wavecast/forecaster.hpp"
#include "wavecast/modwt.hpp"
#include "wavecast/series.hpp"

#ifndef WAVECAST_VERSION
#define WAVECAST_VERSION "unknown"
#endif

namespace wavecast::cli {

namespace {

// Prefixes the failing stage to the message while keeping the error category.
template <typename F>
auto stage(const std::string &label, F &&body) -> decltype(body()) {
	try {
		return body();
	} catch (const InputError &e) {
		throw InputError(label + ": " + e.what());
	} catch (const NumericError &e) {
		throw NumericError(label + ": " + e.what());
	}
}

std::ofstream open_output(const std::filesystem::path &path) {
	std::ofstream out(path);
	if (!out) {
		throw InputError("cannot write " + path.string());
	}
	return out;
}

void prepare_out_dir(const std::filesystem::path &dir) {
	std::error_code ec;
	std::filesystem::create_directories(dir, ec);
	if (ec || !std::filesystem::is_directory(dir)) {
		throw InputError("cannot create output directory " + dir.string());
	}
}

TimeSeries load_series(const RunConfig &config) {
	if (config.data.empty()) {
		throw InputError("no data file given (--data)");
	}
	return load_csv(config.data, {.has_header = config.header, .column = config.column});
}

std::vector<double> to_vector(std::span<const double> values) { return {values.begin(), values.end()}; }

std::vector<double> indices(std::int64_t start, std::size_t count) {
	std::vector<double> x(count);
	for (std::size_t i = 0; i < count; ++i) {
		x[i] = static_cast<double>(start + static_cast<std::int64_t>(i));
	}
	return x;
}

void write_loss_csv(const std::filesystem::path &path, const std::vector<double> &loss) {
	auto out = open_output(path);
	out << "epoch,mean_loss\n";
	for (std::size_t e = 0; e < loss.size(); ++e) {
		out << e + 1 << ',' << format_double(loss[e]) << '\n';
	}
}

void write_predictions_csv(const std::filesystem::path &path, const TimeSeries &test,
                           const std::vector<double> &predicted) {
	auto out = open_output(path);
	out << "index,actual,predicted\n";
	for (std::size_t i = 0; i < test.size(); ++i) {
		out << test.start_index() + static_cast<std::int64_t>(i) << ',' << format_double(test[i]) << ','
		    << format_double(predicted[i]) << '\n';
	}
}

void write_band_predictions_csv(const std::filesystem::path &path, const TimeSeries &test,
                                const forecast::WTransformerEnsemble &ensemble,
                                const forecast::ForecastResult &result) {
	auto out = open_output(path);
	out << "index";
	for (const auto &band : ensemble.bands) {
		out << ',' << band.name;
	}
	out << ",sum\n";
	for (std::size_t t = 0; t < result.horizon(); ++t) {
		out << test.start_index() + static_cast<std::int64_t>(t);
		for (const auto &band : result.band_predictions) {
			out << ',' << format_double(band[t]);
		}
		out << ',' << format_double(result.predictions[t]) << '\n';
	}
}

struct ModelOutcome {
	forecast::ForecastResult result;
	std::vector<std::filesystem::path> files;
};

ModelOutcome run_ensemble(const RunConfig &config, const TimeSeries &full, const TrainTestSplit &parts,
                          std::optional<std::size_t> levels, const std::string &tag) {
	ModelOutcome outcome;
	const forecast::FitOptions options{.levels = levels, .base_seed = config.seed, .jobs = config.jobs};
	const auto ensemble = config.paper_mode && tag == "wtransformer"
	                          ? forecast::fit_joint_decomposition(full, parts.train.size(), config.transformer, options)
	                          : forecast::fit(parts.train, config.transformer, options);
	outcome.result = forecast::forecast(ensemble, parts.test.size(), config.jobs);
	outcome.result.model_tag = tag;
	for (const auto &band : ensemble.bands) {
		const auto path = ensemble.bands.size() == 1 && tag == "transformer"
		                      ? config.out / ("loss_" + tag + ".csv")
		                      : config.out / ("loss_" + tag + "_" + band.name + ".csv");
		write_loss_csv(path, band.loss_trace);
		outcome.files.push_back(path);
		if (config.save_models) {
			std::filesystem::create_directories(config.out / "models");
			const auto model_path = config.out / "models" / (tag + "_" + band.name + ".ckpt");
			band.model.save(model_path);
			outcome.files.push_back(model_path);
		}
	}
	if (tag == "wtransformer") {
		const auto path = config.out / ("bands_" + tag + ".csv");
		write_band_predictions_csv(path, parts.test, ensemble, outcome.result);
		outcome.files.push_back(path);
	}
	return outcome;
}

} // namespace

std::string file_digest(const std::filesystem::path &path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw InputError("cannot open " + path.string());
	}
	std::uint64_t hash = 0xcbf29ce484222325ULL;
	for (std::istreambuf_iterator<char> it(in), end; it != end; ++it) {
		hash ^= static_cast<unsigned char>(*it);
		hash *= 0x100000001b3ULL;
	}
	char text[17];
	std::snprintf(text, sizeof text, "%016llx", static_cast<unsigned long long>(hash));
	return text;
}

DecomposeSummary cmd_decompose(const RunConfig &config, std::ostream &log) {
	const auto series = stage("load", [&] { return load_series(config); });
	const auto train = stage("split", [&] {
		return config.test_len == 0 ? series : split(series, {config.test_len}).train;
	});
	const auto decomposition = stage("decompose", [&] {
		const std::size_t levels = config.levels.value_or(wavelet::default_level_count(train.size()));
		if (levels == 0) {
			throw InputError("decompose needs at least one level");
		}
		return wavelet::decompose(train.values(), wavelet::WaveletFilter::haar(), levels);
	});
	return stage("write", [&] {
		prepare_out_dir(config.out);
		DecomposeSummary summary{train.size(), decomposition.levels(), {}};
		const auto bands = decomposition.bands();
		std::vector<std::string> names;
		for (std::size_t j = 1; j <= decomposition.levels(); ++j) {
			names.push_back("D" + std::to_string(j));
		}
		names.push_back("S" + std::to_string(decomposition.levels()));

		for (std::size_t b = 0; b < bands.size(); ++b) {
			const auto path = config.out / ("band_" + names[b] + ".csv");
			write_csv(path, TimeSeries(bands[b], train.start_index()));
			summary.files.push_back(path);
		}
		const auto wide = config.out / "decomposition.csv";
		{
			auto out = open_output(wide);
			out << "t,value";
			for (const auto &n : names) {
				out << ',' << n;
			}
			out << '\n';
			for (std::size_t t = 0; t < train.size(); ++t) {
				out << train.start_index() + static_cast<std::int64_t>(t) << ',' << format_double(train[t]);
				for (const auto &band : bands) {
					out << ',' << format_double(band[t]);
				}
				out << '\n';
			}
		}
		summary.files.push_back(wide);

		const auto x = indices(train.start_index(), train.size());
		std::vector<PlotSeries> panels{{"series", x, to_vector(train.values())}};
		for (std::size_t b = 0; b < bands.size(); ++b) {
			panels.push_back({names[b], x, bands[b]});
		}
		const auto plot = config.out / "decomposition.svg";
		write_stacked_chart(plot, "MODWT multiresolution analysis of " + config.dataset_name(), panels);
		summary.files.push_back(plot);

		log << "decomposed " << train.size() << " points into " << decomposition.levels() << " details + smooth\n";
		return summary;
	});
}

RunSummary cmd_run(const RunConfig &config, std::ostream &log) {
	const auto series = stage("load", [&] { return load_series(config); });
	const auto parts = stage("split", [&] {
		if (config.test_len == 0) {
			throw InputError("test length must be given (--test-len)");
		}
		return split(series, {config.test_len});
	});
	stage("config", [&] {
		config.transformer.validate();
		if (config.models.empty()) {
			throw InputError("no models selected");
		}
		prepare_out_dir(config.out);
	});

	RunSummary summary;
	std::vector<PlotSeries> plot{
	    {"actual", indices(series.start_index(), series.size()), to_vector(series.values())}};
	std::vector<Setting> results;
	std::optional<std::size_t> levels_used;

	const auto run_start = std::chrono::steady_clock::now();
	for (const auto &model : config.models) {
		const auto model_start = std::chrono::steady_clock::now();
		auto outcome = stage(model, [&] {
			if (model == "naive") {
				return ModelOutcome{forecast::naive_forecast(parts.train, parts.test.size()), {}};
			}
			if (model == "transformer") {
				return run_ensemble(config, series, parts, std::size_t{0}, model);
			}
			auto result = run_ensemble(config, series, parts, config.levels, model);
			levels_used = result.result.band_predictions.size() - 1;
			return result;
		});
		const std::chrono::duration<double> model_time = std::chrono::steady_clock::now() - model_start;
		log << "forecast " << model << " (" << parts.test.size() << " steps)\n";

		stage("write " + model, [&] {
			const auto path = config.out / ("predictions_" + model + ".csv");
			write_predictions_csv(path, parts.test, outcome.result.predictions);
			summary.files.push_back(path);
			summary.files.insert(summary.files.end(), outcome.files.begin(), outcome.files.end());
		});
		const auto scores = stage("evaluate " + model, [&] {
			return eval::score(parts.test.values(), outcome.result.predictions, parts.train.values());
		});
		summary.metrics.add({config.dataset_name(), config.horizon_tag, model, scores});
		results.emplace_back("result." + model + ".rmse", format_double(scores.rmse));
		results.emplace_back("result." + model + ".mae", format_double(scores.mae));
		results.emplace_back("result." + model + ".smape", format_double(scores.smape));
		results.emplace_back("result." + model + ".mase", format_double(scores.mase));
		results.emplace_back("result." + model + ".wall_seconds", format_double(model_time.count()));
		std::string traces;
		for (const auto &file : outcome.files) {
			if (file.filename().string().starts_with("loss_")) {
				traces += (traces.empty() ? "" : ",") + file.filename().string();
			}
		}
		if (!traces.empty()) {
			results.emplace_back("result." + model + ".loss_traces", traces);
		}
		plot.push_back({model, indices(parts.test.start_index(), parts.test.size()), outcome.result.predictions});
	}

	stage("write", [&] {
		const auto metrics = config.out / "metrics.csv";
		eval::write_metrics_csv(metrics, summary.metrics);
		summary.files.push_back(metrics);

		// Show the tail of the training span next to the forecasts.
		const std::size_t context = std::min(parts.train.size(), 4 * parts.test.size());
		const std::size_t skip = parts.train.size() - context;
		plot.front().x.erase(plot.front().x.begin(), plot.front().x.begin() + static_cast<std::ptrdiff_t>(skip));
		plot.front().y.erase(plot.front().y.begin(), plot.front().y.begin() + static_cast<std::ptrdiff_t>(skip));
		const auto chart = config.out / "forecast.svg";
		write_line_chart(chart, config.dataset_name() + " (" + config.horizon_tag + " horizon)", plot);
		summary.files.push_back(chart);

		auto manifest = to_settings(config);
		manifest.emplace_back("result.version", WAVECAST_VERSION);
		manifest.emplace_back("result.data_fnv1a64", file_digest(config.data));
		manifest.emplace_back("result.series_len", std::to_string(series.size()));
		manifest.emplace_back("result.train_len", std::to_string(parts.train.size()));
		manifest.emplace_back("result.levels_used", levels_used ? std::to_string(*levels_used) : "none");
		manifest.insert(manifest.end(), results.begin(), results.end());
		const std::chrono::duration<double> total = std::chrono::steady_clock::now() - run_start;
		manifest.emplace_back("result.wall_seconds", format_double(total.count()));
		const auto path = config.out / "manifest.txt";
		write_settings(path, manifest);
		summary.files.push_back(path);
	});
	return summary;
}

eval::MetricTable cmd_evaluate(const EvaluateConfig &config, std::ostream &log) {
	const auto series = stage("load", [&] { return load_series(config.data); });
	const auto parts = stage("split", [&] {
		if (config.data.test_len == 0) {
			throw InputError("test length must be given (--test-len)");
		}
		return split(series, {config.data.test_len});
	});
	if (config.predictions.empty()) {
		throw InputError("no prediction files given (--predictions)");
	}
	eval::MetricTable table;
	for (const auto &path : config.predictions) {
		const auto label = path.filename().string();
		stage("evaluate " + label, [&] {
			std::string model = path.stem().string();
			if (model.starts_with("predictions_")) {
				model = model.substr(std::string("predictions_").size());
			}
			const auto actual = load_csv(path, {.has_header = true, .column = "actual"});
			const auto predicted = load_csv(path, {.has_header = true, .column = "predicted"});
			if (!std::equal(actual.values().begin(), actual.values().end(), parts.test.values().begin(),
			                parts.test.values().end())) {
				throw InputError("actual values do not match the last " + std::to_string(config.data.test_len) +
				                 " points of " + config.data.data.string());
			}
			table.add({config.data.dataset_name(), config.data.horizon_tag, model,
			           eval::score(parts.test.values(), predicted.values(), parts.train.values())});
		});
	}
	stage("write", [&] {
		prepare_out_dir(config.data.out);
		eval::write_metrics_csv(config.data.out / "metrics.csv", table);
	});
	log << "scored " << table.rows.size() << " prediction files\n";
	return table;
}

std::vector<std::pair<std::string, eval::McbResult>> cmd_mcb(const McbConfig &config, std::ostream &log) {
	if (config.metrics.empty()) {
		throw InputError("no metrics files given (--metrics)");
	}
	eval::MetricTable table;
	for (const auto &path : config.metrics) {
		stage("load " + path.string(), [&] { table.append(eval::read_metrics_csv(path)); });
	}
	std::vector<std::pair<std::string, std::optional<std::string>>> groups;
	if (config.pooled) {
		groups.emplace_back("pooled", std::nullopt);
	} else if (config.horizon) {
		groups.emplace_back(*config.horizon, config.horizon);
	} else {
		for (const auto &h : table.horizons()) {
			groups.emplace_back(h, h);
		}
	}
	stage("write", [&] { prepare_out_dir(config.out); });

	std::vector<std::pair<std::string, eval::McbResult>> results;
	for (const auto &[tag, horizon] : groups) {
		const auto result = stage("mcb " + tag, [&] { return eval::mcb(table, config.alpha, horizon); });
		stage("write", [&] {
			auto out = open_output(config.out / ("mcb_" + tag + ".csv"));
			out << "model,mean_rank,half_width,lower,upper,not_significantly_worse\n";
			for (const auto &e : result.entries) {
				out << e.model << ',' << format_double(e.mean_rank) << ',' << format_double(e.half_width) << ','
				    << format_double(e.mean_rank - e.half_width) << ',' << format_double(e.mean_rank + e.half_width)
				    << ',' << (e.not_significantly_worse ? "true" : "false") << '\n';
			}
			write_mcb_chart(config.out / ("mcb_" + tag + ".svg"),
			                "MCB ranking (" + tag + ", " + std::to_string(result.cases) + " cases, alpha " +
			                    format_double(config.alpha) + ")",
			                result);
		});
		log << tag << ": best " << result.best << " over " << result.cases << " cases\n";
		results.emplace_back(tag, result);
	}
	return results;
}

} // namespace wavecast::cli

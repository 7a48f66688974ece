#include "cli.hpp"

#include <map>
#include <memory>

#include "CLI11.hpp"
#include "commands.hpp"
#include "wavecast/errors.hpp"
#include "wavecast/series.hpp"

#ifndef WAVECAST_VERSION
#define WAVECAST_VERSION "unknown"
#endif

namespace wavecast::cli {

namespace {

// Collects the settings given on the command line as raw strings so that
// they go through the same parser as config files and can override them.
class SettingFlags {
public:
	explicit SettingFlags(CLI::App *app) : app_(app) {}

	void text(const std::string &key, const std::string &help, const std::string &type = "TEXT") {
		options_[key] = app_->add_option("--" + key, values_[key], help)->type_name(type);
	}

	void repeated(const std::string &key, const std::string &help) {
		options_[key] = app_->add_option("--" + key, lists_[key], help);
	}

	void flag(const std::string &key, const std::string &spec, const std::string &help) {
		options_[key] = app_->add_flag(spec, flags_[key], help);
	}

	void apply(RunConfig &config) const {
		for (const auto &[key, option] : options_) {
			if (option->count() == 0) {
				continue;
			}
			if (auto it = lists_.find(key); it != lists_.end()) {
				std::string joined;
				for (const auto &item : it->second) {
					joined += (joined.empty() ? "" : ",") + item;
				}
				apply_setting(config, key, joined);
			} else if (auto flag = flags_.find(key); flag != flags_.end()) {
				apply_setting(config, key, flag->second ? "true" : "false");
			} else {
				apply_setting(config, key, values_.at(key));
			}
		}
	}

private:
	CLI::App *app_;
	std::map<std::string, CLI::Option *> options_;
	std::map<std::string, std::string> values_;
	std::map<std::string, std::vector<std::string>> lists_;
	std::map<std::string, bool> flags_;
};

void add_data_flags(SettingFlags &flags) {
	flags.text("data", "CSV file holding the series", "PATH");
	flags.text("column", "column name (with a header) or zero-based index");
	flags.flag("header", "--header,!--no-header", "first CSV row is a header (default true)");
	flags.text("name", "dataset label in outputs (default: data file stem)");
	flags.text("test-len", "number of final observations held out as the test split", "INT");
	flags.text("out", "output directory", "PATH");
}

void add_model_flags(SettingFlags &flags) {
	flags.text("horizon-tag", "horizon label written to metrics (e.g. short, long)");
	flags.text("levels", "wavelet detail levels (default: floor(ln N) - 1)", "INT");
	flags.text("epochs", "training epochs per model", "INT");
	flags.text("seed", "base seed (default: $WAVECAST_SEED, else 42)", "INT");
	flags.text("jobs", "bands trained concurrently", "INT");
	flags.repeated("model", "wtransformer, transformer or naive; repeatable");
	flags.flag("paper-mode", "--paper-mode", "decompose train and test together before cutting the training bands");
	flags.flag("save-models", "--save-models", "write a checkpoint per trained model under <out>/models");
	flags.text("input-len", "input window length", "INT");
	flags.text("d-model", "model width", "INT");
	flags.text("heads", "attention heads", "INT");
	flags.text("encoder-layers", "encoder layers", "INT");
	flags.text("decoder-layers", "decoder layers", "INT");
	flags.text("ffn-hidden", "feed-forward hidden width", "INT");
	flags.text("dropout", "dropout probability", "REAL");
	flags.text("batch-size", "mini-batch size", "INT");
	flags.text("lr", "Adam learning rate", "REAL");
}

RunConfig resolve(const SettingFlags &flags, const std::string &config_file) {
	RunConfig config;
	if (const auto seed = seed_from_environment()) {
		config.seed = *seed;
	}
	if (!config_file.empty()) {
		for (const auto &[key, value] : read_settings(config_file)) {
			apply_setting(config, key, value);
		}
	}
	flags.apply(config);
	return config;
}

} // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
	CLI::App app{"Wavelet-decomposed transformer forecasting"};
	app.name("wavecast");
	app.require_subcommand(1);

	std::string config_file;

	auto *decompose = app.add_subcommand("decompose", "MODWT multiresolution analysis of the training split");
	SettingFlags decompose_flags(decompose);
	add_data_flags(decompose_flags);
	decompose_flags.text("levels", "wavelet detail levels (default: floor(ln N) - 1)", "INT");
	decompose->add_option("--config", config_file, "key=value settings file; flags take precedence");

	auto *run = app.add_subcommand("run", "fit, forecast and score the selected models");
	SettingFlags run_flags(run);
	add_data_flags(run_flags);
	add_model_flags(run_flags);
	run->add_option("--config", config_file, "key=value settings file; flags take precedence");

	auto *evaluate = app.add_subcommand("evaluate", "score prediction CSVs against the test split");
	SettingFlags evaluate_flags(evaluate);
	add_data_flags(evaluate_flags);
	evaluate_flags.text("horizon-tag", "horizon label written to metrics");
	std::vector<std::string> prediction_files;
	evaluate->add_option("--predictions", prediction_files, "predictions_<model>.csv files")->required();
	evaluate->add_option("--config", config_file, "key=value settings file; flags take precedence");

	auto *mcb = app.add_subcommand("mcb", "multiple comparisons with the best over metrics CSVs");
	McbConfig mcb_config;
	std::vector<std::string> metric_files;
	std::string horizon;
	std::string out_dir = "out";
	mcb->add_option("--metrics", metric_files, "metrics CSV files to pool")->required();
	mcb->add_option("--alpha", mcb_config.alpha, "significance level: 0.10, 0.05 or 0.01")->capture_default_str();
	mcb->add_option("--horizon", horizon, "rank only this horizon tag");
	mcb->add_flag("--pooled", mcb_config.pooled, "one ranking over all horizons");
	mcb->add_option("--out", out_dir, "output directory")->capture_default_str();

	auto *version = app.add_subcommand("version", "print the version");

	try {
		std::vector<std::string> reversed(args.rbegin(), args.rend());
		app.parse(reversed);
	} catch (const CLI::CallForHelp &) {
		out << app.help();
		return 0;
	} catch (const CLI::CallForAllHelp &) {
		out << app.help("", CLI::AppFormatMode::All);
		return 0;
	} catch (const CLI::ParseError &e) {
		const auto *failing = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
		err << "error: " << e.what() << "\n" << failing->help();
		return 2;
	}

	try {
		if (version->parsed()) {
			out << "wavecast " << WAVECAST_VERSION << "\n";
		} else if (decompose->parsed()) {
			const auto summary = cmd_decompose(resolve(decompose_flags, config_file), out);
			for (const auto &file : summary.files) {
				out << "wrote " << file.string() << "\n";
			}
		} else if (run->parsed()) {
			const auto summary = cmd_run(resolve(run_flags, config_file), out);
			for (const auto &row : summary.metrics.rows) {
				out << row.model << ": rmse " << format_double(row.scores.rmse) << ", mae "
				    << format_double(row.scores.mae) << ", smape " << format_double(row.scores.smape) << ", mase "
				    << format_double(row.scores.mase) << "\n";
			}
		} else if (evaluate->parsed()) {
			EvaluateConfig config{resolve(evaluate_flags, config_file), {}};
			config.predictions.assign(prediction_files.begin(), prediction_files.end());
			cmd_evaluate(config, out);
		} else if (mcb->parsed()) {
			mcb_config.metrics.assign(metric_files.begin(), metric_files.end());
			if (!horizon.empty()) {
				mcb_config.horizon = horizon;
			}
			mcb_config.out = out_dir;
			for (const auto &[tag, result] : cmd_mcb(mcb_config, out)) {
				for (const auto &e : result.entries) {
					out << "  " << e.model << " " << format_double(e.mean_rank) << " +/- "
					    << format_double(e.half_width) << (e.not_significantly_worse ? "" : " (worse)") << "\n";
				}
			}
		}
	} catch (const InputError &e) {
		err << "error: " << e.what() << "\n";
		return 2;
	} catch (const NumericError &e) {
		err << "error: " << e.what() << "\n";
		return 1;
	} catch (const std::exception &e) {
		err << "error: " << e.what() << "\n";
		return 1;
	}
	return 0;
}

} // namespace wavecast::cli

#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "settings.hpp"
#include "wavecast/metrics.hpp"

namespace wavecast::cli {

struct DecomposeSummary {
	std::size_t length = 0;
	std::size_t levels = 0;
	std::vector<std::filesystem::path> files;
};

/// MODWT + MRA of the training split (the whole series when test_len is 0):
/// one `t,value` CSV per band, a wide CSV of all bands and a stacked plot.
DecomposeSummary cmd_decompose(const RunConfig &config, std::ostream &log);

struct RunSummary {
	eval::MetricTable metrics;
	std::vector<std::filesystem::path> files;
};

/// Split, fit every selected model, forecast the test span, score it and
/// write predictions, metrics, loss traces, a plot and the manifest.
RunSummary cmd_run(const RunConfig &config, std::ostream &log);

struct EvaluateConfig {
	RunConfig data; // data, column, header, name, test-len, horizon-tag, out
	std::vector<std::filesystem::path> predictions;
};

/// Scores existing prediction CSVs against the test split of the data.
eval::MetricTable cmd_evaluate(const EvaluateConfig &config, std::ostream &log);

struct McbConfig {
	std::vector<std::filesystem::path> metrics;
	double alpha = 0.05;
	std::optional<std::string> horizon;
	/// Pool all horizons into one ranking instead of one per horizon tag.
	bool pooled = false;
	std::filesystem::path out = "out";
};

/// One MCB ranking per horizon tag (or one pooled ranking), each written as
/// `mcb_<tag>.csv` and `mcb_<tag>.svg`.
std::vector<std::pair<std::string, eval::McbResult>> cmd_mcb(const McbConfig &config, std::ostream &log);

/// FNV-1a 64-bit digest of a file's bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path &path);

} // namespace wavecast::cli

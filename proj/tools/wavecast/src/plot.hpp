#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "wavecast/metrics.hpp"

namespace wavecast::cli {

struct PlotSeries {
	std::string label;
	std::vector<double> x;
	std::vector<double> y;
};

/// All series on one set of axes.
void write_line_chart(const std::filesystem::path &path, const std::string &title,
                      const std::vector<PlotSeries> &series);

/// One panel per series, stacked vertically and sharing the x range.
void write_stacked_chart(const std::filesystem::path &path, const std::string &title,
                         const std::vector<PlotSeries> &series);

/// Mean rank of each model with its interval; the best model's interval is shaded.
void write_mcb_chart(const std::filesystem::path &path, const std::string &title, const eval::McbResult &result);

} // namespace wavecast::cli

#include "plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "wavecast/errors.hpp"

namespace wavecast::cli {

namespace {

constexpr double kWidth = 900;
constexpr double kMarginLeft = 70;
constexpr double kMarginRight = 150;
constexpr const char *kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};

struct Range {
	double lo = std::numeric_limits<double>::infinity();
	double hi = -std::numeric_limits<double>::infinity();

	void include(double v) {
		if (std::isfinite(v)) {
			lo = std::min(lo, v);
			hi = std::max(hi, v);
		}
	}
	// Degenerate or empty ranges are widened so the mapping stays defined.
	void settle() {
		if (!(lo <= hi)) {
			lo = 0;
			hi = 1;
		}
		if (hi - lo < 1e-12 * std::max(1.0, std::abs(lo))) {
			lo -= 0.5;
			hi += 0.5;
		}
	}
	double map(double v, double from, double to) const { return from + (v - lo) / (hi - lo) * (to - from); }
};

std::string escape(const std::string &text) {
	std::string out;
	for (char c : text) {
		switch (c) {
		case '<':
			out += "&lt;";
			break;
		case '>':
			out += "&gt;";
			break;
		case '&':
			out += "&amp;";
			break;
		case '"':
			out += "&quot;";
			break;
		default:
			out += c;
		}
	}
	return out;
}

std::string num(double v) {
	std::ostringstream s;
	s.precision(6);
	s << v;
	return s.str();
}

void save(const std::filesystem::path &path, const std::string &svg) {
	std::ofstream out(path);
	if (!out) {
		throw InputError("cannot write " + path.string());
	}
	out << svg;
}

std::string header(double height, const std::string &title) {
	std::ostringstream s;
	s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << height
	  << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
	  << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
	  << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
	  << "</text>\n";
	return s.str();
}

void draw_panel(std::ostringstream &s, const std::vector<const PlotSeries *> &series, const Range &xr, double top,
                double bottom, std::size_t colour_offset) {
	Range yr;
	for (const auto *p : series) {
		for (double v : p->y) {
			yr.include(v);
		}
	}
	yr.settle();
	const double left = kMarginLeft, right = kWidth - kMarginRight;
	s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << right - left << "\" height=\"" << bottom - top
	  << "\" fill=\"none\" stroke=\"#888\"/>\n";
	s << "<text x=\"" << left - 6 << "\" y=\"" << top + 10 << "\" text-anchor=\"end\">" << num(yr.hi) << "</text>\n";
	s << "<text x=\"" << left - 6 << "\" y=\"" << bottom << "\" text-anchor=\"end\">" << num(yr.lo) << "</text>\n";
	for (std::size_t i = 0; i < series.size(); ++i) {
		const auto &p = *series[i];
		const char *colour = kPalette[(i + colour_offset) % std::size(kPalette)];
		s << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.2\" points=\"";
		for (std::size_t k = 0; k < p.y.size() && k < p.x.size(); ++k) {
			if (std::isfinite(p.y[k])) {
				s << num(xr.map(p.x[k], left, right)) << ',' << num(yr.map(p.y[k], bottom, top)) << ' ';
			}
		}
		s << "\"/>\n";
		s << "<text x=\"" << right + 8 << "\" y=\"" << top + 14 + 16 * static_cast<double>(i) << "\" fill=\"" << colour
		  << "\">" << escape(p.label) << "</text>\n";
	}
}

Range x_range(const std::vector<PlotSeries> &series) {
	Range xr;
	for (const auto &p : series) {
		for (double v : p.x) {
			xr.include(v);
		}
	}
	xr.settle();
	return xr;
}

} // namespace

void write_line_chart(const std::filesystem::path &path, const std::string &title,
                      const std::vector<PlotSeries> &series) {
	const double height = 420;
	const Range xr = x_range(series);
	std::ostringstream s;
	s << header(height, title);
	std::vector<const PlotSeries *> all;
	for (const auto &p : series) {
		all.push_back(&p);
	}
	draw_panel(s, all, xr, 40, height - 40, 0);
	s << "<text x=\"" << kMarginLeft << "\" y=\"" << height - 22 << "\">" << num(xr.lo) << "</text>\n";
	s << "<text x=\"" << kWidth - kMarginRight << "\" y=\"" << height - 22 << "\" text-anchor=\"end\">" << num(xr.hi)
	  << "</text>\n</svg>\n";
	save(path, s.str());
}

void write_stacked_chart(const std::filesystem::path &path, const std::string &title,
                         const std::vector<PlotSeries> &series) {
	const double panel = 110, gap = 12;
	const double height = 50 + static_cast<double>(series.size()) * (panel + gap) + 20;
	const Range xr = x_range(series);
	std::ostringstream s;
	s << header(height, title);
	for (std::size_t i = 0; i < series.size(); ++i) {
		const double top = 40 + static_cast<double>(i) * (panel + gap);
		draw_panel(s, {&series[i]}, xr, top, top + panel, i);
	}
	s << "</svg>\n";
	save(path, s.str());
}

void write_mcb_chart(const std::filesystem::path &path, const std::string &title, const eval::McbResult &result) {
	const double row = 34;
	const double height = 90 + row * static_cast<double>(result.entries.size());
	Range xr;
	for (const auto &e : result.entries) {
		xr.include(e.mean_rank - e.half_width);
		xr.include(e.mean_rank + e.half_width);
	}
	xr.settle();
	const double left = 170, right = kWidth - 40;
	std::ostringstream s;
	s << header(height, title);
	const auto &best = result.entry(result.best);
	s << "<rect x=\"" << num(xr.map(best.mean_rank - best.half_width, left, right)) << "\" y=\"40\" width=\""
	  << num(xr.map(best.mean_rank + best.half_width, left, right) - xr.map(best.mean_rank - best.half_width, left, right))
	  << "\" height=\"" << height - 80 << "\" fill=\"#dde8f5\"/>\n";
	for (std::size_t i = 0; i < result.entries.size(); ++i) {
		const auto &e = result.entries[i];
		const double y = 60 + row * static_cast<double>(i);
		const double x0 = xr.map(e.mean_rank - e.half_width, left, right);
		const double x1 = xr.map(e.mean_rank + e.half_width, left, right);
		const double xm = xr.map(e.mean_rank, left, right);
		const char *colour = e.not_significantly_worse ? "#1f77b4" : "#d62728";
		s << "<text x=\"" << left - 10 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << escape(e.model) << " - "
		  << num(e.mean_rank) << "</text>\n";
		s << "<line x1=\"" << num(x0) << "\" y1=\"" << y << "\" x2=\"" << num(x1) << "\" y2=\"" << y << "\" stroke=\""
		  << colour << "\" stroke-width=\"2\"/>\n";
		s << "<circle cx=\"" << num(xm) << "\" cy=\"" << y << "\" r=\"4\" fill=\"" << colour << "\"/>\n";
	}
	s << "<text x=\"" << left << "\" y=\"" << height - 20 << "\">mean rank " << num(xr.lo) << "</text>\n";
	s << "<text x=\"" << right << "\" y=\"" << height - 20 << "\" text-anchor=\"end\">" << num(xr.hi) << "</text>\n";
	s << "</svg>\n";
	save(path, s.str());
}

} // namespace wavecast::cli

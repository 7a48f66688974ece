#include "settings.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>

#include "wavecast/errors.hpp"
#include "wavecast/series.hpp"

namespace wavecast::cli {

namespace {

const std::vector<std::string> kModels{"wtransformer", "transformer", "naive"};

std::string trim(const std::string &text) {
	const auto begin = text.find_first_not_of(" \t\r");
	if (begin == std::string::npos) {
		return "";
	}
	const auto end = text.find_last_not_of(" \t\r");
	return text.substr(begin, end - begin + 1);
}

std::size_t parse_positive(const std::string &key, const std::string &text) {
	const auto value = parse_unsigned(key, text);
	if (value == 0) {
		throw InputError(key + " must be positive");
	}
	return static_cast<std::size_t>(value);
}

double parse_real(const std::string &key, const std::string &text) {
	double value = 0.0;
	if (!parse_double(text, value)) {
		throw InputError(key + ": expected a number, got '" + text + "'");
	}
	return value;
}

std::vector<std::string> parse_models(const std::string &text) {
	std::vector<std::string> models;
	std::size_t begin = 0;
	while (begin <= text.size()) {
		const auto comma = std::min(text.find(',', begin), text.size());
		const auto name = trim(text.substr(begin, comma - begin));
		if (std::find(kModels.begin(), kModels.end(), name) == kModels.end()) {
			throw InputError("unknown model '" + name + "' (expected wtransformer, transformer or naive)");
		}
		if (std::find(models.begin(), models.end(), name) == models.end()) {
			models.push_back(name);
		}
		begin = comma + 1;
	}
	return models;
}

using Applier = std::function<void(RunConfig &, const std::string &, const std::string &)>;

const std::map<std::string, Applier> &appliers() {
	static const std::map<std::string, Applier> table{
	    {"data", [](RunConfig &c, const std::string &, const std::string &v) { c.data = v; }},
	    {"column", [](RunConfig &c, const std::string &, const std::string &v) { c.column = v; }},
	    {"header", [](RunConfig &c, const std::string &k, const std::string &v) { c.header = parse_bool(k, v); }},
	    {"name", [](RunConfig &c, const std::string &, const std::string &v) { c.name = v; }},
	    {"test-len",
	     [](RunConfig &c, const std::string &k, const std::string &v) { c.test_len = parse_positive(k, v); }},
	    {"horizon-tag",
	     [](RunConfig &c, const std::string &k, const std::string &v) {
		     if (v.empty() || v.find_first_of(",\n") != std::string::npos) {
			     throw InputError(k + " must be a non-empty label without commas");
		     }
		     c.horizon_tag = v;
	     }},
	    {"levels",
	     [](RunConfig &c, const std::string &k, const std::string &v) {
		     if (v == "default") {
			     c.levels.reset();
		     } else {
			     c.levels = static_cast<std::size_t>(parse_unsigned(k, v));
		     }
	     }},
	    {"seed", [](RunConfig &c, const std::string &k, const std::string &v) { c.seed = parse_unsigned(k, v); }},
	    {"jobs", [](RunConfig &c, const std::string &k, const std::string &v) { c.jobs = parse_positive(k, v); }},
	    {"out", [](RunConfig &c, const std::string &, const std::string &v) { c.out = v; }},
	    {"model", [](RunConfig &c, const std::string &, const std::string &v) { c.models = parse_models(v); }},
	    {"paper-mode",
	     [](RunConfig &c, const std::string &k, const std::string &v) { c.paper_mode = parse_bool(k, v); }},
	    {"save-models",
	     [](RunConfig &c, const std::string &k, const std::string &v) { c.save_models = parse_bool(k, v); }},
	    {"epochs",
	     [](RunConfig &c, const std::string &k, const std::string &v) { c.transformer.epochs = parse_positive(k, v); }},
	    {"input-len",
	     [](RunConfig &c, const std::string &k, const std::string &v) {
		     c.transformer.input_len = parse_positive(k, v);
	     }},
	    {"d-model",
	     [](RunConfig &c, const std::string &k, const std::string &v) { c.transformer.d_model = parse_positive(k, v); }},
	    {"heads",
	     [](RunConfig &c, const std::string &k, const std::string &v) {
		     c.transformer.num_heads = parse_positive(k, v);
	     }},
	    {"encoder-layers",
	     [](RunConfig &c, const std::string &k, const std::string &v) {
		     c.transformer.encoder_layers = parse_positive(k, v);
	     }},
	    {"decoder-layers",
	     [](RunConfig &c, const std::string &k, const std::string &v) {
		     c.transformer.decoder_layers = parse_positive(k, v);
	     }},
	    {"ffn-hidden",
	     [](RunConfig &c, const std::string &k, const std::string &v) {
		     c.transformer.ffn_hidden = parse_positive(k, v);
	     }},
	    {"dropout",
	     [](RunConfig &c, const std::string &k, const std::string &v) { c.transformer.dropout = parse_real(k, v); }},
	    {"batch-size",
	     [](RunConfig &c, const std::string &k, const std::string &v) {
		     c.transformer.batch_size = parse_positive(k, v);
	     }},
	    {"lr",
	     [](RunConfig &c, const std::string &k, const std::string &v) {
		     c.transformer.optimizer.lr = parse_real(k, v);
	     }},
	};
	return table;
}

} // namespace

std::string RunConfig::dataset_name() const { return name.empty() ? data.stem().string() : name; }

std::uint64_t parse_unsigned(const std::string &key, const std::string &text) {
	std::uint64_t value = 0;
	const auto *end = text.data() + text.size();
	const auto [ptr, ec] = std::from_chars(text.data(), end, value);
	if (text.empty() || ec != std::errc() || ptr != end) {
		throw InputError(key + ": expected a non-negative integer, got '" + text + "'");
	}
	return value;
}

bool parse_bool(const std::string &key, const std::string &text) {
	if (text == "true" || text == "1" || text == "yes" || text == "on") {
		return true;
	}
	if (text == "false" || text == "0" || text == "no" || text == "off") {
		return false;
	}
	throw InputError(key + ": expected true or false, got '" + text + "'");
}

void apply_setting(RunConfig &config, const std::string &key, const std::string &value) {
	const auto it = appliers().find(key);
	if (it == appliers().end()) {
		throw InputError("unknown setting '" + key + "'");
	}
	it->second(config, key, value);
}

std::vector<Setting> read_settings(const std::filesystem::path &path) {
	std::ifstream in(path);
	if (!in) {
		throw InputError("cannot open config file " + path.string());
	}
	std::vector<Setting> settings;
	std::string line;
	for (std::size_t row = 1; std::getline(in, line); ++row) {
		line = trim(line);
		if (line.empty() || line.front() == '#') {
			continue;
		}
		const auto eq = line.find('=');
		if (eq == std::string::npos) {
			throw InputError(path.string() + ":" + std::to_string(row) + ": expected key=value");
		}
		auto key = trim(line.substr(0, eq));
		if (key.starts_with("result.")) {
			continue;
		}
		settings.emplace_back(std::move(key), trim(line.substr(eq + 1)));
	}
	return settings;
}

std::vector<Setting> to_settings(const RunConfig &c) {
	std::string models;
	for (const auto &m : c.models) {
		models += (models.empty() ? "" : ",") + m;
	}
	const auto &t = c.transformer;
	return {
	    {"data", c.data.string()},
	    {"column", c.column},
	    {"header", c.header ? "true" : "false"},
	    {"name", c.dataset_name()},
	    {"test-len", std::to_string(c.test_len)},
	    {"horizon-tag", c.horizon_tag},
	    {"levels", c.levels ? std::to_string(*c.levels) : "default"},
	    {"seed", std::to_string(c.seed)},
	    {"jobs", std::to_string(c.jobs)},
	    {"out", c.out.string()},
	    {"model", models},
	    {"paper-mode", c.paper_mode ? "true" : "false"},
	    {"save-models", c.save_models ? "true" : "false"},
	    {"epochs", std::to_string(t.epochs)},
	    {"input-len", std::to_string(t.input_len)},
	    {"d-model", std::to_string(t.d_model)},
	    {"heads", std::to_string(t.num_heads)},
	    {"encoder-layers", std::to_string(t.encoder_layers)},
	    {"decoder-layers", std::to_string(t.decoder_layers)},
	    {"ffn-hidden", std::to_string(t.ffn_hidden)},
	    {"dropout", format_double(t.dropout)},
	    {"batch-size", std::to_string(t.batch_size)},
	    {"lr", format_double(t.optimizer.lr)},
	};
}

void write_settings(const std::filesystem::path &path, const std::vector<Setting> &settings) {
	std::ofstream out(path);
	if (!out) {
		throw InputError("cannot write " + path.string());
	}
	for (const auto &[key, value] : settings) {
		out << key << '=' << value << '\n';
	}
}

std::optional<std::uint64_t> seed_from_environment() {
	const char *text = std::getenv("WAVECAST_SEED");
	if (text == nullptr || *text == '\0') {
		return std::nullopt;
	}
	return parse_unsigned("WAVECAST_SEED", text);
}

} // namespace wavecast::cli

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wavecast/transformer.hpp"

namespace wavecast::cli {

using Setting = std::pair<std::string, std::string>;

/// Everything a `run` or `decompose` invocation depends on.
struct RunConfig {
	std::filesystem::path data;
	std::string column = "0";
	bool header = true;
	std::string name; // dataset label, defaults to the data file stem
	std::size_t test_len = 0;
	std::string horizon_tag = "short";
	std::optional<std::size_t> levels;
	std::uint64_t seed = 42;
	std::size_t jobs = 1;
	std::filesystem::path out = "out";
	std::vector<std::string> models{"wtransformer", "transformer", "naive"};
	bool paper_mode = false;
	bool save_models = false;
	nn::TransformerConfig transformer;

	std::string dataset_name() const;
};

/// Applies one `key=value` setting. Keys are the long flag names without
/// dashes. Throws InputError on an unknown key or a malformed value.
void apply_setting(RunConfig &config, const std::string &key, const std::string &value);

/// Reads a flat `key=value` file. Blank lines and `#` comments are skipped;
/// keys starting with `result.` are ignored so a run manifest can be replayed.
std::vector<Setting> read_settings(const std::filesystem::path &path);

/// All settings of `config` in a fixed order; applying them to a default
/// RunConfig reproduces `config`.
std::vector<Setting> to_settings(const RunConfig &config);

void write_settings(const std::filesystem::path &path, const std::vector<Setting> &settings);

/// Seed from WAVECAST_SEED, if set.
std::optional<std::uint64_t> seed_from_environment();

std::uint64_t parse_unsigned(const std::string &key, const std::string &text);
bool parse_bool(const std::string &key, const std::string &text);

} // namespace wavecast::cli

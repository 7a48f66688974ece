#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "wavecast/tensor.hpp"

namespace wavecast::autograd {

/// Portable text checkpoint:
///
///     wavecast-checkpoint 1
///     meta <key> <value to end of line>      (any number)
///     tensor <name> <rank> <dim>...          (any number, each followed by
///     <values>                                one line of shortest round-trip decimals)
///     end
///
/// Values round-trip bit-exactly.
struct Checkpoint {
	std::vector<std::pair<std::string, std::string>> meta;
	std::vector<std::pair<std::string, Tensor>> tensors;

	void set(const std::string &key, const std::string &value);
	const std::string &get(const std::string &key) const;
	bool has(const std::string &key) const;
	const Tensor &tensor(const std::string &name) const;
};

void write_checkpoint(std::ostream &out, const Checkpoint &checkpoint);
Checkpoint read_checkpoint(std::istream &in);

void save_checkpoint(const std::filesystem::path &path, const Checkpoint &checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path &path);

} // namespace wavecast::autograd

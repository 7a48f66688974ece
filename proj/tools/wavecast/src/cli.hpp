#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace wavecast::cli {

/// Parses and runs one command line (args excludes the program name).
/// Returns 0 on success, 1 on a computation failure, 2 on a usage or input error.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace wavecast::cli

#pragma once

#include <stdexcept>
#include <string>

namespace wavecast {

/// Bad user input: malformed files, invalid arguments, preconditions the
/// caller could have checked. The CLI maps these to exit code 2.
class InputError : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

/// A computation that started from valid input but could not finish
/// (non-finite activations, diverging loss). The CLI maps these to exit code 1.
class NumericError : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

} // namespace wavecast

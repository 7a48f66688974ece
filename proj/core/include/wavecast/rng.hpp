#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>

namespace wavecast {

// Seeded generator with distribution code written out here instead of the
// <random> distributions, whose output differs between standard libraries.
class Rng {
public:
	explicit Rng(std::uint64_t seed = 42) : engine_(seed) {}

	/// Uniform in [0, 1) with 53 random bits.
	double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

	double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

	/// Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
	std::uint64_t below(std::uint64_t n) {
		const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
		                            std::numeric_limits<std::uint64_t>::max() % n;
		std::uint64_t x = 0;
		do {
			x = engine_();
		} while (x >= limit);
		return x % n;
	}

	/// Standard normal via Box-Muller.
	double normal() {
		double u1 = 0.0;
		do {
			u1 = uniform();
		} while (u1 <= 0.0);
		const double u2 = uniform();
		return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
	}

	template <typename T>
	void shuffle(std::span<T> items) {
		for (std::size_t i = items.size(); i > 1; --i) {
			const auto j = static_cast<std::size_t>(below(i));
			std::swap(items[i - 1], items[j]);
		}
	}

	std::string state() const;
	void restore(const std::string &state);

private:
	std::mt19937_64 engine_;
};

} // namespace wavecast

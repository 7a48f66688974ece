#include "wavecast/rng.hpp"

#include <sstream>

#include "wavecast/errors.hpp"

namespace wavecast {

std::string Rng::state() const {
	std::ostringstream out;
	out << engine_;
	return out.str();
}

void Rng::restore(const std::string &state) {
	std::istringstream in(state);
	in >> engine_;
	if (!in) {
		throw InputError("corrupt random generator state");
	}
}

} // namespace wavecast

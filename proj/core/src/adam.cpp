#include "wavecast/adam.hpp"

#include <cmath>

#include "wavecast/errors.hpp"

namespace wavecast::autograd {

AdamState AdamState::for_params(const std::vector<Tensor> &params) {
	AdamState state;
	for (const auto &p : params) {
		state.m.emplace_back(p.size(), 0.0);
		state.v.emplace_back(p.size(), 0.0);
	}
	return state;
}

void adam_step(std::vector<Tensor> &params, AdamState &state, const AdamOptions &options) {
	if (state.m.size() != params.size() || state.v.size() != params.size()) {
		throw InputError("Adam state does not match the parameter list");
	}
	for (const auto &p : params) {
		for (double g : p.grad()) {
			if (!std::isfinite(g)) {
				throw NumericError("non-finite gradient passed to Adam");
			}
		}
	}

	++state.step;
	const auto t = static_cast<double>(state.step);
	const double correction1 = 1.0 - std::pow(options.beta1, t);
	const double correction2 = 1.0 - std::pow(options.beta2, t);

	for (std::size_t k = 0; k < params.size(); ++k) {
		auto &p = params[k];
		const auto grad = p.grad();
		auto data = p.data();
		auto &m = state.m[k];
		auto &v = state.v[k];
		if (m.size() != data.size()) {
			throw InputError("Adam state shape does not match parameter");
		}
		for (std::size_t i = 0; i < data.size(); ++i) {
			const double g = grad.empty() ? 0.0 : grad[i];
			m[i] = options.beta1 * m[i] + (1.0 - options.beta1) * g;
			v[i] = options.beta2 * v[i] + (1.0 - options.beta2) * g * g;
			const double m_hat = m[i] / correction1;
			const double v_hat = v[i] / correction2;
			data[i] -= options.lr * m_hat / (std::sqrt(v_hat) + options.eps);
		}
	}
}

Adam::Adam(std::vector<Tensor> params, AdamOptions options)
    : params_(std::move(params)), options_(options), state_(AdamState::for_params(params_)) {}

void Adam::zero_grad() {
	for (auto &p : params_) {
		p.zero_grad();
	}
}

} // namespace wavecast::autograd

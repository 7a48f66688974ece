#pragma once

#include <cstdint>
#include <vector>

#include "wavecast/tensor.hpp"

namespace wavecast::autograd {

struct AdamOptions {
	double lr = 1e-3;
	double beta1 = 0.9;
	double beta2 = 0.999;
	double eps = 1e-8;
};

/// First and second moment estimates, one buffer per parameter.
struct AdamState {
	std::vector<std::vector<double>> m;
	std::vector<std::vector<double>> v;
	std::int64_t step = 0;

	static AdamState for_params(const std::vector<Tensor> &params);
};

/// One bias-corrected Adam update using each parameter's accumulated grad.
/// Parameters without a grad buffer are treated as having zero gradient.
void adam_step(std::vector<Tensor> &params, AdamState &state, const AdamOptions &options);

class Adam {
public:
	Adam(std::vector<Tensor> params, AdamOptions options = {});

	void step() { adam_step(params_, state_, options_); }
	void zero_grad();

	const AdamOptions &options() const { return options_; }
	AdamState &state() { return state_; }
	const AdamState &state() const { return state_; }

private:
	std::vector<Tensor> params_;
	AdamOptions options_;
	AdamState state_;
};

} // namespace wavecast::autograd

#include <cmath>
#include <numbers>

#include <benchmark/benchmark.h>

#include "wavecast/adam.hpp"
#include "wavecast/transformer.hpp"

namespace {

using wavecast::nn::TransformerConfig;
using wavecast::nn::TransformerModel;

std::vector<double> windows(std::size_t batch, std::size_t len) {
	std::vector<double> x(batch * len);
	for (std::size_t i = 0; i < x.size(); ++i) {
		x[i] = std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / 24.0);
	}
	return x;
}

void BM_ForwardEval(benchmark::State &state) {
	const TransformerModel model(TransformerConfig{}, 42);
	const auto batch = static_cast<std::size_t>(state.range(0));
	const auto x = windows(batch, 12);
	for (auto _ : state) {
		wavecast::autograd::Tape tape(false);
		benchmark::DoNotOptimize(model.forward(tape, x, batch));
	}
	state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardEval)->Arg(1)->Arg(32)->Arg(256);

void BM_TrainStep(benchmark::State &state) {
	TransformerModel model(TransformerConfig{}, 42);
	const std::size_t batch = 32;
	const auto x = windows(batch, 12);
	const wavecast::autograd::Tensor target({batch}, std::vector<double>(batch, 0.5));
	auto params = model.parameters();
	auto optimizer = wavecast::autograd::AdamState::for_params(params);
	wavecast::Rng rng(1);
	for (auto _ : state) {
		wavecast::autograd::Tape tape;
		const auto loss = tape.mse_loss(model.forward(tape, x, batch, &rng), target);
		for (auto &p : params) {
			p.zero_grad();
		}
		tape.backward(loss);
		wavecast::autograd::adam_step(params, optimizer, {});
	}
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

void BM_TrainEpochs(benchmark::State &state) {
	std::vector<double> series(480);
	for (std::size_t t = 0; t < series.size(); ++t) {
		series[t] = std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 24.0);
	}
	TransformerConfig config;
	config.epochs = 1;
	for (auto _ : state) {
		TransformerModel model(config, 42);
		benchmark::DoNotOptimize(model.train(series));
	}
}
BENCHMARK(BM_TrainEpochs)->Unit(benchmark::kMillisecond);

} // namespace

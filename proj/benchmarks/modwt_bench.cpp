#include <benchmark/benchmark.h>

#include "wavecast/modwt.hpp"
#include "wavecast/rng.hpp"

namespace {

std::vector<double> noise(std::size_t n) {
	wavecast::Rng rng(1);
	std::vector<double> y(n);
	for (auto &v : y) {
		v = rng.normal();
	}
	return y;
}

void BM_Modwt(benchmark::State &state) {
	const auto y = noise(static_cast<std::size_t>(state.range(0)));
	const auto levels = wavecast::wavelet::default_level_count(y.size());
	const auto filter = wavecast::wavelet::WaveletFilter::haar();
	for (auto _ : state) {
		benchmark::DoNotOptimize(wavecast::wavelet::modwt(y, filter, levels));
	}
	state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Modwt)->RangeMultiplier(4)->Range(256, 1 << 16);

void BM_Decompose(benchmark::State &state) {
	const auto y = noise(static_cast<std::size_t>(state.range(0)));
	const auto levels = wavecast::wavelet::default_level_count(y.size());
	const auto filter = wavecast::wavelet::WaveletFilter::haar();
	for (auto _ : state) {
		benchmark::DoNotOptimize(wavecast::wavelet::decompose(y, filter, levels));
	}
	state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Decompose)->RangeMultiplier(4)->Range(256, 1 << 16);

} // namespace

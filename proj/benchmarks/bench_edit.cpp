// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

// Single-layer edit latency against full regeneration on the toy backend.
// The denoiser_calls counter is per iteration.

#include <benchmark/benchmark.h>

#include "ldb/cache.hpp"
#include "ldb/engine.hpp"
#include "ldb/layers.hpp"

namespace {

using namespace ldb;

constexpr int kSteps = 25;

ToyBackend make_toy(int side) {
    ToyBackendConfig config;
    config.latent_shape = Shape{4, side, side};
    return ToyBackend(config);
}

void BM_FullGeneration(benchmark::State& state) {
    const ToyBackend toy = make_toy(static_cast<int>(state.range(0)));
    const PromptEmbedding prompt = toy.embed("a cat on a sofa");
    const auto before = toy.denoiser_calls();
    for (auto _ : state) benchmark::DoNotOptimize(toy.generate(Seed{1}, prompt, kSteps));
    state.counters["denoiser_calls"] =
        benchmark::Counter(static_cast<double>(toy.denoiser_calls() - before), benchmark::Counter::kAvgIterations);
}
BENCHMARK(BM_FullGeneration)->Arg(16)->Arg(64)->Unit(benchmark::kMicrosecond);

// Args: latent side, edit steps n.
void BM_CachedEdit(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const ToyBackend toy = make_toy(side);
    const BaseImage base = generate_base(toy, Seed{1}, "a cat on a sofa", kSteps);
    EditParams p;
    p.prompt = "a dog on a sofa";
    p.mask = Mask::box(side, side, side / 2, side / 2, side / 5, 1);
    p.seed = Seed{11};
    p.alpha_star = 60.0;
    p.edit_steps = static_cast<int>(state.range(1));
    const CachedLatents cached = capture(base.trajectory, p.edit_steps);
    const PromptEmbedding edit_prompt = toy.embed(p.prompt);
    const auto before = toy.denoiser_calls();
    for (auto _ : state) benchmark::DoNotOptimize(single_layer_edit(toy, p, cached, edit_prompt));
    state.counters["denoiser_calls"] =
        benchmark::Counter(static_cast<double>(toy.denoiser_calls() - before), benchmark::Counter::kAvgIterations);
}
BENCHMARK(BM_CachedEdit)
    ->ArgsProduct({{16, 64}, {4, 8, 16, 25}})
    ->Unit(benchmark::kMicrosecond);

void BM_Capture(benchmark::State& state) {
    const ToyBackend toy = make_toy(static_cast<int>(state.range(0)));
    const Trajectory t = toy.generate(Seed{1}, toy.embed("a cat on a sofa"), kSteps);
    for (auto _ : state) benchmark::DoNotOptimize(capture(t, 8));
}
BENCHMARK(BM_Capture)->Arg(16)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_MapStrength(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const LatentTensor zr = sample_gaussian(Seed{3}, Shape{4, side, side});
    const LatentTensor noise = scaled_noise(Seed{4}, zr);
    const Mask mask = Mask::box(side, side, side / 2, side / 2, side / 5, 1);
    for (auto _ : state) benchmark::DoNotOptimize(map_strength(60.0, zr, noise, mask, kDefaultSigma, side));
}
BENCHMARK(BM_MapStrength)->Arg(16)->Arg(64)->Unit(benchmark::kMicrosecond);

}  // namespace

// Copyright 2026 The LDB Authors
// SPDX-License-Identifier: Apache-2.0

#include <memory>

#include <benchmark/benchmark.h>

#include "ldb/layers.hpp"

namespace {

using namespace ldb;

constexpr int kSteps = 25;
constexpr int kSide = 16;

EditParams layer_params(int k) {
    EditParams p;
    p.prompt = k % 2 ? "a red hat" : "a blue scarf";
    p.mask = Mask::box(kSide, kSide, 3 + 3 * (k % 4), 3 + 3 * (k / 4 % 4), 2, 1);
    p.seed = Seed{static_cast<std::uint64_t>(100 + k)};
    p.alpha_star = 60.0;
    return p;
}

LayerStack make_stack(int layers) {
    auto toy = std::make_shared<ToyBackend>();
    LayerStack stack(toy, generate_base(*toy, Seed{1}, "a cat on a sofa", kSteps));
    for (int k = 0; k < layers; ++k) stack.add_layer(layer_params(k));
    return stack;
}

// Hide then show layer 0 of an L-layer stack; every layer above is recomputed twice.
void BM_ToggleBottomLayer(benchmark::State& state) {
    LayerStack stack = make_stack(static_cast<int>(state.range(0)));
    std::uint64_t calls = 0;
    for (auto _ : state) {
        calls += stack.set_visibility(0, false).denoiser_calls();
        calls += stack.set_visibility(0, true).denoiser_calls();
    }
    state.counters["denoiser_calls"] = benchmark::Counter(static_cast<double>(calls), benchmark::Counter::kAvgIterations);
}
BENCHMARK(BM_ToggleBottomLayer)->Arg(1)->Arg(3)->Arg(5)->Unit(benchmark::kMicrosecond);

// Toggling the top layer touches nothing beneath it.
void BM_ToggleTopLayer(benchmark::State& state) {
    const int layers = static_cast<int>(state.range(0));
    LayerStack stack = make_stack(layers);
    for (auto _ : state) {
        stack.set_visibility(layers - 1, false);
        stack.set_visibility(layers - 1, true);
    }
}
BENCHMARK(BM_ToggleTopLayer)->Arg(1)->Arg(5)->Unit(benchmark::kMicrosecond);

void BM_PreviewTopLayer(benchmark::State& state) {
    const LayerStack stack = make_stack(3);
    EditParams p = stack.layer(2).params;
    for (auto _ : state) {
        p.seed = Seed{p.seed.value + 1};
        benchmark::DoNotOptimize(stack.preview(2, p));
    }
}
BENCHMARK(BM_PreviewTopLayer)->Unit(benchmark::kMicrosecond);

}  // namespace

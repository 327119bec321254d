// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <vector>

#include "lora_lab/adaptation.hpp"
#include "lora_lab/model.hpp"
#include "lora_lab/numerics.hpp"
#include "lora_lab/params.hpp"

using namespace lora_lab;

namespace {

void BM_Matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    RngStream rng(1);
    const Matrix a = random_gaussian(n, n, 1.0, rng);
    const Matrix b = random_gaussian(n, n, 1.0, rng);
    for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(256);

struct Setup {
    ModelConfig cfg;
    ModelParams params;
    AdaptationState state;
    std::vector<Matrix> batch;
    std::vector<std::size_t> labels;
};

Setup make_setup(const AdaptationMethod& method, std::size_t seq_len, std::size_t batch) {
    Setup s;
    s.cfg.max_seq_len = seq_len;
    RngStream rng(7);
    s.params = ModelParams::initialize(s.cfg, rng);
    s.state = instrument(s.params, s.cfg, method, rng);
    for (std::size_t i = 0; i < batch; ++i) {
        s.batch.push_back(random_gaussian(seq_len, s.cfg.d_model, 1.0, rng));
        s.labels.push_back(i % 2);
    }
    return s;
}

void BM_Forward(benchmark::State& state) {
    const Setup s = make_setup(FixedMethod{}, static_cast<std::size_t>(state.range(0)), 16);
    for (auto _ : state) benchmark::DoNotOptimize(forward(s.cfg, s.params, s.state, s.batch));
}
BENCHMARK(BM_Forward)->Arg(8)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_BackwardFinetune(benchmark::State& state) {
    const Setup s = make_setup(FullFinetuneMethod{}, static_cast<std::size_t>(state.range(0)), 16);
    for (auto _ : state) benchmark::DoNotOptimize(backward(s.cfg, s.params, s.state, s.batch, s.labels));
}
BENCHMARK(BM_BackwardFinetune)->Arg(8)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_BackwardLoRA(benchmark::State& state) {
    const Setup s = make_setup(LoRAConfig{.rank = 2}, static_cast<std::size_t>(state.range(0)), 16);
    for (auto _ : state) benchmark::DoNotOptimize(backward(s.cfg, s.params, s.state, s.batch, s.labels));
}
BENCHMARK(BM_BackwardLoRA)->Arg(8)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_LoRAMerge(benchmark::State& state) {
    const Setup s = make_setup(LoRAConfig{.rank = 4}, 32, 1);
    for (auto _ : state) benchmark::DoNotOptimize(merge_adaptation(s.params, s.state));
}
BENCHMARK(BM_LoRAMerge);

}  // namespace
BENCHMARK_MAIN();

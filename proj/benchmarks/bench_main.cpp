// Copyright (c) 2026 The kvslim authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "kvslim/compressor.hpp"
#include "kvslim/config.hpp"
#include "kvslim/model.hpp"
#include "kvslim/oracle.hpp"
#include "kvslim/rng.hpp"
#include "kvslim/synthetic.hpp"
#include "kvslim/tensor.hpp"

namespace {

kvslim::PipelineConfig bench_config() {
  kvslim::PipelineConfig cfg;
  cfg.frames = 96;
  cfg.tokens_per_frame = 16;
  cfg.frames_per_chunk = 16;
  cfg.prompt_tokens = 12;
  cfg.layers = 4;
  cfg.heads = 2;
  cfg.width = 32;
  cfg.max_context = 396;
  cfg.seed = 7;
  cfg.validate();
  return cfg;
}

kvslim::Mat random_mat(std::size_t rows, std::size_t cols,
                       std::uint64_t seed) {
  kvslim::Rng rng(seed);
  kvslim::Mat m(rows, cols);
  for (auto& x : m.data) x = static_cast<float>(rng.normal());
  return m;
}

void BM_matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const kvslim::Mat a = random_mat(n, n, 1);
  const kvslim::Mat b = random_mat(n, n, 2);
  for (auto _ : state) {
    kvslim::Mat c = kvslim::matmul(a, b);
    benchmark::DoNotOptimize(c.data.data());
  }
}
BENCHMARK(BM_matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_softmax_rows(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const kvslim::Mat logits = random_mat(n, n, 3);
  for (auto _ : state) {
    kvslim::Mat w = kvslim::softmax_rows(logits);
    benchmark::DoNotOptimize(w.data.data());
  }
}
BENCHMARK(BM_softmax_rows)->Arg(128)->Arg(512);

void BM_prefill_chunk(benchmark::State& state) {
  const kvslim::PipelineConfig cfg = bench_config();
  const kvslim::ModelParams params = kvslim::init_model(cfg);
  const kvslim::Mat chunk =
      random_mat(cfg.chunk_tokens(), cfg.width, 4);
  const kvslim::Mat prompt = random_mat(cfg.prompt_tokens, cfg.width, 5);
  for (auto _ : state) {
    kvslim::LayerKVCache cache(cfg.layers, cfg.width);
    kvslim::PrefillResult result =
        kvslim::prefill_chunk(cache, chunk, prompt, params, cfg, 0);
    benchmark::DoNotOptimize(result.prompt_states.data.data());
  }
}
BENCHMARK(BM_prefill_chunk);

void BM_pipeline(benchmark::State& state) {
  const kvslim::PipelineConfig cfg = bench_config();
  const kvslim::ModelParams params = kvslim::init_model(cfg);
  const kvslim::Mat features = kvslim::synthesize_features(cfg, 4, 0.05);
  const kvslim::Mat prompt = kvslim::synthesize_prompt(cfg);
  for (auto _ : state) {
    kvslim::PipelineResult result =
        kvslim::run_pipeline(features, prompt, params, cfg);
    benchmark::DoNotOptimize(result.cache_lengths.data());
  }
}
BENCHMARK(BM_pipeline);

void BM_verify_bound(benchmark::State& state) {
  for (auto _ : state) {
    auto trials = kvslim::oracle::verify_bound(64, 11);
    benchmark::DoNotOptimize(trials.data());
  }
}
BENCHMARK(BM_verify_bound);

void BM_near_optimality(benchmark::State& state) {
  for (auto _ : state) {
    auto trials = kvslim::oracle::check_near_optimality(64, 13);
    benchmark::DoNotOptimize(trials.data());
  }
}
BENCHMARK(BM_near_optimality);

}  // namespace

BENCHMARK_MAIN();

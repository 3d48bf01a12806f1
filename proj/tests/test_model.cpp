// Copyright (c) 2026 The kvslim authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "doctest.h"
#include "kvslim/compressor.hpp"
#include "kvslim/config.hpp"
#include "kvslim/error.hpp"
#include "kvslim/model.hpp"
#include "kvslim/rng.hpp"
#include "kvslim/tensor.hpp"

using kvslim::LayerKVCache;
using kvslim::Mat;
using kvslim::PipelineConfig;

namespace {

PipelineConfig small_config() {
  PipelineConfig cfg;
  cfg.frames = 8;
  cfg.tokens_per_frame = 2;
  cfg.frames_per_chunk = 4;
  cfg.prompt_tokens = 3;
  cfg.layers = 2;
  cfg.heads = 2;
  cfg.width = 8;
  cfg.max_context = 3 + 16;  // keep-all budget
  cfg.seed = 5;
  cfg.validate();
  return cfg;
}

Mat random_mat(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  kvslim::Rng rng(seed);
  Mat m(rows, cols);
  for (auto& x : m.data) x = static_cast<float>(rng.normal());
  return m;
}

}  // namespace

TEST_CASE("init_model is reproducible per seed") {
  const PipelineConfig cfg = small_config();
  const auto a = kvslim::init_model(cfg);
  const auto b = kvslim::init_model(cfg);
  REQUIRE(a.layers.size() == cfg.layers);
  CHECK(a.layers[0].w_query.data == b.layers[0].w_query.data);
  CHECK(a.layers[1].w_out.data == b.layers[1].w_out.data);

  PipelineConfig other = cfg;
  other.seed = 6;
  const auto c = kvslim::init_model(other);
  CHECK(a.layers[0].w_query.data != c.layers[0].w_query.data);
}

TEST_CASE("cache append, tail removal, and compaction") {
  LayerKVCache cache(1, 2);
  const Mat keys = random_mat(4, 2, 1);
  const Mat values = random_mat(4, 2, 2);
  std::vector<kvslim::SlotOrigin> origins;
  for (std::size_t i = 0; i < 4; ++i) origins.push_back({0, i});
  cache.append(0, keys, values, origins);
  REQUIRE(cache.length(0) == 4);

  SUBCASE("remove_tail drops the trailing slots") {
    cache.remove_tail(0, 2);
    REQUIRE(cache.length(0) == 2);
    CHECK(cache.keys(0).at(1, 1) == keys.at(1, 1));
  }

  SUBCASE("compact_segment keeps selected rows and preserves the suffix") {
    const Mat more_k = random_mat(2, 2, 3);
    const Mat more_v = random_mat(2, 2, 4);
    std::vector<kvslim::SlotOrigin> more_origins = {{1, 0}, {1, 1}};
    cache.append(0, more_k, more_v, more_origins);
    REQUIRE(cache.length(0) == 6);

    // Compact the first block [0, 4) down to rows 1 and 3.
    const std::vector<std::size_t> keep = {1, 3};
    cache.compact_segment(0, 0, 4, keep);
    REQUIRE(cache.length(0) == 4);
    CHECK(cache.keys(0).at(0, 0) == keys.at(1, 0));
    CHECK(cache.keys(0).at(1, 0) == keys.at(3, 0));
    CHECK(cache.values(0).at(1, 1) == values.at(3, 1));
    // Suffix block is untouched and provenance tracks the survivors.
    CHECK(cache.keys(0).at(2, 0) == more_k.at(0, 0));
    CHECK(cache.origins(0)[0].index == 1);
    CHECK(cache.origins(0)[1].index == 3);
    CHECK(cache.origins(0)[2].chunk == 1);
  }

  SUBCASE("compaction rejects unsorted keep lists") {
    const std::vector<std::size_t> unsorted = {2, 1};
    CHECK_THROWS_AS(cache.compact_segment(0, 0, 4, unsorted),
                    kvslim::InternalError);
  }
}

TEST_CASE("prefill records row-substochastic prompt attention") {
  const PipelineConfig cfg = small_config();
  const auto params = kvslim::init_model(cfg);
  const Mat chunk = random_mat(cfg.chunk_tokens(), cfg.width, 21);
  const Mat prompt = random_mat(cfg.prompt_tokens, cfg.width, 22);

  LayerKVCache cache(cfg.layers, cfg.width);
  const auto result = kvslim::prefill_chunk(cache, chunk, prompt, params, cfg, 0);

  REQUIRE(result.record.layers.size() == cfg.layers);
  for (const auto& block : result.record.layers) {
    REQUIRE(block.heads == cfg.heads);
    REQUIRE(block.rows == cfg.prompt_tokens);
    REQUIRE(block.cols == cfg.chunk_tokens());
    for (std::size_t h = 0; h < block.heads; ++h)
      for (std::size_t r = 0; r < block.rows; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < block.cols; ++c) {
          const double w = block.at(h, r, c);
          REQUIRE(w >= 0.0);
          sum += w;
        }
        // Columns cover only the chunk; the prompt itself holds the rest.
        CHECK(sum <= 1.0 + 1e-6);
      }
  }
  CHECK(result.prompt_states.rows == cfg.prompt_tokens);
  CHECK(result.prompt_states.cols == cfg.width);
  CHECK(result.prompt_states.all_finite());

  // Keys and values of chunk plus prompt were appended to every layer.
  for (std::size_t l = 0; l < cfg.layers; ++l)
    CHECK(cache.length(l) == cfg.chunk_tokens() + cfg.prompt_tokens);
}

TEST_CASE("chunked prefill with a keep-all budget equals the full pass") {
  const PipelineConfig cfg = small_config();
  const auto params = kvslim::init_model(cfg);
  const Mat features = random_mat(cfg.video_tokens(), cfg.width, 31);
  const Mat prompt = random_mat(cfg.prompt_tokens, cfg.width, 32);

  const Mat full = kvslim::forward_full(features, prompt, params, cfg);
  const auto piped = kvslim::run_pipeline(features, prompt, params, cfg);

  REQUIRE(full.rows == piped.prompt_states.rows);
  REQUIRE(full.cols == piped.prompt_states.cols);
  double max_diff = 0.0;
  for (std::size_t i = 0; i < full.data.size(); ++i)
    max_diff = std::max(
        max_diff, std::fabs(static_cast<double>(full.data[i]) -
                            static_cast<double>(piped.prompt_states.data[i])));
  CHECK(max_diff <= 1e-6);
}

TEST_CASE("positional encodings change the outputs when enabled") {
  PipelineConfig cfg = small_config();
  const auto params = kvslim::init_model(cfg);
  const Mat features = random_mat(cfg.video_tokens(), cfg.width, 41);
  const Mat prompt = random_mat(cfg.prompt_tokens, cfg.width, 42);

  const Mat without = kvslim::forward_full(features, prompt, params, cfg);
  cfg.positional = true;
  const Mat with = kvslim::forward_full(features, prompt, params, cfg);
  CHECK(without.data != with.data);
}

TEST_CASE("forward_recorded covers every video column") {
  const PipelineConfig cfg = small_config();
  const auto params = kvslim::init_model(cfg);
  const Mat features = random_mat(cfg.video_tokens(), cfg.width, 51);
  const Mat prompt = random_mat(cfg.prompt_tokens, cfg.width, 52);

  const auto recorded = kvslim::forward_recorded(features, prompt, params, cfg);
  REQUIRE(recorded.record.layers.size() == cfg.layers);
  for (const auto& block : recorded.record.layers) {
    CHECK(block.rows == cfg.prompt_tokens);
    CHECK(block.cols == cfg.video_tokens());
  }
  // The unrecorded and recorded reference passes agree exactly.
  const Mat full = kvslim::forward_full(features, prompt, params, cfg);
  CHECK(recorded.prompt_states.data == full.data);
}

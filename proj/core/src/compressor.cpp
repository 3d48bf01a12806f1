// Copyright (c) 2026 The kvslim authors
// SPDX-License-Identifier: Apache-2.0

#include "kvslim/compressor.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "kvslim/error.hpp"

namespace kvslim {

std::vector<std::vector<std::size_t>> compress_chunk_cache(
    LayerKVCache& cache, const SignificanceScores& scores,
    const std::vector<std::size_t>& keep_counts, std::size_t trailing_slots) {
  const std::size_t layers = cache.layer_count();
  const std::size_t chunk_len = scores.token_count();
  KVSLIM_ASSERT(scores.layer_count() == layers && keep_counts.size() == layers,
                "per-layer data mismatched against the cache");

  std::vector<std::vector<std::size_t>> kept(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    KVSLIM_ASSERT(keep_counts[l] <= chunk_len, "keep count ", keep_counts[l],
                  " exceeds chunk length ", chunk_len);
    KVSLIM_ASSERT(cache.length(l) >= chunk_len + trailing_slots,
                  "cache layer shorter than the chunk block");
    const std::size_t seg_begin = cache.length(l) - trailing_slots - chunk_len;
    kept[l] = arg_top_k(std::span<const double>(scores.per_layer[l]),
                        keep_counts[l]);
    cache.compact_segment(l, seg_begin, chunk_len, kept[l]);
  }
  return kept;
}

void drop_prompt(LayerKVCache& cache, std::size_t prompt_tokens, bool is_last) {
  if (is_last) return;
  for (std::size_t l = 0; l < cache.layer_count(); ++l)
    cache.remove_tail(l, prompt_tokens);
}

PipelineResult run_pipeline(const Mat& features, const Mat& prompt,
                            const ModelParams& params,
                            const PipelineConfig& cfg) {
  cfg.validate();
  KVSLIM_REQUIRE(features.rows == cfg.video_tokens(),
                 "features hold ", features.rows, " tokens, config expects ",
                 cfg.video_tokens());
  KVSLIM_REQUIRE(prompt.rows == cfg.prompt_tokens, "prompt holds ",
                 prompt.rows, " tokens, config expects ", cfg.prompt_tokens);
  KVSLIM_REQUIRE(params.layers.size() == cfg.layers,
                 "model layer count mismatch");

  const auto start = std::chrono::steady_clock::now();
  const std::size_t chunk_len = cfg.chunk_tokens();
  const std::size_t chunk_count = cfg.chunk_count();

  PipelineResult result;
  result.video_tokens = cfg.video_tokens();
  result.prompt_tokens = cfg.prompt_tokens;

  // Temporal pass: per-chunk frame distances set the ratio split.
  result.mean_distances.resize(chunk_count);
  std::vector<Mat> chunk_features(chunk_count);
  for (std::size_t i = 0; i < chunk_count; ++i) {
    chunk_features[i] = slice_rows(features, i * chunk_len, chunk_len);
    result.mean_distances[i] = frame_distances(chunk_features[i], cfg).mean;
  }
  result.temporal = allocate_temporal(result.mean_distances, cfg);

  LayerKVCache cache(cfg.layers, cfg.width);
  for (std::size_t i = 0; i < chunk_count; ++i) {
    const bool is_last = (i + 1 == chunk_count);
    PrefillResult prefill =
        prefill_chunk(cache, chunk_features[i], prompt, params, cfg, i);
    for (std::size_t l = 0; l < cfg.layers; ++l)
      KVSLIM_ASSERT(cache.length(l) >= chunk_len + cfg.prompt_tokens,
                    "prefill appended fewer slots than the block");

    const SignificanceScores scores = significance_scores(prefill.record);
    const double alpha = result.temporal.alphas[i];
    const long long slot_budget =
        std::llround(alpha * static_cast<double>(chunk_len) *
                     static_cast<double>(cfg.layers));

    ChunkPlan plan;
    plan.chunk = i;
    plan.alpha = alpha;
    plan.mean_distance = result.mean_distances[i];
    if (slot_budget == 0) {
      // A zero-signal chunk keeps nothing; no ranking needed.
      plan.weights.assign(cfg.layers, 1.0 / static_cast<double>(cfg.layers));
      plan.keep_counts.assign(cfg.layers, 0);
      plan.slot_budget = 0;
    } else {
      const std::vector<std::size_t> salient = count_salient(scores, alpha);
      const std::vector<double> weights = layer_weights(salient);
      const std::vector<double> stabilized =
          stabilize_weights(weights, cfg.min_layer_weight);
      LayerBudget budget =
          allocate_layer_budgets(stabilized, alpha, chunk_len);
      plan.weights = std::move(budget.weights);
      plan.keep_counts = std::move(budget.keep_counts);
      plan.slot_budget = budget.total;
    }

    drop_prompt(cache, cfg.prompt_tokens, is_last);
    plan.kept = compress_chunk_cache(cache, scores, plan.keep_counts,
                                     is_last ? cfg.prompt_tokens : 0);
    result.retained_slots += plan.slot_budget;
    result.chunks.push_back(std::move(plan));

    if (is_last) result.prompt_states = std::move(prefill.prompt_states);
  }

  result.cache_lengths.resize(cfg.layers);
  std::size_t length_sum = 0;
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    result.cache_lengths[l] = cache.length(l);
    length_sum += cache.length(l);

    // Provenance must stay in stream order inside every chunk's block.
    auto origins = cache.origins(l);
    for (std::size_t s = 1; s < origins.size(); ++s) {
      KVSLIM_ASSERT(origins[s].chunk >= origins[s - 1].chunk,
                    "retained slots out of chunk order");
      if (origins[s].chunk == origins[s - 1].chunk)
        KVSLIM_ASSERT(origins[s].index > origins[s - 1].index,
                      "retained slots out of stream order inside a chunk");
    }
  }

  // Retained video slots plus one prompt copy must average to the budget,
  // up to one rounding step per chunk.
  const double mean_length =
      static_cast<double>(length_sum) / static_cast<double>(cfg.layers);
  const double slack = static_cast<double>(cfg.layers) *
                       static_cast<double>(chunk_count) / 2.0;
  KVSLIM_ASSERT(std::fabs(mean_length - static_cast<double>(cfg.max_context)) <=
                    slack + 1e-9,
                "mean cache length ", mean_length, " drifted from budget ",
                cfg.max_context);

  result.wall_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  return result;
}

}  // namespace kvslim

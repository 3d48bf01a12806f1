// Copyright (c) 2026 The kvslim authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "kvslim/config.hpp"
#include "kvslim/layer_alloc.hpp"
#include "kvslim/model.hpp"
#include "kvslim/temporal.hpp"
#include "kvslim/tensor.hpp"

namespace kvslim {

/// What one chunk kept after eviction.
struct ChunkPlan {
  std::size_t chunk = 0;
  double alpha = 0.0;                           // chunk compression ratio
  double mean_distance = 0.0;                   // temporal signal it earned
  std::size_t slot_budget = 0;                  // sum of keep counts
  std::vector<double> weights;                  // stabilized layer weights
  std::vector<std::size_t> keep_counts;         // per layer
  std::vector<std::vector<std::size_t>> kept;   // ascending chunk-local indices
};

/// Evicts chunk tokens from every layer, keeping the keep_counts[l] highest
/// scoring indices in ascending order. The chunk block must occupy the
/// trailing_slots-offset tail of each layer (trailing_slots is the prompt
/// length when the prompt stays, 0 otherwise). Slots are compacted, never
/// masked. Returns the kept indices per layer.
std::vector<std::vector<std::size_t>> compress_chunk_cache(
    LayerKVCache& cache, const SignificanceScores& scores,
    const std::vector<std::size_t>& keep_counts, std::size_t trailing_slots);

/// Removes the prompt's cache tail after a non-final chunk. The prompt is
/// re-prefilled with the next chunk, so holding its stale copy would both
/// waste budget and shadow the fresh one. No-op when is_last is set.
void drop_prompt(LayerKVCache& cache, std::size_t prompt_tokens, bool is_last);

/// End-to-end result of a compression run.
struct PipelineResult {
  TemporalPlan temporal;
  std::vector<double> mean_distances;     // per chunk
  std::vector<ChunkPlan> chunks;
  std::vector<std::size_t> cache_lengths; // per layer, prompt included
  std::size_t retained_slots = 0;         // video slots kept across layers
  Mat prompt_states;                      // from the final chunk's prefill
  double wall_ms = 0.0;
  std::size_t video_tokens = 0;
  std::size_t prompt_tokens = 0;
};

/// Chunked prefill with adaptive eviction: measures frame distances, splits
/// the budget over chunks, prefills chunk by chunk, scores tokens with
/// prompt attention, drops stale prompt copies, and evicts down to the
/// per-layer keep counts. Every invariant breach throws InternalError.
PipelineResult run_pipeline(const Mat& features, const Mat& prompt,
                            const ModelParams& params,
                            const PipelineConfig& cfg);

}  // namespace kvslim

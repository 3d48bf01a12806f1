// Copyright (c) 2026 The kvslim authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "kvslim/config.hpp"
#include "kvslim/model.hpp"

namespace kvslim {

/// Prompt-accumulated attention per chunk token, one vector per layer.
struct SignificanceScores {
  std::vector<std::vector<double>> per_layer;

  std::size_t layer_count() const { return per_layer.size(); }
  std::size_t token_count() const {
    return per_layer.empty() ? 0 : per_layer.front().size();
  }
};

/// Head-mean attention summed over the prompt rows, one score per column.
/// Shared by the layer allocator and the redundancy profiler so both rank
/// tokens with identical arithmetic.
std::vector<double> accumulate_prompt_attention(const AttnBlock& block);

/// Reduces a prefill record to per-layer significance scores.
SignificanceScores significance_scores(const AttentionRecord& record);

/// Counts, per layer, the scores strictly above the K-th largest score of
/// all layers pooled together, with K = round(alpha * tokens * layers).
/// Requires 1 <= K <= layers * tokens.
std::vector<std::size_t> count_salient(const SignificanceScores& scores,
                                       double alpha);

/// Salient counts normalized to weights; an all-zero count vector yields the
/// uniform distribution.
std::vector<double> layer_weights(const std::vector<std::size_t>& salient);

/// Rebalances weights away from degenerate allocations: every layer keeps at
/// least `floor_weight`, proportions above the floor are preserved, and the
/// result still sums to 1. Requires floor_weight * layers < 1.
std::vector<double> stabilize_weights(const std::vector<double>& weights,
                                      double floor_weight);

/// Integer keep counts for one chunk.
struct LayerBudget {
  std::vector<double> weights;          // stabilized weights, sum 1
  std::vector<std::size_t> keep_counts; // per layer, each <= chunk tokens
  std::size_t total = 0;                // round(alpha * tokens * layers)
};

/// Turns stabilized weights into per-layer keep counts: real targets
/// proportional to the weights, capped at the chunk token count with
/// proportional redistribution, then largest-remainder rounding so the
/// counts sum to round(alpha * tokens * layers) exactly.
LayerBudget allocate_layer_budgets(const std::vector<double>& stabilized,
                                   double alpha, std::size_t chunk_tokens);

}  // namespace kvslim

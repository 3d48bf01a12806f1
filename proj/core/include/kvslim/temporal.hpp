// Copyright (c) 2026 The kvslim authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "kvslim/config.hpp"
#include "kvslim/tensor.hpp"

namespace kvslim {

/// Adjacent-frame feature distances of one chunk.
struct ChunkDistances {
  std::vector<double> per_pair;  // frames_per_chunk - 1 entries, each in [0, 2]
  double mean = 0.0;             // 0 for single-frame chunks
};

/// Token-wise cosine distance between consecutive frames. Frame t and t+1
/// are compared token by token; the pair distance is 1 minus the mean
/// similarity over the frame's tokens.
ChunkDistances frame_distances(const Mat& chunk_features,
                               const PipelineConfig& cfg);

/// Per-chunk compression ratios and the token budget they share.
struct TemporalPlan {
  std::vector<double> alphas;      // one ratio per chunk, each in [0, 1]
  std::size_t budget_tokens = 0;   // max_context - prompt_tokens
};

/// Splits the retention budget across chunks proportionally to their mean
/// frame distance. Ratios above 1 are clamped with the excess redistributed
/// proportionally among the rest; a near-zero distance total falls back to a
/// uniform split. The plan always conserves the budget:
/// sum(alpha_i * chunk_tokens) == budget_tokens.
TemporalPlan allocate_temporal(const std::vector<double>& chunk_mean_distances,
                               const PipelineConfig& cfg);

/// Shared proportional splitter: divides `total` across entries proportional
/// to `weights`, capping every entry at `cap` and redistributing overflow
/// among the uncapped rest. A zero-weight remainder that must still absorb
/// budget is filled uniformly. Result sums to `total` (requires
/// total <= cap * weights.size()).
std::vector<double> proportional_fill(const std::vector<double>& weights,
                                      double total, double cap);

}  // namespace kvslim

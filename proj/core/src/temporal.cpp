// Copyright (c) 2026 The kvslim authors
// SPDX-License-Identifier: Apache-2.0

#include "kvslim/temporal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kvslim/error.hpp"

namespace kvslim {

ChunkDistances frame_distances(const Mat& chunk_features,
                               const PipelineConfig& cfg) {
  const std::size_t per_frame = cfg.tokens_per_frame;
  KVSLIM_REQUIRE(chunk_features.rows == cfg.chunk_tokens(),
                 "chunk feature rows (", chunk_features.rows,
                 ") must equal frames_per_chunk * tokens_per_frame (",
                 cfg.chunk_tokens(), ")");
  ChunkDistances out;
  if (cfg.frames_per_chunk < 2) return out;

  out.per_pair.reserve(cfg.frames_per_chunk - 1);
  double total = 0.0;
  for (std::size_t t = 0; t + 1 < cfg.frames_per_chunk; ++t) {
    double sim_sum = 0.0;
    for (std::size_t j = 0; j < per_frame; ++j) {
      sim_sum += cosine_sim(chunk_features.row(t * per_frame + j),
                            chunk_features.row((t + 1) * per_frame + j));
    }
    const double dist = 1.0 - sim_sum / static_cast<double>(per_frame);
    out.per_pair.push_back(dist);
    total += dist;
  }
  out.mean = total / static_cast<double>(out.per_pair.size());
  return out;
}

std::vector<double> proportional_fill(const std::vector<double>& weights,
                                      double total, double cap) {
  const std::size_t n = weights.size();
  KVSLIM_REQUIRE(n > 0, "proportional_fill over an empty weight list");
  KVSLIM_REQUIRE(total >= 0.0, "proportional_fill with negative total");
  KVSLIM_REQUIRE(total <= cap * static_cast<double>(n) * (1.0 + 1e-12),
                 "budget ", total, " exceeds capacity ",
                 cap * static_cast<double>(n));
  for (double w : weights)
    KVSLIM_REQUIRE(w >= 0.0, "proportional_fill with negative weight");

  std::vector<double> out(n, 0.0);
  std::vector<bool> capped(n, false);
  double remaining = std::min(total, cap * static_cast<double>(n));
  std::size_t active = n;

  while (active > 0) {
    double weight_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (!capped[i]) weight_sum += weights[i];

    if (weight_sum < 1e-12) {
      // Only zero-weight entries remain but budget must be conserved; split
      // the remainder evenly. Feasible because total <= cap * n.
      const double share = remaining / static_cast<double>(active);
      for (std::size_t i = 0; i < n; ++i)
        if (!capped[i]) out[i] = share;
      return out;
    }

    bool clamped_any = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (capped[i]) continue;
      out[i] = remaining * weights[i] / weight_sum;
      if (out[i] > cap) {
        out[i] = cap;
        capped[i] = true;
        remaining -= cap;
        --active;
        clamped_any = true;
        // Restart the split over the remaining entries.
        break;
      }
    }
    if (!clamped_any) return out;
  }
  KVSLIM_ASSERT(remaining <= 1e-9, "proportional_fill left ", remaining,
                " unassigned after capping every entry");
  return out;
}

TemporalPlan allocate_temporal(const std::vector<double>& chunk_mean_distances,
                               const PipelineConfig& cfg) {
  cfg.validate();
  const std::size_t chunks = cfg.chunk_count();
  KVSLIM_REQUIRE(chunk_mean_distances.size() == chunks,
                 "expected one mean distance per chunk (", chunks, "), got ",
                 chunk_mean_distances.size());
  for (double d : chunk_mean_distances)
    KVSLIM_REQUIRE(d >= 0.0 && d <= 2.0 && std::isfinite(d),
                   "mean frame distance ", d, " outside [0, 2]");

  TemporalPlan plan;
  plan.budget_tokens = cfg.max_context - cfg.prompt_tokens;
  const double chunk_cap = static_cast<double>(cfg.chunk_tokens());

  // Near-zero total distance carries no signal; fall back to a uniform split.
  const double total_distance =
      std::accumulate(chunk_mean_distances.begin(), chunk_mean_distances.end(), 0.0);
  const std::vector<double> weights =
      total_distance < 1e-9 ? std::vector<double>(chunks, 1.0)
                            : chunk_mean_distances;

  const std::vector<double> tokens = proportional_fill(
      weights, static_cast<double>(plan.budget_tokens), chunk_cap);

  plan.alphas.resize(chunks);
  double assigned = 0.0;
  for (std::size_t i = 0; i < chunks; ++i) {
    plan.alphas[i] = std::clamp(tokens[i] / chunk_cap, 0.0, 1.0);
    assigned += tokens[i];
  }
  KVSLIM_ASSERT(std::fabs(assigned - static_cast<double>(plan.budget_tokens)) <
                    1e-6,
                "temporal plan assigns ", assigned, " tokens, budget is ",
                plan.budget_tokens);
  return plan;
}

}  // namespace kvslim

// Copyright (c) 2026 The kvslim authors
// SPDX-License-Identifier: Apache-2.0

#include "kvslim/layer_alloc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kvslim/error.hpp"
#include "kvslim/temporal.hpp"
#include "kvslim/tensor.hpp"

namespace kvslim {

std::vector<double> accumulate_prompt_attention(const AttnBlock& block) {
  std::vector<double> scores(block.cols, 0.0);
  const double head_norm = 1.0 / static_cast<double>(block.heads);
  for (std::size_t s = 0; s < block.rows; ++s) {
    for (std::size_t j = 0; j < block.cols; ++j) {
      double head_sum = 0.0;
      for (std::size_t a = 0; a < block.heads; ++a)
        head_sum += block.at(a, s, j);
      scores[j] += head_sum * head_norm;
    }
  }
  return scores;
}

SignificanceScores significance_scores(const AttentionRecord& record) {
  SignificanceScores scores;
  scores.per_layer.reserve(record.layers.size());
  for (const AttnBlock& block : record.layers)
    scores.per_layer.push_back(accumulate_prompt_attention(block));
  return scores;
}

std::vector<std::size_t> count_salient(const SignificanceScores& scores,
                                       double alpha) {
  const std::size_t layers = scores.layer_count();
  const std::size_t tokens = scores.token_count();
  KVSLIM_REQUIRE(layers >= 1 && tokens >= 1, "empty significance scores");
  const long long pool_rank = std::llround(
      alpha * static_cast<double>(tokens) * static_cast<double>(layers));
  KVSLIM_REQUIRE(pool_rank >= 1 &&
                     pool_rank <= static_cast<long long>(layers * tokens),
                 "pooled keep count ", pool_rank, " outside [1, ",
                 layers * tokens, "]");

  std::vector<double> pooled;
  pooled.reserve(layers * tokens);
  for (const auto& layer : scores.per_layer) {
    KVSLIM_REQUIRE(layer.size() == tokens, "ragged significance scores");
    pooled.insert(pooled.end(), layer.begin(), layer.end());
  }
  const double threshold =
      kth_largest(pooled, static_cast<std::size_t>(pool_rank));

  std::vector<std::size_t> salient(layers, 0);
  for (std::size_t l = 0; l < layers; ++l)
    salient[l] = static_cast<std::size_t>(
        std::count_if(scores.per_layer[l].begin(), scores.per_layer[l].end(),
                      [&](double v) { return v > threshold; }));
  return salient;
}

std::vector<double> layer_weights(const std::vector<std::size_t>& salient) {
  KVSLIM_REQUIRE(!salient.empty(), "layer_weights over zero layers");
  const double total = static_cast<double>(
      std::accumulate(salient.begin(), salient.end(), std::size_t{0}));
  std::vector<double> weights(salient.size());
  if (total == 0.0) {
    std::fill(weights.begin(), weights.end(),
              1.0 / static_cast<double>(salient.size()));
    return weights;
  }
  for (std::size_t l = 0; l < salient.size(); ++l)
    weights[l] = static_cast<double>(salient[l]) / total;
  return weights;
}

std::vector<double> stabilize_weights(const std::vector<double>& weights,
                                      double floor_weight) {
  const std::size_t layers = weights.size();
  KVSLIM_REQUIRE(layers >= 1, "stabilize_weights over zero layers");
  KVSLIM_REQUIRE(floor_weight >= 0.0 &&
                     floor_weight * static_cast<double>(layers) < 1.0,
                 "weight floor ", floor_weight, " infeasible for ", layers,
                 " layers");

  // When every weight already clears the floor the map is algebraically the
  // identity; returning the input directly keeps that fixpoint bit-exact.
  if (std::all_of(weights.begin(), weights.end(),
                  [&](double w) { return w >= floor_weight; }))
    return weights;

  std::vector<double> shifted(layers);
  double shifted_sum = 0.0;
  for (std::size_t l = 0; l < layers; ++l) {
    shifted[l] = std::max(weights[l] - floor_weight, 0.0);
    shifted_sum += shifted[l];
  }

  std::vector<double> out(layers);
  const double spread = 1.0 - floor_weight * static_cast<double>(layers);
  if (shifted_sum <= 0.0) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(layers));
    return out;
  }
  for (std::size_t l = 0; l < layers; ++l)
    out[l] = shifted[l] / shifted_sum * spread + floor_weight;
  return out;
}

LayerBudget allocate_layer_budgets(const std::vector<double>& stabilized,
                                   double alpha, std::size_t chunk_tokens) {
  const std::size_t layers = stabilized.size();
  KVSLIM_REQUIRE(layers >= 1, "budget allocation over zero layers");
  KVSLIM_REQUIRE(chunk_tokens >= 1, "budget allocation over zero tokens");
  KVSLIM_REQUIRE(alpha >= 0.0 && alpha <= 1.0, "compression ratio ", alpha,
                 " outside [0, 1]");
  double weight_sum = 0.0;
  for (double w : stabilized) {
    KVSLIM_REQUIRE(w >= 0.0, "negative layer weight");
    weight_sum += w;
  }
  KVSLIM_REQUIRE(std::fabs(weight_sum - 1.0) < 1e-9,
                 "stabilized weights sum to ", weight_sum, ", expected 1");

  LayerBudget budget;
  budget.weights = stabilized;
  const double real_total = alpha * static_cast<double>(chunk_tokens) *
                            static_cast<double>(layers);
  budget.total = static_cast<std::size_t>(std::llround(real_total));
  KVSLIM_ASSERT(budget.total <= layers * chunk_tokens,
                "slot budget exceeds cache capacity");

  // Real-valued targets proportional to the weights, capped per layer.
  const std::vector<double> targets = proportional_fill(
      stabilized, real_total, static_cast<double>(chunk_tokens));

  // Largest-remainder rounding to hit the integer total exactly. Capped
  // layers carry zero remainder, so leftovers always fit below the cap.
  budget.keep_counts.resize(layers);
  std::vector<double> remainder(layers);
  std::size_t floor_sum = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    budget.keep_counts[l] = static_cast<std::size_t>(std::floor(targets[l]));
    remainder[l] = targets[l] - std::floor(targets[l]);
    floor_sum += budget.keep_counts[l];
  }
  KVSLIM_ASSERT(floor_sum <= budget.total, "floored targets exceed the total");
  std::size_t leftover = budget.total - floor_sum;

  std::vector<std::size_t> order(layers);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
    return a < b;
  });
  for (std::size_t l : order) {
    if (leftover == 0) break;
    if (budget.keep_counts[l] >= chunk_tokens) continue;
    ++budget.keep_counts[l];
    --leftover;
  }
  KVSLIM_ASSERT(leftover == 0, "largest-remainder rounding left ", leftover,
                " unassigned slots");

  const std::size_t check_total =
      std::accumulate(budget.keep_counts.begin(), budget.keep_counts.end(),
                      std::size_t{0});
  KVSLIM_ASSERT(check_total == budget.total, "keep counts sum to ",
                check_total, ", budget is ", budget.total);
  const double mean_ratio =
      static_cast<double>(budget.total) /
      (static_cast<double>(layers) * static_cast<double>(chunk_tokens));
  KVSLIM_ASSERT(std::fabs(mean_ratio - alpha) <=
                    0.5 / static_cast<double>(chunk_tokens) + 1e-12,
                "mean layer ratio ", mean_ratio, " drifted from ", alpha);
  return budget;
}

}  // namespace kvslim

// Copyright (c) 2026 The kvslim authors
// SPDX-License-Identifier: Apache-2.0

#include "kvslim/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "kvslim/error.hpp"

namespace kvslim {

using nlohmann::ordered_json;

nlohmann::ordered_json compress_report(const PipelineConfig& cfg,
                                       const PipelineResult& result,
                                       bool include_timing) {
  ordered_json report;
  report["config"] = ordered_json::parse(config_to_json(cfg));

  double allocated = 0.0;
  for (double a : result.temporal.alphas)
    allocated += a * static_cast<double>(cfg.chunk_tokens());
  ordered_json temporal;
  temporal["budget_tokens"] = result.temporal.budget_tokens;
  temporal["mean_distances"] = result.mean_distances;
  temporal["alphas"] = result.temporal.alphas;
  temporal["budget_residual"] = std::fabs(
      allocated - static_cast<double>(result.temporal.budget_tokens));
  report["temporal"] = temporal;

  report["chunks"] = ordered_json::array();
  for (const ChunkPlan& plan : result.chunks) {
    ordered_json chunk;
    chunk["chunk"] = plan.chunk;
    chunk["mean_distance"] = plan.mean_distance;
    chunk["alpha"] = plan.alpha;
    chunk["slot_budget"] = plan.slot_budget;
    chunk["layer_weights"] = plan.weights;
    chunk["keep_counts"] = plan.keep_counts;
    chunk["kept"] = plan.kept;
    report["chunks"].push_back(std::move(chunk));
  }

  double mean_length = 0.0;
  for (std::size_t n : result.cache_lengths)
    mean_length += static_cast<double>(n);
  if (!result.cache_lengths.empty())
    mean_length /= static_cast<double>(result.cache_lengths.size());
  ordered_json cache;
  cache["per_layer_lengths"] = result.cache_lengths;
  cache["mean_length"] = mean_length;
  cache["max_context"] = cfg.max_context;
  cache["video_slots_retained"] = result.retained_slots;
  cache["video_tokens"] = result.video_tokens;
  cache["prompt_tokens"] = result.prompt_tokens;
  report["cache"] = cache;

  if (include_timing) report["timing"] = {{"wall_ms", result.wall_ms}};
  return report;
}

nlohmann::ordered_json analyze_report(const PipelineConfig& cfg,
                                      const HeavyHitterReport& profile,
                                      bool include_timing, double wall_ms) {
  ordered_json report;
  report["config"] = ordered_json::parse(config_to_json(cfg));
  report["window_frames"] = profile.window_frames;
  report["partial_tail"] = profile.partial_tail;
  report["window_count"] = profile.window_count();
  report["lambda"] = profile.lambda;
  report["window_means"] = profile.window_means;
  report["layer_means"] = profile.layer_means;

  double total = 0.0;
  std::size_t cells = 0;
  for (const auto& row : profile.lambda) {
    for (double x : row) total += x;
    cells += row.size();
  }
  report["overall_mean"] = cells == 0 ? 0.0 : total / static_cast<double>(cells);

  if (include_timing) report["timing"] = {{"wall_ms", wall_ms}};
  return report;
}

VerifySummary summarize_verification(
    const std::vector<oracle::IdentityTrial>& identities,
    const std::vector<oracle::BoundTrial>& bounds,
    const std::vector<oracle::GreedyTrial>& greedys) {
  VerifySummary s;
  s.identity_trials = identities.size();
  for (const auto& t : identities) {
    s.identity_max_diff = std::max(s.identity_max_diff, t.max_abs_diff);
    if (!t.ok) ++s.identity_failures;
  }

  s.bound_trials = bounds.size();
  s.bound_min_slack = bounds.empty()
                          ? 0.0
                          : std::numeric_limits<double>::infinity();
  for (const auto& t : bounds) {
    s.bound_min_slack = std::min(s.bound_min_slack, t.slack);
    if (!t.ok) ++s.bound_violations;
    if (!t.assumptions_hold) ++s.assumption_breaches;
  }

  s.greedy_trials = greedys.size();
  const double fraction = 1.0 - 1.0 / std::numbers::e;
  for (const auto& t : greedys) {
    if (!t.ratio_ok) ++s.gain_rule_failures;
    if (!t.topk_ok) ++s.topk_gain_failures;
    if (t.coincide) ++s.strategies_coincide;
    if (t.f_greedy >= t.f_opt * (1.0 - 1e-9)) ++s.greedy_exact;
    if (t.f_greedy >= std::pow(t.f_opt, fraction) - 1e-12)
      ++s.power_form_holds;
  }

  s.ok = s.identity_failures == 0 && s.bound_violations == 0 &&
         s.gain_rule_failures == 0;
  return s;
}

nlohmann::ordered_json verify_report(
    const VerifySummary& summary,
    const std::vector<oracle::BoundTrial>& bounds, std::uint64_t seed,
    bool include_timing, double wall_ms) {
  ordered_json report;
  report["seed"] = seed;

  report["masked_softmax_identity"] = {
      {"trials", summary.identity_trials},
      {"failures", summary.identity_failures},
      {"max_abs_diff", summary.identity_max_diff},
  };

  double max_loss = 0.0;
  for (const auto& t : bounds) max_loss = std::max(max_loss, t.loss);
  report["loss_bound"] = {
      {"trials", summary.bound_trials},
      {"violations", summary.bound_violations},
      {"assumption_breaches", summary.assumption_breaches},
      {"min_slack", summary.bound_min_slack},
      {"max_loss", max_loss},
  };

  report["near_optimality"] = {
      {"trials", summary.greedy_trials},
      {"gain_rule_failures", summary.gain_rule_failures},
      {"topk_gain_failures", summary.topk_gain_failures},
      {"greedy_exact", summary.greedy_exact},
      {"strategies_coincide", summary.strategies_coincide},
      {"power_form_holds", summary.power_form_holds},
  };

  report["ok"] = summary.ok;
  if (include_timing) report["timing"] = {{"wall_ms", wall_ms}};
  return report;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  KVSLIM_REQUIRE(out.is_open(), "cannot create ", path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  KVSLIM_REQUIRE(out.good(), "short write to ", path);
}

}  // namespace kvslim

// Copyright (c) 2026 The kvslim authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kvslim/analysis.hpp"
#include "kvslim/compressor.hpp"
#include "kvslim/config.hpp"
#include "kvslim/oracle.hpp"

namespace kvslim {

// JSON summary of one compression run: the configuration, the temporal
// split with its conservation residual, every chunk's layer allocation and
// keep decisions, and the final cache shape. Timing is attached only when
// include_timing is set so reports can be diffed across machines.
nlohmann::ordered_json compress_report(const PipelineConfig& cfg,
                                       const PipelineResult& result,
                                       bool include_timing);

// JSON summary of a redundancy profile.
nlohmann::ordered_json analyze_report(const PipelineConfig& cfg,
                                      const HeavyHitterReport& profile,
                                      bool include_timing, double wall_ms);

struct VerifySummary {
  std::size_t identity_trials = 0;
  std::size_t identity_failures = 0;
  double identity_max_diff = 0.0;
  std::size_t bound_trials = 0;
  std::size_t bound_violations = 0;
  std::size_t assumption_breaches = 0;
  double bound_min_slack = 0.0;
  std::size_t greedy_trials = 0;
  std::size_t gain_rule_failures = 0;   // seeded greedy below its guarantee
  std::size_t topk_gain_failures = 0;   // pooled top-k below the same line
  std::size_t greedy_exact = 0;         // seeded greedy matched the optimum
  std::size_t strategies_coincide = 0;  // both strategies chose the same sets
  std::size_t power_form_holds = 0;     // F_greedy >= F_opt^(1 - 1/e)
  bool ok = false;
};

VerifySummary summarize_verification(
    const std::vector<oracle::IdentityTrial>& identities,
    const std::vector<oracle::BoundTrial>& bounds,
    const std::vector<oracle::GreedyTrial>& greedys);

// JSON for the numerical verification suite. `ok` in the result mirrors
// VerifySummary::ok: no identity failures, no bound violations, and no
// seeded-greedy guarantee failures.
nlohmann::ordered_json verify_report(
    const VerifySummary& summary,
    const std::vector<oracle::BoundTrial>& bounds, std::uint64_t seed,
    bool include_timing, double wall_ms);

// Writes text to path, throwing InputError when the file cannot be written.
void write_text(const std::string& path, const std::string& content);

}  // namespace kvslim

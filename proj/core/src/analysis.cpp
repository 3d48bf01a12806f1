// Copyright (c) 2026 The kvslim authors
// SPDX-License-Identifier: Apache-2.0

#include "kvslim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "kvslim/error.hpp"
#include "kvslim/layer_alloc.hpp"

namespace kvslim {

double heavy_hitter_ratio(std::span<const double> scores, double fraction) {
  KVSLIM_REQUIRE(!scores.empty(), "heavy_hitter_ratio over an empty vector");
  KVSLIM_REQUIRE(fraction > 0.0 && fraction < 1.0,
                 "heavy-hitter fraction must lie in (0, 1)");
  double top = scores[0];
  for (double v : scores) {
    KVSLIM_REQUIRE(std::isfinite(v) && v >= 0.0,
                   "attention scores must be finite and non-negative");
    top = std::max(top, v);
  }
  const double threshold = fraction * top;
  const auto hits = std::count_if(scores.begin(), scores.end(),
                                  [&](double v) { return v > threshold; });
  return static_cast<double>(hits) / static_cast<double>(scores.size());
}

HeavyHitterReport redundancy_profile(const Mat& features, const Mat& prompt,
                                     const ModelParams& params,
                                     const PipelineConfig& cfg) {
  cfg.validate();
  KVSLIM_REQUIRE(features.rows == cfg.video_tokens(),
                 "features hold ", features.rows, " tokens, config expects ",
                 cfg.video_tokens());
  KVSLIM_REQUIRE(prompt.rows == cfg.prompt_tokens, "prompt row mismatch");

  HeavyHitterReport report;
  const long long window = std::llround(cfg.chunk_seconds * cfg.fps);
  KVSLIM_REQUIRE(window >= 1, "chunk_seconds * fps rounds below one frame");
  report.window_frames = static_cast<std::size_t>(window);
  report.partial_tail = (cfg.frames % report.window_frames) != 0;
  const std::size_t windows =
      (cfg.frames + report.window_frames - 1) / report.window_frames;

  const RecordedForward recorded =
      forward_recorded(features, prompt, params, cfg);

  report.lambda.assign(windows, std::vector<double>(cfg.layers, 0.0));
  report.window_means.assign(windows, 0.0);
  report.layer_means.assign(cfg.layers, 0.0);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const std::vector<double> scores =
        accumulate_prompt_attention(recorded.record.layers[l]);
    for (std::size_t t = 0; t < windows; ++t) {
      const std::size_t first_frame = t * report.window_frames;
      const std::size_t last_frame =
          std::min(cfg.frames, first_frame + report.window_frames);
      const std::size_t begin = first_frame * cfg.tokens_per_frame;
      const std::size_t count = (last_frame - first_frame) * cfg.tokens_per_frame;
      report.lambda[t][l] = heavy_hitter_ratio(
          std::span<const double>(scores).subspan(begin, count),
          cfg.heavy_fraction);
    }
  }
  for (std::size_t t = 0; t < windows; ++t) {
    double sum = 0.0;
    for (std::size_t l = 0; l < cfg.layers; ++l) sum += report.lambda[t][l];
    report.window_means[t] = sum / static_cast<double>(cfg.layers);
  }
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    double sum = 0.0;
    for (std::size_t t = 0; t < windows; ++t) sum += report.lambda[t][l];
    report.layer_means[l] = sum / static_cast<double>(windows);
  }
  return report;
}

std::string heatmap_csv(const HeavyHitterReport& report) {
  std::string out = "chunk,layer,lambda\n";
  char line[96];
  for (std::size_t t = 0; t < report.window_count(); ++t) {
    for (std::size_t l = 0; l < report.layer_count(); ++l) {
      std::snprintf(line, sizeof(line), "%zu,%zu,%.6f\n", t, l,
                    report.lambda[t][l]);
      out += line;
    }
  }
  return out;
}

void write_heatmap_csv(const HeavyHitterReport& report,
                       const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  KVSLIM_REQUIRE(out.good(), "cannot open '", path, "' for writing");
  const std::string text = heatmap_csv(report);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  KVSLIM_REQUIRE(out.good(), "failed writing '", path, "'");
}

}  // namespace kvslim

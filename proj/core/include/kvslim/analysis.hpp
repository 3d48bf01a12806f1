// Copyright (c) 2026 The kvslim authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kvslim/config.hpp"
#include "kvslim/model.hpp"
#include "kvslim/tensor.hpp"

namespace kvslim {

/// Fraction of entries strictly above `fraction` times the maximum entry.
/// An all-zero vector has no heavy hitters at all.
double heavy_hitter_ratio(std::span<const double> scores, double fraction);

/// Heavy-hitter ratios per (time window, layer).
struct HeavyHitterReport {
  std::size_t window_frames = 0;        // frames per analysis window
  bool partial_tail = false;            // last window shorter than the rest
  std::vector<std::vector<double>> lambda;  // windows x layers
  std::vector<double> window_means;     // mean over layers, per window
  std::vector<double> layer_means;      // mean over windows, per layer

  std::size_t window_count() const { return lambda.size(); }
  std::size_t layer_count() const {
    return lambda.empty() ? 0 : lambda.front().size();
  }
};

/// Profiles attention redundancy over the uncompressed pass: prompt
/// attention is accumulated over every video column with whole-sequence
/// softmax denominators, then sliced into fps * chunk_seconds frame windows
/// and scored per layer with heavy_hitter_ratio.
HeavyHitterReport redundancy_profile(const Mat& features, const Mat& prompt,
                                     const ModelParams& params,
                                     const PipelineConfig& cfg);

/// Renders the report as CSV: header "chunk,layer,lambda", one row per
/// (window, layer), lambda in fixed 6-decimal notation.
std::string heatmap_csv(const HeavyHitterReport& report);

/// Writes heatmap_csv to a file.
void write_heatmap_csv(const HeavyHitterReport& report,
                       const std::string& path);

}  // namespace kvslim

// Copyright (c) 2026 The kvslim authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace kvslim {

/// Static description of one compression run: video geometry, model shape,
/// cache budget, and the thresholds the allocators use.
struct PipelineConfig {
  std::size_t frames = 0;            // total video frames
  std::size_t tokens_per_frame = 0;  // visual tokens per frame
  std::size_t frames_per_chunk = 0;  // prefill chunk length, must divide frames
  std::size_t prompt_tokens = 0;     // text prompt length
  std::size_t layers = 0;            // decoder layers
  std::size_t heads = 0;             // attention heads, must divide width
  std::size_t width = 0;             // hidden width
  std::size_t max_context = 0;       // cache budget per layer, prompt included

  double heavy_fraction = 0.01;   // heavy-hitter threshold, fraction of max
  double min_layer_weight = 0.01; // floor for stabilized layer weights
  double fps = 1.0;               // frames per second of the source video
  double chunk_seconds = 10.0;    // profiling window length in seconds
  std::uint64_t seed = 0;
  bool positional = false;        // additive sinusoidal position encodings

  std::size_t chunk_count() const { return frames / frames_per_chunk; }
  std::size_t chunk_tokens() const { return frames_per_chunk * tokens_per_frame; }
  std::size_t video_tokens() const { return frames * tokens_per_frame; }

  /// Throws InputError unless every structural constraint holds.
  void validate() const;
};

/// Parses a config from JSON text. Unknown keys are rejected; the parsed
/// config is validated before being returned.
PipelineConfig parse_config(const std::string& json_text);

/// Reads and parses a JSON config file.
PipelineConfig load_config(const std::string& path);

/// Serializes a config back to JSON (the exact form echoed in reports).
std::string config_to_json(const PipelineConfig& cfg);

}  // namespace kvslim

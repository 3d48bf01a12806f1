// Copyright (c) 2026 The kvslim authors
// SPDX-License-Identifier: Apache-2.0

#include "kvslim/synthetic.hpp"

#include "kvslim/error.hpp"
#include "kvslim/rng.hpp"

namespace kvslim {

namespace {

// Stream salts keep the feature, prompt, and model draws independent even
// though they all derive from the one configured seed.
constexpr std::uint64_t kFeatureSalt = 0x66656174;
constexpr std::uint64_t kPromptSalt = 0x70726f6d;

}  // namespace

Mat synthesize_features(const PipelineConfig& cfg, std::size_t scenes,
                        double noise) {
  KVSLIM_REQUIRE(scenes >= 1, "need at least one scene");
  KVSLIM_REQUIRE(scenes <= cfg.frames, "more scenes than frames");
  KVSLIM_REQUIRE(noise >= 0.0, "noise must be non-negative");

  Rng rng(mix_seed(cfg.seed, kFeatureSalt));
  Mat anchors(scenes * cfg.tokens_per_frame, cfg.width);
  for (auto& x : anchors.data) x = static_cast<float>(rng.normal());

  Mat features(cfg.video_tokens(), cfg.width);
  for (std::size_t f = 0; f < cfg.frames; ++f) {
    const std::size_t scene = f * scenes / cfg.frames;
    for (std::size_t j = 0; j < cfg.tokens_per_frame; ++j) {
      const auto anchor = anchors.row(scene * cfg.tokens_per_frame + j);
      auto token = features.row(f * cfg.tokens_per_frame + j);
      for (std::size_t c = 0; c < cfg.width; ++c)
        token[c] = anchor[c] + static_cast<float>(noise * rng.normal());
    }
  }
  return features;
}

Mat synthesize_prompt(const PipelineConfig& cfg) {
  Rng rng(mix_seed(cfg.seed, kPromptSalt));
  Mat prompt(cfg.prompt_tokens, cfg.width);
  for (auto& x : prompt.data) x = static_cast<float>(rng.normal());
  return prompt;
}

}  // namespace kvslim

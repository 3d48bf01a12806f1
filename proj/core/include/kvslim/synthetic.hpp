// Copyright (c) 2026 The kvslim authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "kvslim/config.hpp"
#include "kvslim/tensor.hpp"

namespace kvslim {

// Synthetic video features shaped [frames * tokens_per_frame, width].
//
// Frames are split into `scenes` contiguous runs. Every scene draws one
// anchor vector per token slot; each frame's tokens are their scene anchors
// plus `noise` times unit Gaussian jitter. Frames inside a scene therefore
// stay close to each other while scene cuts produce large adjacent-frame
// distances, which is the structure the temporal allocator keys on.
Mat synthesize_features(const PipelineConfig& cfg, std::size_t scenes,
                        double noise);

// Synthetic instruction tokens shaped [prompt_tokens, width].
Mat synthesize_prompt(const PipelineConfig& cfg);

}  // namespace kvslim

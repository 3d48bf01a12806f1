// Copyright (c) 2026 The kvslim authors
// SPDX-License-Identifier: Apache-2.0

#include <string>

#include "doctest.h"
#include "kvslim/config.hpp"
#include "kvslim/error.hpp"

using kvslim::parse_config;
using kvslim::PipelineConfig;

namespace {

const char* kValid = R"({
  "frames": 8,
  "tokens_per_frame": 2,
  "frames_per_chunk": 4,
  "prompt_tokens": 4,
  "layers": 2,
  "heads": 2,
  "width": 8,
  "max_context": 12,
  "seed": 9
})";

}  // namespace

TEST_CASE("a valid config parses with defaults applied") {
  const PipelineConfig cfg = parse_config(kValid);
  CHECK(cfg.frames == 8);
  CHECK(cfg.tokens_per_frame == 2);
  CHECK(cfg.prompt_tokens == 4);
  CHECK(cfg.max_context == 12);
  CHECK(cfg.seed == 9);
  CHECK(cfg.heavy_fraction == 0.01);
  CHECK(cfg.min_layer_weight == 0.01);
  CHECK(cfg.fps == 1.0);
  CHECK(cfg.chunk_seconds == 10.0);
  CHECK_FALSE(cfg.positional);

  CHECK(cfg.video_tokens() == 16);
  CHECK(cfg.chunk_tokens() == 8);
  CHECK(cfg.chunk_count() == 2);
}

TEST_CASE("config round trips through its JSON serialization") {
  PipelineConfig cfg = parse_config(kValid);
  cfg.heavy_fraction = 0.05;
  cfg.positional = true;
  const PipelineConfig back = parse_config(kvslim::config_to_json(cfg));
  CHECK(back.frames == cfg.frames);
  CHECK(back.tokens_per_frame == cfg.tokens_per_frame);
  CHECK(back.frames_per_chunk == cfg.frames_per_chunk);
  CHECK(back.prompt_tokens == cfg.prompt_tokens);
  CHECK(back.layers == cfg.layers);
  CHECK(back.heads == cfg.heads);
  CHECK(back.width == cfg.width);
  CHECK(back.max_context == cfg.max_context);
  CHECK(back.heavy_fraction == cfg.heavy_fraction);
  CHECK(back.min_layer_weight == cfg.min_layer_weight);
  CHECK(back.fps == cfg.fps);
  CHECK(back.chunk_seconds == cfg.chunk_seconds);
  CHECK(back.seed == cfg.seed);
  CHECK(back.positional == cfg.positional);
}

TEST_CASE("unknown and mistyped fields are rejected") {
  CHECK_THROWS_AS((void)parse_config(R"({"frames": 8, "typo_field": 1})"),
                  kvslim::InputError);
  CHECK_THROWS_AS((void)parse_config("not json at all"), kvslim::InputError);
  CHECK_THROWS_AS((void)parse_config("[1,2,3]"), kvslim::InputError);

  std::string mistyped = kValid;
  mistyped.replace(mistyped.find("\"frames\": 8"), 11, "\"frames\": \"x\"");
  CHECK_THROWS_AS((void)parse_config(mistyped), kvslim::InputError);
}

TEST_CASE("structural invariants are enforced") {
  auto with = [](const char* key, const char* value) {
    std::string text = kValid;
    const std::string needle = std::string("\"") + key + "\"";
    const std::size_t at = text.find(needle);
    const std::size_t colon = text.find(':', at);
    const std::size_t end = text.find_first_of(",}", colon);
    text.replace(colon + 1, end - colon - 1, value);
    return text;
  };

  // chunk size must divide the frame count
  CHECK_THROWS_AS((void)parse_config(with("frames_per_chunk", "3")),
                  kvslim::InputError);
  // heads must divide width
  CHECK_THROWS_AS((void)parse_config(with("heads", "3")), kvslim::InputError);
  // cache must exceed the prompt
  CHECK_THROWS_AS((void)parse_config(with("max_context", "4")),
                  kvslim::InputError);
  // cache cannot exceed prompt + video
  CHECK_THROWS_AS((void)parse_config(with("max_context", "21")),
                  kvslim::InputError);
  CHECK_NOTHROW((void)parse_config(with("max_context", "20")));
  // heavy fraction in (0, 1)
  CHECK_THROWS_AS((void)parse_config(with("heavy_fraction", "0.0")),
                  kvslim::InputError);
  CHECK_THROWS_AS((void)parse_config(with("heavy_fraction", "1.0")),
                  kvslim::InputError);
  // layer weight floor times layers below 1
  CHECK_THROWS_AS((void)parse_config(with("min_layer_weight", "0.5")),
                  kvslim::InputError);
  // zero-size dimensions
  CHECK_THROWS_AS((void)parse_config(with("layers", "0")),
                  kvslim::InputError);
  CHECK_THROWS_AS((void)parse_config(with("tokens_per_frame", "0")),
                  kvslim::InputError);
  CHECK_THROWS_AS((void)parse_config(with("fps", "0.0")),
                  kvslim::InputError);
}

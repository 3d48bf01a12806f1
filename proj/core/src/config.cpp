// Copyright (c) 2026 The kvslim authors
// SPDX-License-Identifier: Apache-2.0

#include "kvslim/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "kvslim/error.hpp"

namespace kvslim {

void PipelineConfig::validate() const {
  KVSLIM_REQUIRE(frames_per_chunk >= 1, "frames_per_chunk must be positive");
  KVSLIM_REQUIRE(frames % frames_per_chunk == 0, "frames_per_chunk (",
                 frames_per_chunk, ") must divide frames (", frames, ")");
  KVSLIM_REQUIRE(tokens_per_frame >= 1, "tokens_per_frame must be positive");
  KVSLIM_REQUIRE(layers >= 1, "layers must be positive");
  KVSLIM_REQUIRE(heads >= 1, "heads must be positive");
  KVSLIM_REQUIRE(width >= 1, "width must be positive");
  KVSLIM_REQUIRE(width % heads == 0, "heads (", heads, ") must divide width (",
                 width, ")");
  KVSLIM_REQUIRE(prompt_tokens >= 1, "prompt_tokens must be positive");
  KVSLIM_REQUIRE(max_context > prompt_tokens,
                 "max_context (", max_context,
                 ") must exceed prompt_tokens (", prompt_tokens, ")");
  KVSLIM_REQUIRE(max_context <= prompt_tokens + video_tokens(),
                 "max_context (", max_context, ") exceeds prompt plus video (",
                 prompt_tokens + video_tokens(), ")");
  KVSLIM_REQUIRE(heavy_fraction > 0.0 && heavy_fraction < 1.0,
                 "heavy_fraction must lie in (0, 1)");
  KVSLIM_REQUIRE(min_layer_weight >= 0.0 &&
                     min_layer_weight * static_cast<double>(layers) < 1.0,
                 "min_layer_weight times layers must stay below 1");
  KVSLIM_REQUIRE(fps > 0.0, "fps must be positive");
  KVSLIM_REQUIRE(chunk_seconds > 0.0, "chunk_seconds must be positive");
}

namespace {

using nlohmann::json;

double get_number(const json& j, const char* key) {
  KVSLIM_REQUIRE(j.at(key).is_number(), "config field '", key,
                 "' must be a number");
  return j.at(key).get<double>();
}

std::size_t get_count(const json& j, const char* key) {
  const double v = get_number(j, key);
  KVSLIM_REQUIRE(v >= 0 && v == static_cast<double>(static_cast<std::size_t>(v)),
                 "config field '", key, "' must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

}  // namespace

PipelineConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("config is not valid JSON: ") + e.what());
  }
  KVSLIM_REQUIRE(j.is_object(), "config root must be a JSON object");

  static const std::set<std::string> known = {
      "frames",        "tokens_per_frame", "frames_per_chunk",
      "prompt_tokens", "layers",           "heads",
      "width",         "max_context",      "heavy_fraction",
      "min_layer_weight", "fps",           "chunk_seconds",
      "seed",          "positional"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    KVSLIM_REQUIRE(known.count(key) != 0, "unknown config field '", key, "'");
  }

  PipelineConfig cfg;
  cfg.frames = get_count(j, "frames");
  cfg.tokens_per_frame = get_count(j, "tokens_per_frame");
  cfg.frames_per_chunk = get_count(j, "frames_per_chunk");
  cfg.prompt_tokens = get_count(j, "prompt_tokens");
  cfg.layers = get_count(j, "layers");
  cfg.heads = get_count(j, "heads");
  cfg.width = get_count(j, "width");
  cfg.max_context = get_count(j, "max_context");
  if (j.contains("heavy_fraction")) cfg.heavy_fraction = get_number(j, "heavy_fraction");
  if (j.contains("min_layer_weight"))
    cfg.min_layer_weight = get_number(j, "min_layer_weight");
  if (j.contains("fps")) cfg.fps = get_number(j, "fps");
  if (j.contains("chunk_seconds")) cfg.chunk_seconds = get_number(j, "chunk_seconds");
  if (j.contains("seed")) {
    KVSLIM_REQUIRE(j.at("seed").is_number_unsigned() || j.at("seed").is_number_integer(),
                   "config field 'seed' must be an integer");
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("positional")) {
    KVSLIM_REQUIRE(j.at("positional").is_boolean(),
                   "config field 'positional' must be a boolean");
    cfg.positional = j.at("positional").get<bool>();
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  KVSLIM_REQUIRE(in.good(), "cannot open config file '", path, "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string config_to_json(const PipelineConfig& cfg) {
  nlohmann::ordered_json j;
  j["frames"] = cfg.frames;
  j["tokens_per_frame"] = cfg.tokens_per_frame;
  j["frames_per_chunk"] = cfg.frames_per_chunk;
  j["prompt_tokens"] = cfg.prompt_tokens;
  j["layers"] = cfg.layers;
  j["heads"] = cfg.heads;
  j["width"] = cfg.width;
  j["max_context"] = cfg.max_context;
  j["heavy_fraction"] = cfg.heavy_fraction;
  j["min_layer_weight"] = cfg.min_layer_weight;
  j["fps"] = cfg.fps;
  j["chunk_seconds"] = cfg.chunk_seconds;
  j["seed"] = cfg.seed;
  j["positional"] = cfg.positional;
  return j.dump(2);
}

}  // namespace kvslim

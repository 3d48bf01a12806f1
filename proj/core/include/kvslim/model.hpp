// Copyright (c) 2026 The kvslim authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "kvslim/config.hpp"
#include "kvslim/tensor.hpp"

namespace kvslim {

/// Projection weights of one attention layer.
struct LayerWeights {
  Mat w_query;
  Mat w_key;
  Mat w_value;
  Mat w_out;
};

/// The toy decoder stack: attention-only layers, no MLP blocks, no residual
/// connections, no normalization. Layer output feeds the next layer's
/// projections directly. This keeps compression effects isolated from every
/// other architectural confounder.
struct ModelParams {
  std::size_t width = 0;
  std::vector<LayerWeights> layers;
};

/// Draws all projection matrices from the seeded stream, scaled by
/// 1/sqrt(width). Fill order is fixed (layer-major; query, key, value, out;
/// row-major entries) and bit-reproducible for a given seed.
ModelParams init_model(const PipelineConfig& cfg);

/// Where a retained cache slot came from.
struct SlotOrigin {
  std::size_t chunk = 0;  // prefill chunk index
  std::size_t index = 0;  // position inside that chunk's block
};

/// Per-layer key/value cache with provenance. Layers evolve independently:
/// after eviction their lengths usually differ.
class LayerKVCache {
 public:
  LayerKVCache() = default;
  LayerKVCache(std::size_t layers, std::size_t width);

  std::size_t layer_count() const { return m_keys.size(); }
  std::size_t width() const { return m_width; }
  std::size_t length(std::size_t layer) const { return m_keys[layer].rows; }

  const Mat& keys(std::size_t layer) const { return m_keys[layer]; }
  const Mat& values(std::size_t layer) const { return m_values[layer]; }
  std::span<const SlotOrigin> origins(std::size_t layer) const {
    return m_origins[layer];
  }

  /// Appends one block of key/value rows plus their provenance.
  void append(std::size_t layer, const Mat& key_rows, const Mat& value_rows,
              std::span<const SlotOrigin> origins);

  /// Removes the trailing count slots.
  void remove_tail(std::size_t layer, std::size_t count);

  /// Replaces the segment [seg_begin, seg_begin + seg_len) with the rows at
  /// seg_begin + i for each i in keep (ascending chunk-local indices).
  /// Slots after the segment are preserved.
  void compact_segment(std::size_t layer, std::size_t seg_begin,
                       std::size_t seg_len,
                       std::span<const std::size_t> keep);

 private:
  std::size_t m_width = 0;
  std::vector<Mat> m_keys;
  std::vector<Mat> m_values;
  std::vector<std::vector<SlotOrigin>> m_origins;
};

/// Softmax weights of the prompt rows over one block of key columns,
/// per head: heads x prompt_rows x cols, row-major.
struct AttnBlock {
  std::size_t heads = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> w;

  float at(std::size_t head, std::size_t row, std::size_t col) const {
    return w[(head * rows + row) * cols + col];
  }
};

/// Attention captured during one prefill step, one block per layer. Columns
/// cover the chunk's key positions only; denominators still span everything
/// the query could see, so a stored row sums to at most 1.
struct AttentionRecord {
  std::vector<AttnBlock> layers;
};

struct PrefillResult {
  AttentionRecord record;
  Mat prompt_states;  // final-layer hidden states of the prompt rows
};

/// Runs one chunked-prefill step: the block chunk||prompt attends to the
/// existing cache (fully visible) and to itself causally; the block's keys
/// and values are appended to every layer. Returns the prompt attention
/// record over the chunk's columns and the final prompt hidden states.
PrefillResult prefill_chunk(LayerKVCache& cache, const Mat& chunk,
                            const Mat& prompt, const ModelParams& params,
                            const PipelineConfig& cfg, std::size_t chunk_index);

/// Reference pass: one causal block over features||prompt with an empty
/// cache and no compression. Returns final-layer prompt states.
Mat forward_full(const Mat& features, const Mat& prompt,
                 const ModelParams& params, const PipelineConfig& cfg);

struct RecordedForward {
  Mat prompt_states;
  AttentionRecord record;  // prompt rows over every video column, per layer
};

/// forward_full plus the full prompt-over-video attention record, the input
/// the redundancy profiler reduces.
RecordedForward forward_recorded(const Mat& features, const Mat& prompt,
                                 const ModelParams& params,
                                 const PipelineConfig& cfg);

}  // namespace kvslim

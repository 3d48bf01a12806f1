// Copyright (c) 2026 The kvslim authors
// SPDX-License-Identifier: Apache-2.0

#include "kvslim/model.hpp"

#include <cmath>
#include <vector>

#include "kvslim/error.hpp"
#include "kvslim/parallel.hpp"
#include "kvslim/rng.hpp"

namespace kvslim {

ModelParams init_model(const PipelineConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.width));
  ModelParams params;
  params.width = cfg.width;
  params.layers.resize(cfg.layers);
  auto fill = [&](Mat& m) {
    m = Mat(cfg.width, cfg.width);
    for (auto& x : m.data) x = static_cast<float>(rng.normal() * scale);
  };
  for (auto& layer : params.layers) {
    fill(layer.w_query);
    fill(layer.w_key);
    fill(layer.w_value);
    fill(layer.w_out);
  }
  return params;
}

LayerKVCache::LayerKVCache(std::size_t layers, std::size_t width)
    : m_width(width),
      m_keys(layers, Mat(0, width)),
      m_values(layers, Mat(0, width)),
      m_origins(layers) {}

void LayerKVCache::append(std::size_t layer, const Mat& key_rows,
                          const Mat& value_rows,
                          std::span<const SlotOrigin> origins) {
  KVSLIM_ASSERT(key_rows.rows == value_rows.rows &&
                    key_rows.rows == origins.size(),
                "cache append with mismatched row counts");
  KVSLIM_ASSERT(key_rows.cols == m_width && value_rows.cols == m_width,
                "cache append with wrong width");
  m_keys[layer] = vstack(m_keys[layer], key_rows);
  m_values[layer] = vstack(m_values[layer], value_rows);
  auto& dst = m_origins[layer];
  dst.insert(dst.end(), origins.begin(), origins.end());
}

void LayerKVCache::remove_tail(std::size_t layer, std::size_t count) {
  KVSLIM_ASSERT(count <= length(layer), "cache tail removal of ", count,
                " slots from length ", length(layer));
  const std::size_t keep = length(layer) - count;
  m_keys[layer] = slice_rows(m_keys[layer], 0, keep);
  m_values[layer] = slice_rows(m_values[layer], 0, keep);
  m_origins[layer].resize(keep);
}

void LayerKVCache::compact_segment(std::size_t layer, std::size_t seg_begin,
                                   std::size_t seg_len,
                                   std::span<const std::size_t> keep) {
  KVSLIM_ASSERT(seg_begin + seg_len <= length(layer),
                "cache segment out of range");
  for (std::size_t i = 0; i < keep.size(); ++i) {
    KVSLIM_ASSERT(keep[i] < seg_len, "kept index ", keep[i],
                  " outside segment of length ", seg_len);
    KVSLIM_ASSERT(i == 0 || keep[i] > keep[i - 1],
                  "kept indices must be strictly increasing");
  }
  const std::size_t old_len = length(layer);
  const std::size_t tail = old_len - seg_begin - seg_len;
  const std::size_t new_len = seg_begin + keep.size() + tail;
  Mat new_keys(new_len, m_width);
  Mat new_values(new_len, m_width);
  std::vector<SlotOrigin> new_origins;
  new_origins.reserve(new_len);

  auto copy_row = [&](std::size_t dst, std::size_t src) {
    std::copy(m_keys[layer].row(src).begin(), m_keys[layer].row(src).end(),
              new_keys.row(dst).begin());
    std::copy(m_values[layer].row(src).begin(), m_values[layer].row(src).end(),
              new_values.row(dst).begin());
    new_origins.push_back(m_origins[layer][src]);
  };
  std::size_t dst = 0;
  for (std::size_t i = 0; i < seg_begin; ++i) copy_row(dst++, i);
  for (std::size_t k : keep) copy_row(dst++, seg_begin + k);
  for (std::size_t i = 0; i < tail; ++i) copy_row(dst++, seg_begin + seg_len + i);
  KVSLIM_ASSERT(dst == new_len, "cache compaction length mismatch");

  m_keys[layer] = std::move(new_keys);
  m_values[layer] = std::move(new_values);
  m_origins[layer] = std::move(new_origins);
}

namespace {

// Appends the standard sinusoidal encoding of absolute position pos.
void add_position(std::span<float> row, std::size_t pos) {
  const double p = static_cast<double>(pos);
  const std::size_t width = row.size();
  for (std::size_t i = 0; i + 1 < width; i += 2) {
    const double freq =
        std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(width));
    row[i] += static_cast<float>(std::sin(p * freq));
    row[i + 1] += static_cast<float>(std::cos(p * freq));
  }
}

// Runs the whole stack over one block sitting on top of `cache`. The block
// attends to every existing cache slot and to itself causally; its keys and
// values are appended to each layer. When `record` is non-null the softmax
// weights of the trailing `record_rows` block rows over the first
// `record_cols` appended columns are captured per layer.
Mat run_block(LayerKVCache& cache, const Mat& block_in, const ModelParams& params,
              const PipelineConfig& cfg, std::size_t chunk_index,
              AttentionRecord* record, std::size_t record_rows,
              std::size_t record_cols) {
  const std::size_t rows = block_in.rows;
  const std::size_t width = params.width;
  const std::size_t heads = cfg.heads;
  const std::size_t head_width = width / heads;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(head_width));
  KVSLIM_ASSERT(record == nullptr ||
                    (record_rows <= rows && record_cols <= rows),
                "attention record shape exceeds block");

  std::vector<SlotOrigin> origins(rows);
  for (std::size_t i = 0; i < rows; ++i) origins[i] = {chunk_index, i};

  if (record) record->layers.resize(params.layers.size());

  Mat x = block_in;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const LayerWeights& w = params.layers[l];
    const std::size_t prev_len = cache.length(l);

    const Mat q = matmul(x, w.w_query);
    cache.append(l, matmul(x, w.w_key), matmul(x, w.w_value), origins);
    const Mat& keys = cache.keys(l);
    const Mat& values = cache.values(l);

    AttnBlock* rec = nullptr;
    if (record) {
      rec = &record->layers[l];
      rec->heads = heads;
      rec->rows = record_rows;
      rec->cols = record_cols;
      rec->w.assign(heads * record_rows * record_cols, 0.0f);
    }

    Mat attn_out(rows, width);
    parallel_for(rows, [&](std::size_t i) {
      const std::size_t visible = prev_len + i + 1;
      std::vector<double> weight(visible);
      for (std::size_t a = 0; a < heads; ++a) {
        const std::size_t base = a * head_width;
        for (std::size_t t = 0; t < visible; ++t) {
          double acc = 0.0;
          for (std::size_t c = 0; c < head_width; ++c)
            acc += static_cast<double>(q.at(i, base + c)) * keys.at(t, base + c);
          weight[t] = acc * inv_scale;
        }
        softmax_inplace(weight);
        for (std::size_t c = 0; c < head_width; ++c) {
          double acc = 0.0;
          for (std::size_t t = 0; t < visible; ++t)
            acc += weight[t] * values.at(t, base + c);
          attn_out.at(i, base + c) = static_cast<float>(acc);
        }
        if (rec && i + record_rows >= rows) {
          const std::size_t r = i - (rows - record_rows);
          float* dst = rec->w.data() + (a * record_rows + r) * record_cols;
          for (std::size_t j = 0; j < record_cols; ++j)
            dst[j] = static_cast<float>(weight[prev_len + j]);
        }
      }
    });

    x = matmul(attn_out, w.w_out);
  }
  return x;
}

Mat with_positions(const Mat& video, const Mat& prompt,
                   const PipelineConfig& cfg, std::size_t video_begin) {
  Mat block = vstack(video, prompt);
  if (!cfg.positional) return block;
  // Positions are absolute token indices of the uncompressed stream; the
  // prompt always sits after the full video, whichever chunk carries it.
  for (std::size_t i = 0; i < video.rows; ++i)
    add_position(block.row(i), video_begin + i);
  for (std::size_t s = 0; s < prompt.rows; ++s)
    add_position(block.row(video.rows + s), cfg.video_tokens() + s);
  return block;
}

}  // namespace

PrefillResult prefill_chunk(LayerKVCache& cache, const Mat& chunk,
                            const Mat& prompt, const ModelParams& params,
                            const PipelineConfig& cfg,
                            std::size_t chunk_index) {
  KVSLIM_REQUIRE(chunk.cols == params.width && prompt.cols == params.width,
                 "prefill block width mismatch");
  KVSLIM_REQUIRE(cache.layer_count() == params.layers.size(),
                 "cache layer count mismatch");
  KVSLIM_REQUIRE(chunk.rows == cfg.chunk_tokens(),
                 "chunk must hold frames_per_chunk * tokens_per_frame rows");
  KVSLIM_REQUIRE(prompt.rows == cfg.prompt_tokens,
                 "prompt row count mismatch");

  const Mat block =
      with_positions(chunk, prompt, cfg, chunk_index * cfg.chunk_tokens());
  PrefillResult result;
  const Mat out = run_block(cache, block, params, cfg, chunk_index,
                            &result.record, prompt.rows, chunk.rows);
  result.prompt_states = slice_rows(out, chunk.rows, prompt.rows);
  return result;
}

Mat forward_full(const Mat& features, const Mat& prompt,
                 const ModelParams& params, const PipelineConfig& cfg) {
  KVSLIM_REQUIRE(features.cols == params.width || features.rows == 0,
                 "feature width mismatch");
  KVSLIM_REQUIRE(prompt.cols == params.width, "prompt width mismatch");
  LayerKVCache scratch(params.layers.size(), params.width);
  const Mat block = with_positions(features, prompt, cfg, 0);
  const Mat out =
      run_block(scratch, block, params, cfg, 0, nullptr, 0, 0);
  return slice_rows(out, features.rows, prompt.rows);
}

RecordedForward forward_recorded(const Mat& features, const Mat& prompt,
                                 const ModelParams& params,
                                 const PipelineConfig& cfg) {
  KVSLIM_REQUIRE(features.cols == params.width || features.rows == 0,
                 "feature width mismatch");
  KVSLIM_REQUIRE(prompt.cols == params.width, "prompt width mismatch");
  LayerKVCache scratch(params.layers.size(), params.width);
  const Mat block = with_positions(features, prompt, cfg, 0);
  RecordedForward result;
  const Mat out = run_block(scratch, block, params, cfg, 0, &result.record,
                            prompt.rows, features.rows);
  result.prompt_states = slice_rows(out, features.rows, prompt.rows);
  return result;
}

}  // namespace kvslim

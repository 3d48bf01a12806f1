// Copyright (c) 2026 The kvslim authors
// SPDX-License-Identifier: Apache-2.0
//
// Single-tensor binary container. Layout, little endian throughout:
//   bytes 0..3   magic "ARTK"
//   bytes 4..7   format version (currently 1), uint32
//   bytes 8..11  rank, uint32
//   then rank dimensions as uint64
//   then the elements as float32, row major.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "kvslim/model.hpp"
#include "kvslim/tensor.hpp"

namespace kvslim {

struct TensorData {
  std::vector<std::size_t> shape;
  std::vector<float> data;

  std::size_t element_count() const;
};

// Writes `tensor` to `path`, replacing any existing file.
// Throws InputError when the file cannot be created.
void write_tensor(const std::string& path, const TensorData& tensor);

// Reads a tensor back. Throws InputError on missing files, bad magic,
// unsupported versions, truncated payloads, or non-finite elements.
TensorData read_tensor(const std::string& path);

// Rank-2 bridge to the in-memory matrix type.
Mat as_matrix(const TensorData& tensor);
TensorData from_matrix(const Mat& m);

// Model weights travel as one rank-4 tensor shaped [layers, 4, width, width]
// holding the query, key, value, and output projections in that order.
TensorData pack_model(const ModelParams& params);
ModelParams unpack_model(const TensorData& tensor);

}  // namespace kvslim

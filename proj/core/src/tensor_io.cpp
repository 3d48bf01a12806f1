// Copyright (c) 2026 The kvslim authors
// SPDX-License-Identifier: Apache-2.0

#include "kvslim/tensor_io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "kvslim/error.hpp"

namespace kvslim {

namespace {

constexpr char kMagic[4] = {'A', 'R', 'T', 'K'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kMaxRank = 8;

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(value));
}

template <typename T>
T take(std::ifstream& in, const std::string& path, const char* what) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(value));
  KVSLIM_REQUIRE(in.good(), path, ": truncated while reading ", what);
  return value;
}

}  // namespace

std::size_t TensorData::element_count() const {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

void write_tensor(const std::string& path, const TensorData& tensor) {
  KVSLIM_REQUIRE(!tensor.shape.empty() && tensor.shape.size() <= kMaxRank,
                 "tensor rank must be 1..", kMaxRank);
  KVSLIM_REQUIRE(tensor.data.size() == tensor.element_count(),
                 "tensor payload does not match its shape");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  KVSLIM_REQUIRE(out.is_open(), "cannot create ", path);
  out.write(kMagic, sizeof(kMagic));
  put(out, kVersion);
  put(out, static_cast<std::uint32_t>(tensor.shape.size()));
  for (std::size_t d : tensor.shape) put(out, static_cast<std::uint64_t>(d));
  out.write(reinterpret_cast<const char*>(tensor.data.data()),
            static_cast<std::streamsize>(tensor.data.size() * sizeof(float)));
  KVSLIM_REQUIRE(out.good(), "short write to ", path);
}

TensorData read_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  KVSLIM_REQUIRE(in.is_open(), "cannot open ", path);

  char magic[4] = {};
  in.read(magic, sizeof(magic));
  KVSLIM_REQUIRE(in.good() && std::memcmp(magic, kMagic, sizeof(kMagic)) == 0,
                 path, ": not a tensor file");
  const auto version = take<std::uint32_t>(in, path, "version");
  KVSLIM_REQUIRE(version == kVersion, path, ": unsupported format version ",
                 version);
  const auto rank = take<std::uint32_t>(in, path, "rank");
  KVSLIM_REQUIRE(rank >= 1 && rank <= kMaxRank, path, ": bad rank ", rank);

  TensorData tensor;
  tensor.shape.resize(rank);
  std::size_t count = 1;
  for (auto& d : tensor.shape) {
    d = static_cast<std::size_t>(take<std::uint64_t>(in, path, "shape"));
    KVSLIM_REQUIRE(d >= 1, path, ": zero-sized dimension");
    KVSLIM_REQUIRE(count <= (std::size_t{1} << 32) / d, path,
                   ": tensor too large");
    count *= d;
  }
  tensor.data.resize(count);
  in.read(reinterpret_cast<char*>(tensor.data.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  KVSLIM_REQUIRE(in.gcount() ==
                     static_cast<std::streamsize>(count * sizeof(float)),
                 path, ": truncated payload");
  for (float x : tensor.data)
    KVSLIM_REQUIRE(std::isfinite(x), path, ": non-finite element");
  return tensor;
}

Mat as_matrix(const TensorData& tensor) {
  KVSLIM_REQUIRE(tensor.shape.size() == 2, "expected a rank-2 tensor, got ",
                 tensor.shape.size());
  Mat m(tensor.shape[0], tensor.shape[1]);
  m.data = tensor.data;
  return m;
}

TensorData from_matrix(const Mat& m) {
  TensorData tensor;
  tensor.shape = {m.rows, m.cols};
  tensor.data = m.data;
  return tensor;
}

TensorData pack_model(const ModelParams& params) {
  const std::size_t d = params.width;
  TensorData tensor;
  tensor.shape = {params.layers.size(), 4, d, d};
  tensor.data.reserve(tensor.element_count());
  for (const LayerWeights& layer : params.layers) {
    for (const Mat* m :
         {&layer.w_query, &layer.w_key, &layer.w_value, &layer.w_out}) {
      KVSLIM_REQUIRE(m->rows == d && m->cols == d,
                     "model projection is not width x width");
      tensor.data.insert(tensor.data.end(), m->data.begin(), m->data.end());
    }
  }
  return tensor;
}

ModelParams unpack_model(const TensorData& tensor) {
  KVSLIM_REQUIRE(tensor.shape.size() == 4 && tensor.shape[1] == 4 &&
                     tensor.shape[2] == tensor.shape[3],
                 "model tensor must be [layers, 4, width, width]");
  ModelParams params;
  params.width = tensor.shape[2];
  params.layers.resize(tensor.shape[0]);
  const std::size_t block = params.width * params.width;
  const float* src = tensor.data.data();
  for (LayerWeights& layer : params.layers) {
    for (Mat* m :
         {&layer.w_query, &layer.w_key, &layer.w_value, &layer.w_out}) {
      *m = Mat(params.width, params.width);
      std::memcpy(m->data.data(), src, block * sizeof(float));
      src += block;
    }
  }
  return params;
}

}  // namespace kvslim

// Copyright (c) 2026 The kvslim authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace kvslim {

/// Dense row-major float32 matrix.
///
/// Storage is 32-bit on purpose (it mirrors cache payloads); every reduction
/// over entries runs in 64-bit accumulators before rounding back down.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0f) {}
  Mat(std::size_t r, std::size_t c, std::vector<float> values);

  float& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  float at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<const float> row(std::size_t r) const {
    return std::span<const float>(data).subspan(r * cols, cols);
  }
  std::span<float> row(std::size_t r) {
    return std::span<float>(data).subspan(r * cols, cols);
  }

  bool all_finite() const;
};

/// Stacks b below a. Column counts must match.
Mat vstack(const Mat& a, const Mat& b);

/// Copies rows [begin, begin + count) of m.
Mat slice_rows(const Mat& m, std::size_t begin, std::size_t count);

/// Row-major product a(m,k) x b(k,n). Each output entry accumulates in a
/// 64-bit register over k in ascending order, so results are deterministic
/// across runs and platforms.
Mat matmul(const Mat& a, const Mat& b);

/// Row-wise softmax with max-subtraction. Finite inputs are required; every
/// output row sums to 1 within 1e-6.
Mat softmax_rows(const Mat& m);

/// In-place softmax of a logit vector, 64-bit arithmetic throughout.
void softmax_inplace(std::span<double> logits);

/// Cosine similarity of two equal-length vectors, clamped to [-1, 1].
/// Returns 0 when either vector's norm falls below 1e-12.
double cosine_sim(std::span<const float> u, std::span<const float> v);

/// Value ranked k-th in descending order, counted with multiplicity.
/// Requires 1 <= k <= v.size().
double kth_largest(std::span<const double> v, std::size_t k);

/// Indices of the k largest entries. Ties resolve to the lower index, and
/// the returned list is sorted ascending. k == 0 yields an empty list.
std::vector<std::size_t> arg_top_k(std::span<const double> v, std::size_t k);
std::vector<std::size_t> arg_top_k(std::span<const float> v, std::size_t k);

}  // namespace kvslim

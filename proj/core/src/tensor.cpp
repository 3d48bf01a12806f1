// Copyright (c) 2026 The kvslim authors
// SPDX-License-Identifier: Apache-2.0

#include "kvslim/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kvslim/error.hpp"

namespace kvslim {

Mat::Mat(std::size_t r, std::size_t c, std::vector<float> values)
    : rows(r), cols(c), data(std::move(values)) {
  KVSLIM_REQUIRE(data.size() == r * c, "matrix literal has ", data.size(),
                 " entries, expected ", r, "x", c);
}

bool Mat::all_finite() const {
  return std::all_of(data.begin(), data.end(),
                     [](float x) { return std::isfinite(x); });
}

Mat vstack(const Mat& a, const Mat& b) {
  if (a.rows == 0) return b;
  if (b.rows == 0) return a;
  KVSLIM_REQUIRE(a.cols == b.cols, "vstack column mismatch: ", a.cols, " vs ",
                 b.cols);
  Mat out(a.rows + b.rows, a.cols);
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.data.size());
  return out;
}

Mat slice_rows(const Mat& m, std::size_t begin, std::size_t count) {
  KVSLIM_REQUIRE(begin + count <= m.rows, "row slice [", begin, ", ",
                 begin + count, ") exceeds ", m.rows, " rows");
  Mat out(count, m.cols);
  std::copy(m.data.begin() + begin * m.cols,
            m.data.begin() + (begin + count) * m.cols, out.data.begin());
  return out;
}

Mat matmul(const Mat& a, const Mat& b) {
  KVSLIM_REQUIRE(a.cols == b.rows, "matmul shape mismatch: ", a.rows, "x",
                 a.cols, " times ", b.rows, "x", b.cols);
  Mat out(a.rows, b.cols);
  std::vector<double> acc(b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a.at(i, k);
      const float* brow = b.data.data() + k * b.cols;
      for (std::size_t j = 0; j < b.cols; ++j) acc[j] += aik * brow[j];
    }
    for (std::size_t j = 0; j < b.cols; ++j)
      out.at(i, j) = static_cast<float>(acc[j]);
  }
  return out;
}

void softmax_inplace(std::span<double> logits) {
  if (logits.empty()) return;
  double hi = logits[0];
  for (double x : logits) hi = std::max(hi, x);
  double sum = 0.0;
  for (double& x : logits) {
    x = std::exp(x - hi);
    sum += x;
  }
  for (double& x : logits) x /= sum;
}

Mat softmax_rows(const Mat& m) {
  KVSLIM_REQUIRE(m.all_finite(), "softmax input contains non-finite entries");
  Mat out(m.rows, m.cols);
  std::vector<double> row(m.cols);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) row[j] = m.at(i, j);
    softmax_inplace(row);
    for (std::size_t j = 0; j < m.cols; ++j)
      out.at(i, j) = static_cast<float>(row[j]);
  }
  return out;
}

double cosine_sim(std::span<const float> u, std::span<const float> v) {
  KVSLIM_REQUIRE(u.size() == v.size(), "cosine_sim length mismatch: ", u.size(),
                 " vs ", v.size());
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = u[i], b = v[i];
    dot += a * b;
    uu += a * a;
    vv += b * b;
  }
  // Norm floor of 1e-12 on either vector maps to 1e-24 on its square.
  if (uu < 1e-24 || vv < 1e-24) return 0.0;
  // sqrt(uu * vv) rather than sqrt(uu) * sqrt(vv): identical vectors then
  // divide dot by itself and report exactly 1.
  const double sim = dot / std::sqrt(uu * vv);
  return std::clamp(sim, -1.0, 1.0);
}

double kth_largest(std::span<const double> v, std::size_t k) {
  KVSLIM_REQUIRE(k >= 1 && k <= v.size(), "rank ", k,
                 " out of range for length ", v.size());
  std::vector<double> copy(v.begin(), v.end());
  std::nth_element(copy.begin(), copy.begin() + (k - 1), copy.end(),
                   std::greater<double>());
  return copy[k - 1];
}

namespace {
template <typename T>
std::vector<std::size_t> arg_top_k_impl(std::span<const T> v, std::size_t k) {
  KVSLIM_REQUIRE(k <= v.size(), "cannot select ", k, " items from ", v.size());
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Value descending, index ascending on ties; then report ascending.
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (v[a] != v[b]) return v[a] > v[b];
                      return a < b;
                    });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}
}  // namespace

std::vector<std::size_t> arg_top_k(std::span<const double> v, std::size_t k) {
  return arg_top_k_impl(v, k);
}

std::vector<std::size_t> arg_top_k(std::span<const float> v, std::size_t k) {
  return arg_top_k_impl(v, k);
}

}  // namespace kvslim

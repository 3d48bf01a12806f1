// Copyright (c) 2026 The kvslim authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace kvslim::oracle {

/// Double-precision row-major matrix. The oracle checks inequalities whose
/// slack can approach zero, so it works in 64 bits end to end instead of
/// reusing the float32 cache tensors.
struct DMat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  DMat() = default;
  DMat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// One layer of the single-query analysis stack: fixed keys and values, an
/// output projection, and an identity map from attention output to the next
/// layer's query. Intentionally minimal so the loss bound's assumptions can
/// be satisfied exactly.
struct OracleLayer {
  DMat keys;    // tokens x width, every entry within [-1, 1]
  DMat values;  // tokens x width
  DMat w_out;   // width x width
};

struct OracleInstance {
  std::vector<OracleLayer> layers;
  std::vector<double> query;  // initial query, length width

  std::size_t layer_count() const { return layers.size(); }
  std::size_t token_count() const {
    return layers.empty() ? 0 : layers.front().keys.rows;
  }
};

/// Keep masks, one flag per token per layer.
struct KeepChoice {
  std::vector<std::vector<std::uint8_t>> keep;
};

/// Softmax restricted to the kept entries: dropped positions get exactly 0,
/// kept positions renormalize among themselves.
std::vector<double> masked_softmax(std::span<const double> logits,
                                   std::span<const std::uint8_t> keep);

/// Masks an existing softmax row and renormalizes by the kept mass.
/// Requires the kept mass to be positive.
std::vector<double> renormalized_weights(std::span<const double> weights,
                                         std::span<const std::uint8_t> keep);

/// Max absolute row sum (the induced infinity norm).
double inf_norm(const DMat& m);

/// Everything one forward pass of an instance produces.
struct InstanceTrace {
  double loss = 0.0;                          // L1 gap at the last layer
  std::vector<std::vector<double>> attention; // uncompressed rows, per layer
  std::vector<double> row_norms;              // ||values * w_out||_inf per layer
};

/// Runs the uncompressed and compressed passes side by side and returns the
/// final-layer L1 output gap plus the data the bound needs. Both passes share
/// one code path, so an all-keep choice reproduces the uncompressed pass bit
/// for bit and yields a loss of exactly zero.
InstanceTrace run_instance(const OracleInstance& instance,
                           const KeepChoice& choice);

/// Final-layer L1 output gap caused by the keep choice.
double compression_loss(const OracleInstance& instance,
                        const KeepChoice& choice);

/// The analytic ceiling on that gap:
///   2 * row_norms[L-1] * (1 - prod_l kept_mass_l),
/// where kept_mass_l is the uncompressed attention mass on the kept tokens.
/// Valid when every layer satisfies 4 * row_norms[l] > 1 and every key entry
/// sits within [-1, 1]; an all-keep choice gives exactly zero.
double loss_upper_bound(const std::vector<std::vector<double>>& attention,
                        const KeepChoice& choice,
                        const std::vector<double>& row_norms);

/// One bound check.
struct BoundTrial {
  std::size_t trial = 0;
  double loss = 0.0;
  double bound = 0.0;
  double slack = 0.0;
  std::vector<double> row_norms;
  bool assumptions_hold = false;  // key range and 4C > 1, by construction
  bool ok = false;                // loss <= bound
};

/// Draws `trials` random instances that satisfy the bound's assumptions
/// (layers in {1..3}, tokens in {3..6}, width in {2, 4}) with per-trial
/// seeds derived from `seed`, and checks loss <= bound on each.
std::vector<BoundTrial> verify_bound(std::size_t trials, std::uint64_t seed);

/// One masked-softmax identity check.
struct IdentityTrial {
  std::size_t trial = 0;
  double max_abs_diff = 0.0;
  bool ok = false;  // max_abs_diff <= 1e-6
};

/// Checks that masking-then-renormalizing a softmax row equals running the
/// softmax over the kept logits directly, on random (logits, mask) pairs.
std::vector<IdentityTrial> verify_masked_softmax_identity(std::size_t trials,
                                                          std::uint64_t seed);

/// Retention quality F of a keep set: the product over layers of the kept
/// attention mass. An empty layer zeroes the product.
double retention_product(const std::vector<std::vector<double>>& attention,
                         const std::vector<std::vector<std::size_t>>& sets);

struct BestSubset {
  double value = 0.0;
  std::vector<std::vector<std::size_t>> sets;  // per layer, ascending
};

/// Exhaustive maximum of retention_product over all ways to keep exactly
/// `budget` tokens across layers. Ties resolve to the lexicographically
/// smallest flattened index set. Ground set is capped at 22 tokens.
BestSubset brute_force_best(const std::vector<std::vector<double>>& attention,
                            std::size_t budget);

enum class GreedyStrategy {
  kGlobalTopK,         // highest scores pooled across layers, no layer floor
  kMarginalGainSeeded, // each layer's maximum first, then best log-gain
};

/// Greedy selection of `budget` tokens. Global top-K can empty a layer and
/// zero the product; the seeded strategy keeps every layer alive (it needs
/// budget >= layers).
BestSubset greedy_best(const std::vector<std::vector<double>>& attention,
                       std::size_t budget, GreedyStrategy strategy);

/// One near-optimality check.
struct GreedyTrial {
  std::size_t trial = 0;
  double f_topk = 0.0;
  double f_greedy = 0.0;
  double f_opt = 0.0;
  bool ratio_ok = false;     // seeded greedy within the (1 - 1/e) gain bound
  bool topk_ok = false;      // global top-K within the same bound
  bool coincide = false;     // both strategies picked identical sets
};

/// Draws random softmax-normalized instances (2..3 layers, 2..4 tokens per
/// layer, budget between layer count and 6), compares both greedy strategies
/// against the exhaustive optimum, and checks that the seeded strategy's log
/// gain over its seed reaches the (1 - 1/e) fraction of the optimum's.
std::vector<GreedyTrial> check_near_optimality(std::size_t trials,
                                               std::uint64_t seed);

}  // namespace kvslim::oracle

// Copyright (c) 2026 The kvslim authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace kvslim {

/// Worker cap honored by parallel_for. Reads the KVSLIM environment override
/// ARTK_THREADS once per call; unset or invalid values fall back to the
/// hardware concurrency. Always at least 1.
std::size_t worker_count();

/// Runs fn(i) for i in [0, n). Work is split into contiguous index ranges
/// across at most worker_count() threads. Each index must touch disjoint
/// output slots; under that contract results are bit-identical to the serial
/// loop regardless of thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace kvslim

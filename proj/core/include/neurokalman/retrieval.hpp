// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "neurokalman/memory.hpp"

namespace nk {

struct RetrievalResult {
    Vec evidence;
    Vec weights;             // empty when memory was not used
    bool used_memory = false;
};

/// Softmax-attention retrieval of the evidence vector from the memory bank.
/// Scale is 1/sqrt(d) with d the feature dimension. An empty bank is not an
/// error: the raw query passes through unchanged (used_memory = false).
RetrievalResult retrieve(const Vec& query, const MemoryBank& bank);

/// Nadaraya-Watson kernel regression with kernel K(x, y) = exp(x.y / sqrt(d)),
/// computed with explicit per-element loops and a max-shift for stability.
/// Independent oracle for retrieve(); keep it free of the attention path.
Vec nw_oracle(const Vec& query, std::span<const Vec> keys, std::span<const Vec> values);

}  // namespace nk

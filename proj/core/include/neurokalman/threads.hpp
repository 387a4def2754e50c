// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

namespace nk {

/// Worker cap for batch rollouts: NEUROKALMAN_THREADS when set (>= 1),
/// otherwise min(hardware_concurrency, 8).
int rollout_thread_cap();

/// Runs fn(0..n-1), possibly in parallel. Each index writes only its own
/// results, so callers keep determinism by reducing in index order.
void parallel_for_indexed(int n, const std::function<void(int)>& fn);

}  // namespace nk

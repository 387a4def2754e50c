// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "neurokalman/params.hpp"

namespace nk {

struct GradCheckReport {
    std::string block;
    double max_rel_error = 0.0;
    // (parameter name, worst relative error within that parameter)
    std::vector<std::pair<std::string, double>> per_param;

    bool passes(double tol) const { return max_rel_error < tol; }
};

/// Scalar loss plus analytic gradients for the given parameters. The
/// gradient set is pre-zeroed by the caller.
using LossGradFn = std::function<double(const ParamSet& params, ParamSet& grads)>;

/// Central finite differences (default step h = 1e-5) against the analytic
/// gradients. Relative error per scalar:
///   |g_analytic - g_fd| / max(|g_analytic|, |g_fd|, 1e-8)
GradCheckReport grad_check(const std::string& block_name, const LossGradFn& fn, ParamSet params,
                           double h = 1e-5);

}  // namespace nk

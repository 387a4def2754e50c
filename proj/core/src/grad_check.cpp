// SPDX-License-Identifier: Apache-2.0
#include "neurokalman/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace nk {

GradCheckReport grad_check(const std::string& block_name, const LossGradFn& fn, ParamSet params,
                           double h) {
    GradCheckReport report;
    report.block = block_name;

    ParamSet analytic = params.zeros_like();
    fn(params, analytic);

    // Scratch gradients for the finite-difference evaluations are discarded,
    // so one dirty buffer is reused across all probes.
    ParamSet scratch = params.zeros_like();

    size_t offset = 0;
    for (const auto& entry : params.entries()) {
        const size_t count = std::holds_alternative<Mat>(entry.value)
                                 ? std::get<Mat>(entry.value).a.size()
                                 : std::get<Vec>(entry.value).size();
        double worst = 0.0;
        for (size_t i = 0; i < count; ++i) {
            const size_t flat = offset + i;
            const double orig = params.get_flat(flat);

            params.set_flat(flat, orig + h);
            const double lp = fn(params, scratch);
            params.set_flat(flat, orig - h);
            const double lm = fn(params, scratch);
            params.set_flat(flat, orig);

            const double g_fd = (lp - lm) / (2.0 * h);
            const double g_an = analytic.get_flat(flat);
            const double denom = std::max({std::abs(g_an), std::abs(g_fd), 1e-8});
            worst = std::max(worst, std::abs(g_an - g_fd) / denom);
        }
        report.per_param.emplace_back(entry.name, worst);
        report.max_rel_error = std::max(report.max_rel_error, worst);
        offset += count;
    }
    return report;
}

}  // namespace nk

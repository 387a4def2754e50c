// SPDX-License-Identifier: Apache-2.0
#include "neurokalman/adam.hpp"

#include <cmath>

namespace nk {

namespace {

void update_span(double* p, const double* g, double* m, double* v, size_t n, double lr,
                 const AdamState& s, double bc1, double bc2, const std::string& name) {
    for (size_t i = 0; i < n; ++i) {
        if (!std::isfinite(g[i]))
            throw NumericalError("adam_step: non-finite gradient in block '" + name + "'");
        m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
        v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + s.eps);
    }
}

}  // namespace

void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state, double lr) {
    require(lr > 0.0, "adam_step: lr must be positive");
    require(params.same_layout(grads), "adam_step: gradient layout mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

    for (size_t e = 0; e < params.size(); ++e) {
        auto& pv = params.entries()[e].value;
        const auto& gv = grads.entries()[e].value;
        auto& mv = state.m.entries()[e].value;
        auto& vv = state.v.entries()[e].value;
        const std::string& name = params.entries()[e].name;
        if (std::holds_alternative<Mat>(pv)) {
            auto& p = std::get<Mat>(pv).a;
            const auto& g = std::get<Mat>(gv).a;
            auto& m = std::get<Mat>(mv).a;
            auto& v = std::get<Mat>(vv).a;
            update_span(p.data(), g.data(), m.data(), v.data(), p.size(), lr, state, bc1, bc2, name);
        } else {
            auto& p = std::get<Vec>(pv);
            const auto& g = std::get<Vec>(gv);
            auto& m = std::get<Vec>(mv);
            auto& v = std::get<Vec>(vv);
            update_span(p.data(), g.data(), m.data(), v.data(), p.size(), lr, state, bc1, bc2, name);
        }
    }
}

}  // namespace nk

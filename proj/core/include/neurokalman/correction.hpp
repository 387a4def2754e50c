// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>

#include "neurokalman/nn.hpp"

namespace nk {

/// Element-wise Kalman gain. compute_gain and fixed_gain only ever produce
/// entries strictly inside (0,1); the all-zero gain used by the
/// dead-reckoning lab baseline is constructed through the explicit
/// dead_reckoning() factory.
struct GainVector {
    Vec k;

    static GainVector dead_reckoning(int dim) { return {Vec(static_cast<size_t>(dim), 0.0)}; }
};

/// Constant gain with every entry equal to `value`, bypassing the gating
/// network. Used by the fixed-gain ablations. Throws ConfigError unless
/// value lies strictly in (0,1).
GainVector fixed_gain(double value, int dim);

/// Learnable gate: K = sigmoid(Wg [residual ; conf_proj(sigma)] + bg).
struct GainNetwork {
    Mlp conf_proj;  // 1 -> latent, identity projection of the confidence
    std::string gate_w = "gain.Wg";
    std::string gate_b = "gain.bg";
    int latent_dim = 0;

    static GainNetwork make(int latent_dim);
    void init(ParamSet& ps, Rng& rng) const;

    struct Cache {
        Mlp::Cache conf;
        Vec gate_in;  // [residual ; phi(sigma)]
        Vec k;
    };

    GainVector compute(const ParamSet& ps, const Vec& residual, double sigma) const;
    GainVector compute(const ParamSet& ps, const Vec& residual, double sigma, Cache& cache) const;

    struct Grad {
        Vec dresidual;
        double dsigma = 0.0;
    };
    Grad backward(const ParamSet& ps, const Cache& cache, const Vec& dk, ParamSet& grads) const;
};

struct CorrectionOutput {
    Vec z_post;
    GainVector gain;
    Vec residual;
};

/// Rectified posterior z = z~ + K .* (r - z~). In checked builds the
/// convex-combination form (1-K) .* z~ + K .* r is evaluated as well and
/// both must agree within 1e-12.
inline CorrectionOutput fuse(const Vec& z_tilde, const Vec& r, const GainVector& gain) {
    require(z_tilde.size() == r.size() && r.size() == gain.k.size(), "fuse: dimension mismatch");
    CorrectionOutput out;
    out.residual = sub(r, z_tilde);
    out.gain = gain;
    out.z_post.resize(z_tilde.size());
    for (size_t i = 0; i < z_tilde.size(); ++i)
        out.z_post[i] = z_tilde[i] + gain.k[i] * out.residual[i];
#if !defined(NDEBUG) || defined(NK_FUSE_IDENTITY_CHECK)
    for (size_t i = 0; i < z_tilde.size(); ++i) {
        const double convex = (1.0 - gain.k[i]) * z_tilde[i] + gain.k[i] * r[i];
        if (std::abs(convex - out.z_post[i]) > 1e-12)
            throw NumericalError("fuse: residual-form identity violated");
    }
#endif
    return out;
}

}  // namespace nk

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "neurokalman/encoder.hpp"

namespace nk {

/// One commanded displacement in meters, body frame.
struct Waypoint {
    Vec3 displacement{0.0, 0.0, 0.0};

    double norm() const;
    Waypoint clipped(double max_step) const;
    Vec as_vec() const { return {displacement[0], displacement[1], displacement[2]}; }
};

struct PriorState {
    Vec h;        // GRU hidden state
    Vec z_tilde;  // prior estimate before the current measurement
};

/// Dead-reckoning prior: a GRU over (previous posterior, executed waypoint)
/// plus an MLP projection. Never reads the current observation.
struct PriorPredictor {
    Mlp h0_mlp;     // latent -> hidden, tanh (t = 0 initialization)
    Mlp wp_embed;   // 3 -> wp_embed_dim, identity
    GruCell gru;    // latent + wp_embed_dim -> hidden
    Mlp proj;       // hidden -> latent

    static PriorPredictor make(int latent_dim, int hidden_dim, int wp_embed_dim,
                               int proj_hidden);
    void init(ParamSet& ps, Rng& rng) const;

    /// t = 0 protocol: z0 is the measurement latent, h0 = tanh-MLP(z0),
    /// z~0 = z0.
    PriorState init_prior(const ParamSet& ps, const Measurement& r0) const;

    struct Cache {
        Mlp::Cache wp;
        GruCell::Cache gru;
        Mlp::Cache proj;
    };

    PriorState predict(const ParamSet& ps, const PriorState& prev, const Vec& z_prev,
                       const Waypoint& w_prev) const;
    PriorState predict(const ParamSet& ps, const PriorState& prev, const Vec& z_prev,
                       const Waypoint& w_prev, Cache& cache) const;

    struct Grad {
        Vec dz_prev;
        Vec dh_prev;
    };
    /// Backward through one prediction step; dh is the gradient on the new
    /// hidden state, dz_tilde the gradient on the projected prior.
    Grad backward(const ParamSet& ps, const Cache& cache, const Vec& dh, const Vec& dz_tilde,
                  ParamSet& grads) const;
};

}  // namespace nk

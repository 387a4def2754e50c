// SPDX-License-Identifier: Apache-2.0
#include "neurokalman/prior.hpp"

#include <cmath>

namespace nk {

double Waypoint::norm() const {
    return std::sqrt(displacement[0] * displacement[0] + displacement[1] * displacement[1] +
                     displacement[2] * displacement[2]);
}

Waypoint Waypoint::clipped(double max_step) const {
    const double n = norm();
    if (n <= max_step || n == 0.0) return *this;
    const double s = max_step / n;
    return {{displacement[0] * s, displacement[1] * s, displacement[2] * s}};
}

PriorPredictor PriorPredictor::make(int latent_dim, int hidden_dim, int wp_embed_dim,
                                    int proj_hidden) {
    PriorPredictor p;
    p.h0_mlp = Mlp("prior.h0", latent_dim, {{hidden_dim, Act::Tanh}});
    p.wp_embed = Mlp("prior.wp_embed", 3, {{wp_embed_dim, Act::Identity}});
    p.gru = GruCell("prior.gru", latent_dim + wp_embed_dim, hidden_dim);
    p.proj = Mlp("prior.proj", hidden_dim, {{proj_hidden, Act::Tanh}, {latent_dim, Act::Identity}});
    return p;
}

void PriorPredictor::init(ParamSet& ps, Rng& rng) const {
    h0_mlp.init(ps, rng);
    wp_embed.init(ps, rng);
    gru.init(ps, rng);
    proj.init(ps, rng);
}

PriorState PriorPredictor::init_prior(const ParamSet& ps, const Measurement& r0) const {
    PriorState s;
    s.h = h0_mlp.forward(ps, r0.r);
    s.z_tilde = r0.r;
    return s;
}

PriorState PriorPredictor::predict(const ParamSet& ps, const PriorState& prev, const Vec& z_prev,
                                   const Waypoint& w_prev) const {
    Cache unused;
    return predict(ps, prev, z_prev, w_prev, unused);
}

PriorState PriorPredictor::predict(const ParamSet& ps, const PriorState& prev, const Vec& z_prev,
                                   const Waypoint& w_prev, Cache& cache) const {
    const Vec w_emb = wp_embed.forward(ps, w_prev.as_vec(), cache.wp);
    const Vec x = concat(z_prev, w_emb);
    PriorState next;
    next.h = gru.step(ps, x, prev.h, cache.gru);
    next.z_tilde = proj.forward(ps, next.h, cache.proj);
    return next;
}

PriorPredictor::Grad PriorPredictor::backward(const ParamSet& ps, const Cache& cache, const Vec& dh,
                                              const Vec& dz_tilde, ParamSet& grads) const {
    Vec dh_total = dh;
    if (!dz_tilde.empty()) {
        const Vec dh_from_proj = proj.backward(ps, cache.proj, dz_tilde, grads);
        if (dh_total.empty())
            dh_total = dh_from_proj;
        else
            add_inplace(dh_total, dh_from_proj);
    }
    const GruCell::Grad g = gru.backward(ps, cache.gru, dh_total, grads);

    const size_t latent = g.dx.size() - static_cast<size_t>(wp_embed.out_dim());
    Grad out;
    out.dz_prev.assign(g.dx.begin(), g.dx.begin() + static_cast<long>(latent));
    const Vec d_wemb(g.dx.begin() + static_cast<long>(latent), g.dx.end());
    wp_embed.backward(ps, cache.wp, d_wemb, grads);
    out.dh_prev = g.dh_prev;
    return out;
}

}  // namespace nk

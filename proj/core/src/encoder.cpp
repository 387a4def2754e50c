// SPDX-License-Identifier: Apache-2.0
#include "neurokalman/encoder.hpp"

namespace nk {

MeasurementEncoder MeasurementEncoder::make(int feat_dim, int goal_dim, int pos_embed,
                                            int enc_hidden, int latent_dim, double pos_scale) {
    MeasurementEncoder e;
    e.pos_proj = Mlp("enc.pos_proj", 3, {{pos_embed, Act::Identity}});
    e.trunk = Mlp("enc.trunk", feat_dim + feat_dim + goal_dim + pos_embed,
                  {{enc_hidden, Act::Tanh}, {enc_hidden, Act::Tanh}});
    e.r_head = Mlp("enc.r_head", enc_hidden, {{latent_dim, Act::Identity}});
    e.sigma_head = Mlp("enc.sigma_head", enc_hidden, {{1, Act::Sigmoid}});
    e.pos_scale = pos_scale;
    return e;
}

void MeasurementEncoder::init(ParamSet& ps, Rng& rng) const {
    pos_proj.init(ps, rng);
    trunk.init(ps, rng);
    r_head.init(ps, rng);
    sigma_head.init(ps, rng);
}

Measurement MeasurementEncoder::encode(const ParamSet& ps, const Observation& obs,
                                       const RetrievalResult& retrieval) const {
    Cache unused;
    return encode(ps, obs, retrieval, unused);
}

Measurement MeasurementEncoder::encode(const ParamSet& ps, const Observation& obs,
                                       const RetrievalResult& retrieval, Cache& cache) const {
    Vec pos_norm = {obs.position[0] / pos_scale, obs.position[1] / pos_scale,
                    obs.position[2] / pos_scale};
    const Vec pos_emb = pos_proj.forward(ps, pos_norm, cache.pos);
    const std::array<Vec, 4> parts = {obs.local_feature, retrieval.evidence, obs.goal_embed,
                                      pos_emb};
    const Vec trunk_in = concat(std::span<const Vec>(parts));
    const Vec trunk_out = trunk.forward(ps, trunk_in, cache.trunk);

    Measurement m;
    m.r = r_head.forward(ps, trunk_out, cache.r);
    m.sigma = sigma_head.forward(ps, trunk_out, cache.sigma)[0];
    m.feature = obs.local_feature;
    return m;
}

void MeasurementEncoder::backward(const ParamSet& ps, const Cache& cache, const Vec& dr,
                                  double dsigma, ParamSet& grads) const {
    Vec d_trunk_out = r_head.backward(ps, cache.r, dr, grads);
    const Vec d_from_sigma = sigma_head.backward(ps, cache.sigma, Vec{dsigma}, grads);
    add_inplace(d_trunk_out, d_from_sigma);
    const Vec d_trunk_in = trunk.backward(ps, cache.trunk, d_trunk_out, grads);

    // Only the projected-position slice has parameters upstream.
    const size_t pos_off = d_trunk_in.size() - static_cast<size_t>(pos_proj.out_dim());
    const Vec d_pos_emb(d_trunk_in.begin() + static_cast<long>(pos_off), d_trunk_in.end());
    pos_proj.backward(ps, cache.pos, d_pos_emb, grads);
}

}  // namespace nk

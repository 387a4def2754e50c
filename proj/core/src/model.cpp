// SPDX-License-Identifier: Apache-2.0
#include "neurokalman/model.hpp"

namespace nk {

namespace {
Model build_blocks(const ModelConfig& cfg) {
    Model m;
    m.cfg = cfg;
    m.prior = PriorPredictor::make(cfg.latent_dim, cfg.hidden_dim, cfg.wp_embed_dim,
                                   cfg.prior_proj_hidden);
    m.encoder = MeasurementEncoder::make(cfg.feat_dim, cfg.goal_dim, cfg.pos_embed_dim,
                                         cfg.enc_hidden, cfg.latent_dim, cfg.pos_scale);
    m.gain = GainNetwork::make(cfg.latent_dim);
    m.waypoint_head = Mlp("wp_head", cfg.latent_dim,
                          {{cfg.wp_head_hidden, Act::Tanh}, {3, Act::Identity}});
    return m;
}
}  // namespace

Model Model::create(const ModelConfig& cfg, uint64_t seed) {
    Model m = build_blocks(cfg);
    Rng rng(seed, 0x6d6f64656cULL);  // parameter-init stream
    m.prior.init(m.params, rng);
    m.encoder.init(m.params, rng);
    m.gain.init(m.params, rng);
    m.waypoint_head.init(m.params, rng);
    return m;
}

Model Model::create_zeroed(const ModelConfig& cfg) {
    Model m = create(cfg, 0);
    m.params = m.params.zeros_like();
    return m;
}

Model::StepResult Model::filter_init(const ParamSet& ps, const Observation& obs,
                                     const RetrievalResult& retrieval, StepCache* cache) const {
    StepCache local;
    StepCache& c = cache != nullptr ? *cache : local;
    c.is_first = true;

    Measurement meas = encoder.encode(ps, obs, retrieval, c.enc);
    StepResult res;
    res.state.z = meas.r;
    res.state.h = prior.h0_mlp.forward(ps, meas.r, c.h0);
    res.z_tilde = meas.r;  // z~0 is defined as z0 itself
    res.corrected = false;

    c.z_tilde = res.z_tilde;
    c.r = meas.r;
    c.sigma = meas.sigma;
    c.z_post = res.state.z;
    res.meas = std::move(meas);
    return res;
}

Model::StepResult Model::filter_update(const ParamSet& ps, const FilterState& prev,
                                       const Waypoint& w_prev, const Observation& obs,
                                       const RetrievalResult& retrieval, StepCache* cache) const {
    StepCache local;
    StepCache& c = cache != nullptr ? *cache : local;
    c.is_first = false;

    PriorState prev_ps{prev.h, {}};
    const PriorState pri = prior.predict(ps, prev_ps, prev.z, w_prev, c.prior);
    Measurement meas = encoder.encode(ps, obs, retrieval, c.enc);

    const Vec residual = sub(meas.r, pri.z_tilde);
    const GainVector k = gain_for(ps, residual, meas.sigma, &c.gain);
    CorrectionOutput corr = fuse(pri.z_tilde, meas.r, k);

    StepResult res;
    res.state.h = pri.h;
    res.state.z = corr.z_post;
    res.z_tilde = pri.z_tilde;
    res.gain = k;
    res.corrected = true;

    c.z_tilde = pri.z_tilde;
    c.r = meas.r;
    c.sigma = meas.sigma;
    c.k = k.k;
    c.z_post = corr.z_post;
    res.meas = std::move(meas);
    return res;
}

Waypoint Model::decode_waypoint(const ParamSet& ps, const Vec& z) const {
    Mlp::Cache unused;
    return decode_waypoint(ps, z, unused);
}

Waypoint Model::decode_waypoint(const ParamSet& ps, const Vec& z, Mlp::Cache& cache) const {
    const Vec out = waypoint_head.forward(ps, z, cache);
    return {{out[0], out[1], out[2]}};
}

GainVector Model::gain_for(const ParamSet& ps, const Vec& residual, double sigma,
                           GainNetwork::Cache* cache) const {
    switch (cfg.gain_mode) {
        case GainMode::Learnable: {
            GainNetwork::Cache local;
            return gain.compute(ps, residual, sigma, cache != nullptr ? *cache : local);
        }
        case GainMode::Fixed:
            return fixed_gain(cfg.fixed_gain_value, cfg.latent_dim);
        case GainMode::DeadReckoning:
            return GainVector::dead_reckoning(cfg.latent_dim);
    }
    return GainVector::dead_reckoning(cfg.latent_dim);
}

}  // namespace nk

// SPDX-License-Identifier: Apache-2.0
#include "neurokalman/correction.hpp"

namespace nk {

GainVector fixed_gain(double value, int dim) {
    require(value > 0.0 && value < 1.0, "fixed_gain: value must lie strictly in (0,1)");
    return {Vec(static_cast<size_t>(dim), value)};
}

GainNetwork GainNetwork::make(int latent_dim) {
    GainNetwork g;
    g.conf_proj = Mlp("gain.conf_proj", 1, {{latent_dim, Act::Identity}});
    g.latent_dim = latent_dim;
    return g;
}

void GainNetwork::init(ParamSet& ps, Rng& rng) const {
    conf_proj.init(ps, rng);
    Mat& w = ps.add_mat(gate_w, latent_dim, 2 * latent_dim);
    Vec& b = ps.add_vec(gate_b, latent_dim);
    const double bound = 1.0 / std::sqrt(2.0 * latent_dim);
    for (double& v : w.a) v = rng.uniform(-bound, bound);
    for (double& v : b) v = rng.uniform(-bound, bound);
}

GainVector GainNetwork::compute(const ParamSet& ps, const Vec& residual, double sigma) const {
    Cache unused;
    return compute(ps, residual, sigma, unused);
}

GainVector GainNetwork::compute(const ParamSet& ps, const Vec& residual, double sigma,
                                Cache& cache) const {
    require(static_cast<int>(residual.size()) == latent_dim,
            "GainNetwork: residual dimension mismatch");
    require(sigma >= 0.0 && sigma <= 1.0, "GainNetwork: sigma outside [0,1]");
    const Vec phi = conf_proj.forward(ps, Vec{sigma}, cache.conf);
    cache.gate_in = concat(residual, phi);
    Vec pre = matvec(ps.mat(gate_w), cache.gate_in);
    add_inplace(pre, ps.vec(gate_b));
    cache.k = act_apply(Act::Sigmoid, pre);
    return {cache.k};
}

GainNetwork::Grad GainNetwork::backward(const ParamSet& ps, const Cache& cache, const Vec& dk,
                                        ParamSet& grads) const {
    Vec da(dk.size());
    for (size_t i = 0; i < dk.size(); ++i)
        da[i] = dk[i] * cache.k[i] * (1.0 - cache.k[i]);
    outer_add(grads.mat(gate_w), da, cache.gate_in);
    add_inplace(grads.vec(gate_b), da);
    const Vec din = matvec_t(ps.mat(gate_w), da);

    Grad g;
    g.dresidual.assign(din.begin(), din.begin() + latent_dim);
    const Vec dphi(din.begin() + latent_dim, din.end());
    const Vec dsig = conf_proj.backward(ps, cache.conf, dphi, grads);
    g.dsigma = dsig[0];
    return g;
}

}  // namespace nk

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>

#include "neurokalman/nn.hpp"
#include "neurokalman/retrieval.hpp"

namespace nk {

using Vec3 = std::array<double, 3>;

/// One synthetic sensor reading: noisy position, noisy landmark-response
/// feature, and the fixed per-episode goal encoding.
struct Observation {
    Vec3 position{0.0, 0.0, 0.0};
    Vec local_feature;
    Vec goal_embed;
};

/// Encoded measurement: latent r, confidence sigma in [0,1], and the raw
/// feature that becomes the memory-anchor candidate for this step.
struct Measurement {
    Vec r;
    double sigma = 0.0;
    Vec feature;
};

/// Stand-in for the multimodal update block: a small MLP trunk over the
/// concatenated (raw feature, retrieved evidence, goal, projected position)
/// with a vector head for r and a scalar sigmoid head for sigma.
struct MeasurementEncoder {
    Mlp pos_proj;    // 3 -> pos_embed, identity
    Mlp trunk;       // feat + feat + goal + pos_embed -> enc_hidden, tanh x 2
    Mlp r_head;      // enc_hidden -> latent, identity
    Mlp sigma_head;  // enc_hidden -> 1, sigmoid
    double pos_scale = 100.0;  // meters per unit fed to pos_proj

    static MeasurementEncoder make(int feat_dim, int goal_dim, int pos_embed, int enc_hidden,
                                   int latent_dim, double pos_scale);
    void init(ParamSet& ps, Rng& rng) const;

    struct Cache {
        Mlp::Cache pos, trunk, r, sigma;
    };

    Measurement encode(const ParamSet& ps, const Observation& obs,
                       const RetrievalResult& retrieval) const;
    Measurement encode(const ParamSet& ps, const Observation& obs, const RetrievalResult& retrieval,
                       Cache& cache) const;

    /// Accumulates parameter gradients for upstream (dr, dsigma); the
    /// observation and evidence are treated as constants.
    void backward(const ParamSet& ps, const Cache& cache, const Vec& dr, double dsigma,
                  ParamSet& grads) const;
};

}  // namespace nk

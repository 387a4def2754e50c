// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "neurokalman/correction.hpp"
#include "neurokalman/prior.hpp"

namespace nk {

enum class GainMode { Learnable, Fixed, DeadReckoning };

struct ModelConfig {
    int latent_dim = 32;
    int hidden_dim = 32;
    int feat_dim = 16;  // must equal the environment's landmark count
    int goal_dim = 8;
    int wp_embed_dim = 8;
    int pos_embed_dim = 8;
    int enc_hidden = 64;
    int prior_proj_hidden = 32;
    int wp_head_hidden = 32;
    int memory_capacity = 10;
    double memory_threshold = 0.5;
    double pos_scale = 100.0;
    GainMode gain_mode = GainMode::Learnable;
    double fixed_gain_value = 0.5;  // used when gain_mode == Fixed
};

struct FilterState {
    Vec h;  // GRU hidden
    Vec z;  // current posterior
};

/// Full assembly: prior predictor, measurement encoder, gain network,
/// waypoint head. Parameters live in a single ParamSet so training,
/// checkpointing, and gradient checks see one flat ordered container.
struct Model {
    ModelConfig cfg;
    PriorPredictor prior;
    MeasurementEncoder encoder;
    GainNetwork gain;
    Mlp waypoint_head;  // latent -> 3
    ParamSet params;

    static Model create(const ModelConfig& cfg, uint64_t seed);

    /// Same architecture, zero parameter values (tests).
    static Model create_zeroed(const ModelConfig& cfg);

    struct StepCache {
        bool is_first = false;
        MeasurementEncoder::Cache enc;
        Mlp::Cache h0;
        PriorPredictor::Cache prior;
        GainNetwork::Cache gain;
        Vec z_tilde, r, z_post, k;
        double sigma = 0.0;
    };

    struct StepResult {
        FilterState state;
        Measurement meas;
        Vec z_tilde;
        GainVector gain;
        bool corrected = false;  // false for the t = 0 initialization
    };

    /// t = 0: encode the first observation, set z0 = r0, h0 = tanh-MLP(z0).
    StepResult filter_init(const ParamSet& ps, const Observation& obs,
                           const RetrievalResult& retrieval, StepCache* cache = nullptr) const;

    /// t > 0: dead-reckoning prior from (z_{t-1}, w_{t-1}), encode the
    /// observation, gate, and fuse.
    StepResult filter_update(const ParamSet& ps, const FilterState& prev, const Waypoint& w_prev,
                             const Observation& obs, const RetrievalResult& retrieval,
                             StepCache* cache = nullptr) const;

    Waypoint decode_waypoint(const ParamSet& ps, const Vec& z) const;
    Waypoint decode_waypoint(const ParamSet& ps, const Vec& z, Mlp::Cache& cache) const;

    /// Gain vector for the configured mode (constant for Fixed /
    /// DeadReckoning; cache is only touched in Learnable mode).
    GainVector gain_for(const ParamSet& ps, const Vec& residual, double sigma,
                        GainNetwork::Cache* cache = nullptr) const;
};

}  // namespace nk

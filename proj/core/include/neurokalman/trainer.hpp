// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "neurokalman/adam.hpp"
#include "neurokalman/env.hpp"

namespace nk::train {

using env::EnvConfig;
using env::EpisodeRecord;
using env::MetricReport;
using env::World;

struct TrainConfig {
    double lr = 5e-5;
    int batch_episodes = 16;
    double aux_coeff = 0.2;
    int epochs = 0;
    int warmup_epochs = 0;  // teacher-forced epochs before closed-loop rollouts
    int bptt_window = 20;
    uint64_t seed = 0;
    double divergence_threshold = 1e6;
};

struct LossBreakdown {
    double total = 0.0;
    double main = 0.0;
    double aux = 0.0;
};

/// Loss over a recorded episode, averaged per step:
///   L = mean_t [ L1(head(z_t), w*_t)
///                + aux_coeff * (L1(head(z~_t), w*_t) + L1(head(r_t), w*_t)) ]
/// When `grads` is given, gradients are accumulated with backprop through
/// time truncated to `bptt_window` steps. Deterministic and smooth in the
/// parameters (the record holds every environment-side constant), so the
/// same closure drives training and finite-difference checks.
LossBreakdown episode_loss(const Model& model, const ParamSet& params, const EpisodeRecord& record,
                           double aux_coeff, int bptt_window, ParamSet* grads);

/// Per-step loss with single-step truncation: the incoming filter state is
/// treated as constant, so gradients cover the blocks of step `t` only.
LossBreakdown step_loss(const Model& model, const ParamSet& params, const EpisodeRecord& record,
                        size_t t, double aux_coeff, ParamSet* grads);

struct EpochStats {
    int epoch = 0;
    double main_loss = 0.0;
    double aux_loss = 0.0;
    MetricReport validation;
    double wall_seconds = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    bool diverged = false;
    std::string diagnostic;
};

/// Batched Adam training over rollouts of the training worlds. Teacher-forced
/// for the warmup epochs, closed-loop afterwards. Gradient accumulation order
/// is fixed by episode index; identical (config, seed) reproduce bit-identical
/// parameters.
TrainReport train(const TrainConfig& cfg, Model& model, const std::vector<World>& train_worlds,
                  const std::vector<World>& val_worlds, const EnvConfig& env_cfg);

}  // namespace nk::train

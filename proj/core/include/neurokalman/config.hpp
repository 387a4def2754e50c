// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "neurokalman/env.hpp"
#include "neurokalman/trainer.hpp"

namespace nk {

struct EvalConfig {
    int episodes = 50;
    std::string split = "full";  // easy | hard | full
};

struct LabConfig {
    int drift_episodes = 50;
    int drift_horizon = 200;
    int ablation_seeds = 3;
    int ablation_eval_episodes = 16;
};

/// Merged run configuration. Model feature width and position scale are
/// derived from the environment section so the two sides cannot drift apart.
struct RunConfig {
    ModelConfig model;
    env::EnvConfig env;
    train::TrainConfig train;
    EvalConfig eval;
    LabConfig lab;
    int train_world_count = 16;
    int val_world_count = 4;
    uint64_t seed = 1;
    std::string out_dir = "out";

    /// Re-derives the coupled model fields after any edit to env.
    void finalize();
};

RunConfig default_config();

/// Parses the sectioned key/value config file. Unknown sections or keys and
/// out-of-range values are errors (fail-closed), reported with line numbers.
RunConfig load_config(const std::string& path);

/// Applies one "section.key=value" override string to an existing config.
void apply_override(RunConfig& cfg, const std::string& assignment);

uint64_t fnv1a64(const void* data, size_t len);
std::string fnv1a64_hex(const std::string& text);

}  // namespace nk

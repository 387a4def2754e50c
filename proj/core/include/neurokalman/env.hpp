// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>

#include "neurokalman/memory.hpp"
#include "neurokalman/model.hpp"

namespace nk::env {

using nk::Observation;
using nk::Vec3;
using nk::Waypoint;

enum class Difficulty { Easy, Hard };

struct EnvConfig {
    int horizon = 200;
    double max_step = 5.0;         // meters per commanded step
    double success_radius = 20.0;  // meters
    double stop_eps = 0.75;        // waypoint norm below this means "stop"
    int landmark_count = 16;
    double landmark_radius = 6.0;  // collision sphere radius
    double feature_length_scale = 150.0;
    double feature_noise_std = 0.03;
    double pos_noise_std = 1.5;
    // Sensor glitches: with probability corrupt_prob an observation has its
    // feature responses collapsed toward zero and its position reading blown
    // up. Confidence has to be learned from the feature signature alone.
    double corrupt_prob = 0.25;
    double corrupt_feature_factor = 0.15;
    double corrupt_feature_noise_std = 0.30;
    double corrupt_pos_noise_std = 60.0;
    double process_noise_std = 0.8;  // actuation noise per axis per step
    double path_jitter = 0.02;       // interior control-point jitter, fraction of route length
    double arena_margin = 500.0;     // arena box beyond the route bbox
    double landmark_margin = 100.0;  // landmark box beyond the route bbox
    double pos_scale = 100.0;        // normalization used in goal encoding
    double easy_min = 50.0, easy_max = 250.0;
    double hard_min = 250.0, hard_max = 400.0;
};

struct World {
    uint64_t seed = 0;
    std::vector<Vec3> landmarks;
    Vec3 start{0, 0, 0};
    Vec3 target{0, 0, 0};
    std::vector<Vec3> path;  // ground-truth route, consecutive points <= max_step apart
    Vec3 arena_min{0, 0, 0};
    Vec3 arena_max{0, 0, 0};
    Vec goal_embed;  // fixed per-episode goal encoding

    double straight_distance() const;
};

/// Deterministic world synthesis: route length drawn by difficulty, landmarks
/// placed uniformly around the route, and a smoothed piecewise path that
/// clears every landmark collision sphere. Invalid candidates trigger a
/// seeded re-draw.
World generate_world(uint64_t seed, Difficulty difficulty, const EnvConfig& cfg);

/// Noisy observation at a position: RBF landmark responses plus noise, a
/// noisy position reading, and the fixed goal encoding.
Observation observe(const World& world, const Vec3& position, Rng& rng, const EnvConfig& cfg);

/// Supervision signal: displacement toward the next route point from the
/// nearest one, clipped to max_step; zero within the success radius.
Waypoint expert_waypoint(const World& world, const Vec3& position, const EnvConfig& cfg);

enum class EndReason { Horizon, Stopped, Collision, LeftArena, NumericalFailure };

struct StepTrace {
    double sigma = 0.0;
    double mean_gain = 0.0;
    bool stored = false;
    bool corrected = false;
};

struct Episode {
    World world;
    std::vector<Vec3> agent_positions;       // executed_waypoints.size() + 1
    std::vector<Waypoint> executed_waypoints;
    std::vector<Observation> observations;   // one per decision step
    std::vector<StepTrace> step_traces;      // aligned with observations
    EndReason end_reason = EndReason::Horizon;
    int horizon = 0;

    int steps() const { return static_cast<int>(executed_waypoints.size()); }
    double final_distance() const;
    double min_distance() const;
    double path_length() const;
    /// L2 error against the route point at matched progress (step index).
    double position_error(int t) const;
};

enum class RolloutMode { ClosedLoop, TeacherForced };

/// Per-step constants captured for training: everything the loss needs that
/// does not depend on the parameters.
struct StepInputs {
    Vec feature;
    Vec evidence;
    Vec goal;
    Vec3 obs_position{0, 0, 0};
    Waypoint expert;
    Waypoint executed;
};

struct EpisodeRecord {
    std::vector<StepInputs> steps;
};

/// Drives one episode: observe, retrieve, encode, predict, gate, fuse,
/// decode waypoint, move, store. Deterministic given (world, params,
/// episode_seed, mode). A NaN latent aborts the episode as a failure.
Episode rollout(const Model& model, const ParamSet& params, const World& world, RolloutMode mode,
                const EnvConfig& cfg, uint64_t episode_seed, EpisodeRecord* record = nullptr);

struct MetricReport {
    double ne = 0.0;   // mean final distance to target, meters
    double sr = 0.0;   // fraction of successes (final distance < radius)
    double osr = 0.0;  // fraction with min distance over time < radius
    double spl = 0.0;  // success weighted by path length

    struct Row {
        int episode = 0;
        double final_dist = 0.0;
        double min_dist = 0.0;
        double path_len = 0.0;
        double straight = 0.0;
        bool success = false;
        int steps = 0;
        EndReason end_reason = EndReason::Horizon;
    };
    std::vector<Row> rows;
};

MetricReport compute_metrics(std::span<const Episode> episodes, double success_radius);

const char* end_reason_name(EndReason r);

}  // namespace nk::env

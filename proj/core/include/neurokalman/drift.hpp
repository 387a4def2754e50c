// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "neurokalman/config.hpp"

namespace nk::lab {

using env::EnvConfig;
using env::MetricReport;
using env::World;

/// Mean L2 position error against the matched-progress route point, per
/// step, over the episodes still running at that step.
struct DriftCurve {
    std::vector<int> steps;
    std::vector<double> mean_error;
    std::vector<int> n_alive;
};

/// Closed-loop error-over-time curves. Stopping is disabled for the sweep
/// (the agent keeps flying for the full horizon) so curves of different
/// policies stay comparable; collisions still terminate.
DriftCurve drift_curve(const Model& model, const ParamSet& params, const std::vector<World>& worlds,
                       const EnvConfig& cfg, int horizon, uint64_t seed);

struct ContractionTrace {
    std::vector<double> epsilon;  // iterate (or observed error, empirical mode)
    std::vector<double> bound;    // recursion bound
    double lambda_est = 0.0;
    double xi_est = 0.0;
    double k_est = 0.0;
    bool diverges = false;
    bool applicable = true;
    double fixed_point = 0.0;            // valid when !diverges
    double bound_satisfaction = 0.0;     // empirical mode: fraction of steps with eps <= bound
};

/// Scalar error recursion e_t = (1-k) * lambda * e_{t-1} + k * xi. Reports
/// the fixed point xi*k / (1 - (1-k)*lambda) when (1-k)*lambda < 1 and flags
/// divergence otherwise. k may be 0 or 1 for the degenerate regimes.
ContractionTrace contraction_check(double lambda, double k, double xi, double eps0, int steps);

/// Geometric growth rate from a least-squares fit of log(error) against the
/// step index over [lo, hi). NaN when fewer than two usable points.
double fit_growth_rate(std::span<const double> errors, size_t lo, size_t hi);

/// Estimates lambda from dead-reckoning rollouts, xi from the one-step
/// measurement error, and the mean gain from full-model rollouts, then checks
/// the observed error curve against the recursion bound.
ContractionTrace empirical_contraction(const Model& model, const ParamSet& params,
                                       const std::vector<World>& worlds, const EnvConfig& cfg,
                                       int horizon, uint64_t seed);

enum class AblationKind { Gain, Memory, Aux };

struct AblationRow {
    std::string variant;
    double ne = 0.0;
    double sr = 0.0;
    double osr = 0.0;
    double spl = 0.0;
};

/// Trains one model under the run configuration and evaluates it closed-loop
/// on a fresh world set derived from (cfg.seed, seed_offset).
std::pair<Model, MetricReport> train_and_eval(const RunConfig& cfg, uint64_t seed_offset);

/// Trains every variant of the chosen ablation under identical budget and
/// seeds and reports metrics averaged over cfg.lab.ablation_seeds replicates.
std::vector<AblationRow> run_ablation(AblationKind kind, const RunConfig& cfg);

/// World batch helper: split is "easy", "hard", or "full" (alternating).
std::vector<World> make_worlds(uint64_t seed, int count, const std::string& split,
                               const EnvConfig& cfg);

}  // namespace nk::lab

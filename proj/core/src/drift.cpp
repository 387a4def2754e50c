// SPDX-License-Identifier: Apache-2.0
#include "neurokalman/drift.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>

#include "neurokalman/threads.hpp"

namespace nk::lab {

namespace {
std::string short_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}
}  // namespace

std::vector<World> make_worlds(uint64_t seed, int count, const std::string& split,
                               const EnvConfig& cfg) {
    std::vector<World> worlds;
    worlds.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
        env::Difficulty diff;
        if (split == "easy")
            diff = env::Difficulty::Easy;
        else if (split == "hard")
            diff = env::Difficulty::Hard;
        else if (split == "full")
            diff = i % 2 == 0 ? env::Difficulty::Easy : env::Difficulty::Hard;
        else
            throw ConfigError("make_worlds: unknown split '" + split + "'");
        worlds.push_back(env::generate_world(splitmix64(seed) + static_cast<uint64_t>(i), diff, cfg));
    }
    return worlds;
}

DriftCurve drift_curve(const Model& model, const ParamSet& params, const std::vector<World>& worlds,
                       const EnvConfig& cfg, int horizon, uint64_t seed) {
    EnvConfig sweep = cfg;
    sweep.horizon = horizon;
    sweep.stop_eps = 0.0;  // no stop decision during the sweep

    std::vector<env::Episode> episodes(worlds.size());
    parallel_for_indexed(static_cast<int>(worlds.size()), [&](int i) {
        episodes[static_cast<size_t>(i)] =
            env::rollout(model, params, worlds[static_cast<size_t>(i)], env::RolloutMode::ClosedLoop,
                         sweep, splitmix64(seed ^ 0x6472696674ULL) + static_cast<uint64_t>(i));
    });

    DriftCurve curve;
    for (int t = 0; t <= horizon; ++t) {
        double sum = 0.0;
        int alive = 0;
        for (const env::Episode& ep : episodes) {
            if (static_cast<int>(ep.agent_positions.size()) <= t) continue;
            sum += ep.position_error(t);
            alive += 1;
        }
        if (alive == 0) break;
        curve.steps.push_back(t);
        curve.mean_error.push_back(sum / alive);
        curve.n_alive.push_back(alive);
    }
    return curve;
}

ContractionTrace contraction_check(double lambda, double k, double xi, double eps0, int steps) {
    require(lambda > 0.0 && xi >= 0.0 && eps0 >= 0.0, "contraction_check: inputs must be positive");
    require(k >= 0.0 && k <= 1.0, "contraction_check: k outside [0,1]");
    ContractionTrace trace;
    trace.lambda_est = lambda;
    trace.xi_est = xi;
    trace.k_est = k;
    const double contraction = (1.0 - k) * lambda;
    trace.diverges = contraction >= 1.0;
    trace.fixed_point =
        trace.diverges ? std::numeric_limits<double>::quiet_NaN() : xi * k / (1.0 - contraction);

    double e = eps0;
    trace.epsilon.push_back(e);
    trace.bound.push_back(e);
    for (int t = 1; t <= steps; ++t) {
        e = contraction * e + k * xi;
        trace.epsilon.push_back(e);
        trace.bound.push_back(e);
    }
    return trace;
}

double fit_growth_rate(std::span<const double> errors, size_t lo, size_t hi) {
    hi = std::min(hi, errors.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (size_t t = lo; t < hi; ++t) {
        if (!(errors[t] > 0.0) || !std::isfinite(errors[t])) continue;
        const double x = static_cast<double>(t);
        const double y = std::log(errors[t]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        n += 1;
    }
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
    const double slope = (n * sxy - sx * sy) / denom;
    return std::exp(slope);
}

ContractionTrace empirical_contraction(const Model& model, const ParamSet& params,
                                       const std::vector<World>& worlds, const EnvConfig& cfg,
                                       int horizon, uint64_t seed) {
    ContractionTrace trace;

    // lambda from the uncorrected (K = 0) baseline's error growth.
    Model baseline = model;
    baseline.cfg.gain_mode = GainMode::DeadReckoning;
    const DriftCurve base = drift_curve(baseline, params, worlds, cfg, horizon, seed);
    const size_t fit_lo = 5;
    const size_t fit_hi = std::min<size_t>(base.mean_error.size(), 60);
    trace.lambda_est = fit_growth_rate(base.mean_error, fit_lo, fit_hi);
    if (!std::isfinite(trace.lambda_est) || trace.lambda_est <= 1.0) {
        trace.applicable = false;
        return trace;
    }

    // xi: mean one-step measurement position error along the routes.
    {
        double sum = 0.0;
        int count = 0;
        for (size_t wi = 0; wi < worlds.size(); ++wi) {
            Rng rng(seed ^ 0x7869ULL, wi);
            const World& w = worlds[wi];
            for (size_t pi = 0; pi < w.path.size(); pi += 4) {
                const Observation obs = env::observe(w, w.path[pi], rng, cfg);
                const double dx = obs.position[0] - w.path[pi][0];
                const double dy = obs.position[1] - w.path[pi][1];
                const double dz = obs.position[2] - w.path[pi][2];
                sum += std::sqrt(dx * dx + dy * dy + dz * dz);
                count += 1;
            }
        }
        trace.xi_est = count > 0 ? sum / count : 0.0;
    }

    // Mean gain and the observed error curve from the full model.
    const DriftCurve full = drift_curve(model, params, worlds, cfg, horizon, seed);
    {
        EnvConfig sweep = cfg;
        sweep.horizon = std::min(horizon, 40);
        sweep.stop_eps = 0.0;
        double gain_sum = 0.0;
        int gain_count = 0;
        for (size_t wi = 0; wi < std::min<size_t>(worlds.size(), 8); ++wi) {
            const env::Episode ep =
                env::rollout(model, params, worlds[wi], env::RolloutMode::ClosedLoop, sweep,
                             splitmix64(seed ^ 0x6761696eULL) + wi);
            for (const env::StepTrace& st : ep.step_traces) {
                if (!st.corrected) continue;
                gain_sum += st.mean_gain;
                gain_count += 1;
            }
        }
        trace.k_est = gain_count > 0 ? gain_sum / gain_count : 0.0;
    }

    const double contraction = (1.0 - trace.k_est) * trace.lambda_est;
    trace.diverges = contraction >= 1.0;
    trace.fixed_point = trace.diverges ? std::numeric_limits<double>::quiet_NaN()
                                       : trace.xi_est * trace.k_est / (1.0 - contraction);

    trace.epsilon = full.mean_error;
    trace.bound.resize(full.mean_error.size());
    int satisfied = 0;
    double b = full.mean_error.empty() ? 0.0 : full.mean_error[0];
    for (size_t t = 0; t < full.mean_error.size(); ++t) {
        if (t > 0) b = contraction * b + trace.k_est * trace.xi_est;
        trace.bound[t] = b;
        if (full.mean_error[t] <= b + 1e-12) satisfied += 1;
    }
    trace.bound_satisfaction =
        full.mean_error.empty() ? 0.0 : static_cast<double>(satisfied) / full.mean_error.size();
    return trace;
}

std::pair<Model, MetricReport> train_and_eval(const RunConfig& cfg, uint64_t seed_offset) {
    const uint64_t seed = cfg.seed + seed_offset;
    Model model = Model::create(cfg.model, seed);

    train::TrainConfig tc = cfg.train;
    tc.seed = seed;
    const std::vector<World> train_worlds =
        make_worlds(seed ^ 0x545257ULL, cfg.train_world_count, "full", cfg.env);
    const std::vector<World> val_worlds =
        make_worlds(seed ^ 0x56414cULL, cfg.val_world_count, "full", cfg.env);
    train::train(tc, model, train_worlds, val_worlds, cfg.env);

    const std::vector<World> eval_worlds =
        make_worlds(seed ^ 0x455657ULL, cfg.lab.ablation_eval_episodes, "full", cfg.env);
    std::vector<env::Episode> episodes(eval_worlds.size());
    parallel_for_indexed(static_cast<int>(eval_worlds.size()), [&](int i) {
        episodes[static_cast<size_t>(i)] =
            env::rollout(model, model.params, eval_worlds[static_cast<size_t>(i)],
                         env::RolloutMode::ClosedLoop, cfg.env,
                         splitmix64(seed ^ 0x45564cULL) + static_cast<uint64_t>(i));
    });
    return {std::move(model), env::compute_metrics(episodes, cfg.env.success_radius)};
}

std::vector<AblationRow> run_ablation(AblationKind kind, const RunConfig& cfg) {
    struct Variant {
        std::string name;
        std::function<void(RunConfig&)> apply;
    };
    std::vector<Variant> variants;
    switch (kind) {
        case AblationKind::Gain:
            for (double v : {0.1, 0.5, 0.9})
                variants.push_back({"fixed_" + short_num(v), [v](RunConfig& c) {
                                        c.model.gain_mode = GainMode::Fixed;
                                        c.model.fixed_gain_value = v;
                                    }});
            variants.push_back(
                {"learnable", [](RunConfig& c) { c.model.gain_mode = GainMode::Learnable; }});
            break;
        case AblationKind::Memory:
            for (int m : {5, 10, 15})
                variants.push_back({"M" + std::to_string(m),
                                    [m](RunConfig& c) { c.model.memory_capacity = m; }});
            break;
        case AblationKind::Aux:
            variants.push_back({"aux_on", [](RunConfig& c) { c.train.aux_coeff = 0.2; }});
            variants.push_back({"aux_off", [](RunConfig& c) { c.train.aux_coeff = 0.0; }});
            break;
    }

    std::vector<AblationRow> rows;
    for (const Variant& variant : variants) {
        AblationRow row;
        row.variant = variant.name;
        for (int s = 0; s < cfg.lab.ablation_seeds; ++s) {
            RunConfig vc = cfg;
            variant.apply(vc);
            vc.finalize();
            const auto [model, metrics] = train_and_eval(vc, static_cast<uint64_t>(s) * 1000);
            row.ne += metrics.ne;
            row.sr += metrics.sr;
            row.osr += metrics.osr;
            row.spl += metrics.spl;
        }
        const double inv = 1.0 / cfg.lab.ablation_seeds;
        row.ne *= inv;
        row.sr *= inv;
        row.osr *= inv;
        row.spl *= inv;
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace nk::lab

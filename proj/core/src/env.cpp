// SPDX-License-Identifier: Apache-2.0
#include "neurokalman/env.hpp"

#include <algorithm>
#include <cmath>

namespace nk::env {

namespace {

Vec3 add3(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 sub3(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 scale3(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
double norm3(const Vec3& a) { return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]); }
double dist3(const Vec3& a, const Vec3& b) { return norm3(sub3(a, b)); }
Vec3 lerp3(const Vec3& a, const Vec3& b, double t) {
    return {a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t};
}

// Chaikin corner cutting, endpoints preserved.
std::vector<Vec3> chaikin(const std::vector<Vec3>& pts, int rounds) {
    std::vector<Vec3> cur = pts;
    for (int r = 0; r < rounds; ++r) {
        std::vector<Vec3> next;
        next.reserve(cur.size() * 2);
        next.push_back(cur.front());
        for (size_t i = 0; i + 1 < cur.size(); ++i) {
            next.push_back(lerp3(cur[i], cur[i + 1], 0.25));
            next.push_back(lerp3(cur[i], cur[i + 1], 0.75));
        }
        next.push_back(cur.back());
        cur = std::move(next);
    }
    return cur;
}

// Resample a polyline at exact arc-length spacing; the final point is always
// the original endpoint (its trailing gap may be shorter than `spacing`).
std::vector<Vec3> densify(const std::vector<Vec3>& pts, double spacing) {
    std::vector<Vec3> out;
    out.push_back(pts.front());
    double carry = 0.0;
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
        const Vec3 a = pts[i];
        const Vec3 b = pts[i + 1];
        const double seg = dist3(a, b);
        if (seg <= 0.0) continue;
        double along = spacing - carry;
        while (along <= seg) {
            out.push_back(lerp3(a, b, along / seg));
            along += spacing;
        }
        carry = seg - (along - spacing);
    }
    if (dist3(out.back(), pts.back()) > 1e-9)
        out.push_back(pts.back());
    else
        out.back() = pts.back();
    return out;
}

bool clears_landmarks(const std::vector<Vec3>& path, const std::vector<Vec3>& landmarks,
                      double clearance) {
    for (const Vec3& p : path)
        for (const Vec3& l : landmarks)
            if (dist3(p, l) <= clearance) return false;
    return true;
}

// Gentle-curvature requirement: the chord across any two consecutive hops
// must stay close to the arc. Keeps routes smooth and guarantees that a
// two-points-ahead target is farther than one step away. The window touching
// the (possibly short) final hop is exempt.
bool gently_curved(const std::vector<Vec3>& path, double spacing) {
    if (path.size() < 4) return true;
    for (size_t i = 0; i + 3 < path.size(); ++i)
        if (dist3(path[i], path[i + 2]) < 1.5 * spacing) return false;
    return true;
}

Vec make_goal_embed(const Vec3& start, const Vec3& target, double pos_scale) {
    const Vec3 delta = sub3(target, start);
    const double dist = norm3(delta);
    const Vec3 dir = dist > 0.0 ? scale3(delta, 1.0 / dist) : Vec3{0, 0, 0};
    return {target[0] / pos_scale, target[1] / pos_scale, target[2] / pos_scale,
            dir[0],               dir[1],               dir[2],
            dist / 400.0,         1.0};
}

}  // namespace

double World::straight_distance() const { return dist3(start, target); }

World generate_world(uint64_t seed, Difficulty difficulty, const EnvConfig& cfg) {
    constexpr int kMaxAttempts = 64;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Rng rng(seed, 0x776f726c64ULL, static_cast<uint64_t>(attempt));

        World w;
        w.seed = seed;
        w.start = {rng.uniform(-200.0, 200.0), rng.uniform(-200.0, 200.0), rng.uniform(40.0, 80.0)};

        const double lo = difficulty == Difficulty::Easy ? cfg.easy_min : cfg.hard_min;
        const double hi = difficulty == Difficulty::Easy ? cfg.easy_max : cfg.hard_max;
        // Easy is [lo, hi) and hard [lo, hi]; the open/closed distinction is
        // immaterial for a continuous draw.
        const double dist = rng.uniform(lo, hi);
        const double azimuth = rng.uniform(0.0, 2.0 * M_PI);
        const double dz = rng.uniform(-0.1, 0.1);  // mostly level flight
        const Vec3 dir = {std::cos(azimuth) * std::sqrt(1.0 - dz * dz),
                          std::sin(azimuth) * std::sqrt(1.0 - dz * dz), dz};
        w.target = add3(w.start, scale3(dir, dist));

        Vec3 box_min, box_max;
        for (int k = 0; k < 3; ++k) {
            box_min[k] = std::min(w.start[k], w.target[k]) - cfg.landmark_margin;
            box_max[k] = std::max(w.start[k], w.target[k]) + cfg.landmark_margin;
        }

        w.landmarks.reserve(static_cast<size_t>(cfg.landmark_count));
        const double keep_out = cfg.landmark_radius + 10.0;
        for (int i = 0; i < cfg.landmark_count; ++i) {
            Vec3 l{0, 0, 0};
            bool ok = false;
            for (int tries = 0; tries < 16 && !ok; ++tries) {
                l = {rng.uniform(box_min[0], box_max[0]), rng.uniform(box_min[1], box_max[1]),
                     rng.uniform(box_min[2], box_max[2])};
                ok = dist3(l, w.start) > keep_out && dist3(l, w.target) > keep_out;
            }
            if (!ok) break;
            w.landmarks.push_back(l);
        }
        if (static_cast<int>(w.landmarks.size()) != cfg.landmark_count) continue;

        // Control polygon with jittered interior points, smoothed and
        // resampled at the step size.
        const double jitter = std::min(dist * cfg.path_jitter, 14.0);
        std::vector<Vec3> control = {
            w.start,
            add3(lerp3(w.start, w.target, 1.0 / 3.0),
                 {rng.normal(0, jitter), rng.normal(0, jitter), rng.normal(0, jitter * 0.2)}),
            add3(lerp3(w.start, w.target, 2.0 / 3.0),
                 {rng.normal(0, jitter), rng.normal(0, jitter), rng.normal(0, jitter * 0.2)}),
            w.target};
        w.path = densify(chaikin(control, 3), cfg.max_step);

        if (!gently_curved(w.path, cfg.max_step)) continue;
        if (!clears_landmarks(w.path, w.landmarks, cfg.landmark_radius + 2.0)) continue;

        for (int k = 0; k < 3; ++k) {
            w.arena_min[k] = std::min(w.start[k], w.target[k]) - cfg.arena_margin;
            w.arena_max[k] = std::max(w.start[k], w.target[k]) + cfg.arena_margin;
        }
        w.goal_embed = make_goal_embed(w.start, w.target, cfg.pos_scale);
        return w;
    }
    throw NumericalError("generate_world: no valid world after bounded re-draws (seed " +
                         std::to_string(seed) + ")");
}

Observation observe(const World& world, const Vec3& position, Rng& rng, const EnvConfig& cfg) {
    Observation obs;
    const bool corrupted = rng.uniform(0.0, 1.0) < cfg.corrupt_prob;

    obs.local_feature.resize(world.landmarks.size());
    const double inv_two_l2 = 1.0 / (2.0 * cfg.feature_length_scale * cfg.feature_length_scale);
    for (size_t i = 0; i < world.landmarks.size(); ++i) {
        const double d = dist3(position, world.landmarks[i]);
        double response = std::exp(-d * d * inv_two_l2);
        if (corrupted)
            response = response * cfg.corrupt_feature_factor +
                       rng.normal(0.0, cfg.corrupt_feature_noise_std);
        else
            response += rng.normal(0.0, cfg.feature_noise_std);
        obs.local_feature[i] = response;
    }

    const double pos_std = corrupted ? cfg.corrupt_pos_noise_std : cfg.pos_noise_std;
    obs.position = {position[0] + rng.normal(0.0, pos_std), position[1] + rng.normal(0.0, pos_std),
                    position[2] + rng.normal(0.0, pos_std)};
    obs.goal_embed = world.goal_embed;
    return obs;
}

Waypoint expert_waypoint(const World& world, const Vec3& position, const EnvConfig& cfg) {
    if (dist3(position, world.target) <= cfg.success_radius) return {};

    size_t nearest = 0;
    double best = dist3(position, world.path[0]);
    for (size_t i = 1; i < world.path.size(); ++i) {
        const double d = dist3(position, world.path[i]);
        if (d < best) {
            best = d;
            nearest = i;
        }
    }
    // Two points ahead: always beyond one step on a gently curved route, so
    // the clipped displacement has norm exactly max_step until the approach.
    const size_t forward = std::min(nearest + 2, world.path.size() - 1);
    Waypoint w{sub3(world.path[forward], position)};
    return w.clipped(cfg.max_step);
}

double Episode::final_distance() const {
    return dist3(agent_positions.back(), world.target);
}

double Episode::min_distance() const {
    double best = final_distance();
    for (const Vec3& p : agent_positions) best = std::min(best, dist3(p, world.target));
    return best;
}

double Episode::path_length() const {
    double total = 0.0;
    for (size_t i = 0; i + 1 < agent_positions.size(); ++i)
        total += dist3(agent_positions[i], agent_positions[i + 1]);
    return total;
}

double Episode::position_error(int t) const {
    const size_t idx = std::min(static_cast<size_t>(t), world.path.size() - 1);
    return dist3(agent_positions[static_cast<size_t>(t)], world.path[idx]);
}

namespace {

bool in_arena(const World& w, const Vec3& p) {
    for (int k = 0; k < 3; ++k)
        if (p[k] < w.arena_min[k] || p[k] > w.arena_max[k]) return false;
    return true;
}

bool hits_landmark(const World& w, const Vec3& p, double radius) {
    for (const Vec3& l : w.landmarks)
        if (dist3(p, l) <= radius) return true;
    return false;
}

double mean_of(const Vec& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

}  // namespace

Episode rollout(const Model& model, const ParamSet& params, const World& world, RolloutMode mode,
                const EnvConfig& cfg, uint64_t episode_seed, EpisodeRecord* record) {
    Episode ep;
    ep.world = world;
    ep.horizon = cfg.horizon;
    ep.agent_positions.push_back(world.start);

    Rng rng(episode_seed, 0x65706973ULL);
    MemoryBank bank(model.cfg.memory_capacity, model.cfg.memory_threshold);
    FilterState state;
    Waypoint last_executed;  // zero before the first move

    for (int t = 0; t < cfg.horizon; ++t) {
        const Vec3 pos = ep.agent_positions.back();
        Observation obs = observe(world, pos, rng, cfg);
        const RetrievalResult retrieval = retrieve(obs.local_feature, bank);

        Model::StepResult step;
        if (t == 0)
            step = model.filter_init(params, obs, retrieval);
        else
            step = model.filter_update(params, state, last_executed, obs, retrieval);

        if (!all_finite(step.state.z) || !all_finite(step.state.h)) {
            ep.end_reason = EndReason::NumericalFailure;
            return ep;
        }
        state = step.state;

        const Waypoint predicted = model.decode_waypoint(params, state.z);
        const Waypoint expert = expert_waypoint(world, pos, cfg);
        const Waypoint command =
            mode == RolloutMode::TeacherForced ? expert : predicted.clipped(cfg.max_step);

        StepTrace trace;
        trace.sigma = step.meas.sigma;
        trace.mean_gain = step.corrected ? mean_of(step.gain.k) : 0.0;
        trace.corrected = step.corrected;

        if (record != nullptr) {
            StepInputs in;
            in.feature = obs.local_feature;
            in.evidence = retrieval.evidence;
            in.goal = obs.goal_embed;
            in.obs_position = obs.position;
            in.expert = expert;
            in.executed = command;
            record->steps.push_back(std::move(in));
        }

        ep.observations.push_back(std::move(obs));

        const Waypoint stop_probe = mode == RolloutMode::TeacherForced ? expert : predicted;
        if (stop_probe.norm() < cfg.stop_eps) {
            // Stop decision: a null move ends the episode in place.
            ep.executed_waypoints.push_back(Waypoint{});
            ep.agent_positions.push_back(pos);
            trace.stored = bank.try_store(step.meas.feature, t, step.meas.sigma);
            ep.step_traces.push_back(trace);
            ep.end_reason = EndReason::Stopped;
            return ep;
        }

        const Vec3 noise = {rng.normal(0.0, cfg.process_noise_std),
                            rng.normal(0.0, cfg.process_noise_std),
                            rng.normal(0.0, cfg.process_noise_std)};
        const Vec3 next_pos = add3(add3(pos, command.displacement), noise);
        ep.executed_waypoints.push_back(command);
        ep.agent_positions.push_back(next_pos);
        last_executed = command;

        trace.stored = bank.try_store(step.meas.feature, t, step.meas.sigma);
        ep.step_traces.push_back(trace);

        if (hits_landmark(world, next_pos, cfg.landmark_radius)) {
            ep.end_reason = EndReason::Collision;
            return ep;
        }
        if (!in_arena(world, next_pos)) {
            ep.end_reason = EndReason::LeftArena;
            return ep;
        }
    }
    ep.end_reason = EndReason::Horizon;
    return ep;
}

MetricReport compute_metrics(std::span<const Episode> episodes, double success_radius) {
    require(!episodes.empty(), "compute_metrics: empty episode list");
    MetricReport rep;
    double ne = 0.0, sr = 0.0, osr = 0.0, spl = 0.0;
    int idx = 0;
    for (const Episode& ep : episodes) {
        MetricReport::Row row;
        row.episode = idx++;
        row.final_dist = ep.final_distance();
        row.min_dist = ep.min_distance();
        row.path_len = ep.path_length();
        row.straight = ep.world.straight_distance();
        row.steps = ep.steps();
        row.end_reason = ep.end_reason;
        const bool clean_end = ep.end_reason != EndReason::Collision &&
                               ep.end_reason != EndReason::NumericalFailure;
        row.success = clean_end && row.final_dist < success_radius;

        ne += row.final_dist;
        sr += row.success ? 1.0 : 0.0;
        osr += row.min_dist < success_radius ? 1.0 : 0.0;
        if (row.success) spl += row.straight / std::max(row.path_len, row.straight);
        rep.rows.push_back(row);
    }
    const double n = static_cast<double>(episodes.size());
    rep.ne = ne / n;
    rep.sr = sr / n;
    rep.osr = osr / n;
    rep.spl = spl / n;
    return rep;
}

const char* end_reason_name(EndReason r) {
    switch (r) {
        case EndReason::Horizon: return "horizon";
        case EndReason::Stopped: return "stopped";
        case EndReason::Collision: return "collision";
        case EndReason::LeftArena: return "left_arena";
        case EndReason::NumericalFailure: return "numerical_failure";
    }
    return "unknown";
}

}  // namespace nk::env

// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "neurokalman/drift.hpp"
#include "neurokalman/env.hpp"

using namespace nk;
using namespace nk::env;

namespace {

double dist3(const Vec3& a, const Vec3& b) {
    const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

EnvConfig quiet_config() {
    EnvConfig cfg;
    cfg.feature_noise_std = 0.0;
    cfg.pos_noise_std = 0.0;
    cfg.corrupt_prob = 0.0;
    cfg.process_noise_std = 0.0;
    return cfg;
}

ModelConfig small_model(const EnvConfig& env_cfg) {
    ModelConfig cfg;
    cfg.latent_dim = 8;
    cfg.hidden_dim = 8;
    cfg.feat_dim = env_cfg.landmark_count;
    cfg.wp_embed_dim = 4;
    cfg.pos_embed_dim = 4;
    cfg.enc_hidden = 12;
    cfg.prior_proj_hidden = 8;
    cfg.wp_head_hidden = 8;
    cfg.pos_scale = env_cfg.pos_scale;
    return cfg;
}

}  // namespace

TEST_CASE("world generation is deterministic in the seed") {
    const EnvConfig cfg;
    const World a = generate_world(42, Difficulty::Easy, cfg);
    const World b = generate_world(42, Difficulty::Easy, cfg);
    CHECK(a.start == b.start);
    CHECK(a.target == b.target);
    CHECK(a.path == b.path);
    CHECK(a.landmarks == b.landmarks);

    const World c = generate_world(43, Difficulty::Easy, cfg);
    CHECK(a.start != c.start);
}

TEST_CASE("difficulty controls the start-target distance") {
    const EnvConfig cfg;
    for (uint64_t seed = 0; seed < 50; ++seed) {
        const World easy = generate_world(seed, Difficulty::Easy, cfg);
        const double de = easy.straight_distance();
        CHECK(de >= 50.0);
        CHECK(de < 250.0);
        const World hard = generate_world(seed, Difficulty::Hard, cfg);
        const double dh = hard.straight_distance();
        CHECK(dh >= 250.0);
        CHECK(dh <= 400.0);
    }
}

TEST_CASE("paths start at start, end at target, and respect the step spacing") {
    const EnvConfig cfg;
    for (uint64_t seed = 100; seed < 130; ++seed) {
        const World w = generate_world(seed, seed % 2 ? Difficulty::Hard : Difficulty::Easy, cfg);
        CHECK(w.path.front() == w.start);
        CHECK(dist3(w.path.back(), w.target) < 1e-9);
        for (size_t i = 0; i + 1 < w.path.size(); ++i)
            CHECK(dist3(w.path[i], w.path[i + 1]) <= cfg.max_step + 1e-9);
    }
}

TEST_CASE("generated paths clear every landmark collision sphere") {
    const EnvConfig cfg;
    for (uint64_t seed = 0; seed < 1000; ++seed) {
        const World w = generate_world(seed, seed % 2 ? Difficulty::Hard : Difficulty::Easy, cfg);
        for (const Vec3& p : w.path)
            for (const Vec3& l : w.landmarks) CHECK(dist3(p, l) > cfg.landmark_radius);
    }
}

TEST_CASE("noise-free observations are reproducible functions of position") {
    const EnvConfig cfg = quiet_config();
    const World w = generate_world(7, Difficulty::Easy, cfg);
    Rng rng_a(1), rng_b(2);  // different streams must not matter at zero noise
    const Vec3 pos = {w.start[0] + 5, w.start[1] - 3, w.start[2]};
    const Observation a = observe(w, pos, rng_a, cfg);
    const Observation b = observe(w, pos, rng_b, cfg);
    CHECK(a.local_feature == b.local_feature);
    CHECK(a.position[0] == pos[0]);
    CHECK(a.goal_embed == w.goal_embed);
}

TEST_CASE("the response at a landmark dominates the feature vector") {
    const EnvConfig cfg = quiet_config();
    const World w = generate_world(8, Difficulty::Easy, cfg);
    Rng rng(3);
    for (size_t li = 0; li < w.landmarks.size(); li += 4) {
        const Observation obs = observe(w, w.landmarks[li], rng, cfg);
        double best = -1;
        size_t best_idx = 0;
        for (size_t i = 0; i < obs.local_feature.size(); ++i)
            if (obs.local_feature[i] > best) {
                best = obs.local_feature[i];
                best_idx = i;
            }
        CHECK(best_idx == li);
        CHECK(best == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("empirical feature noise matches the configured std within 5 percent") {
    EnvConfig cfg = quiet_config();
    cfg.feature_noise_std = 0.07;
    const World w = generate_world(9, Difficulty::Easy, cfg);
    Rng rng(4);
    const Vec3 pos = w.start;
    const int n = 10000;
    std::vector<double> samples;
    samples.reserve(n);
    for (int i = 0; i < n; ++i) samples.push_back(observe(w, pos, rng, cfg).local_feature[0]);
    double mean = 0;
    for (double s : samples) mean += s;
    mean /= n;
    double var = 0;
    for (double s : samples) var += (s - mean) * (s - mean);
    const double std_hat = std::sqrt(var / (n - 1));
    CHECK(std_hat == doctest::Approx(0.07).epsilon(0.05));
}

TEST_CASE("expert waypoint stops inside the success radius") {
    const EnvConfig cfg = quiet_config();
    const World w = generate_world(10, Difficulty::Easy, cfg);
    CHECK(expert_waypoint(w, w.target, cfg).norm() == 0.0);
    const Vec3 near_target = {w.target[0] + 10.0, w.target[1], w.target[2]};
    CHECK(expert_waypoint(w, near_target, cfg).norm() == 0.0);
}

TEST_CASE("expert waypoint on-path far from the target is exactly max_step") {
    const EnvConfig cfg = quiet_config();
    for (uint64_t seed = 20; seed < 30; ++seed) {
        const World w = generate_world(seed, Difficulty::Hard, cfg);
        // Points at least three from the end and outside the success radius.
        for (size_t i = 0; i + 3 < w.path.size(); i += 5) {
            if (dist3(w.path[i], w.target) <= cfg.success_radius) continue;
            const Waypoint wp = expert_waypoint(w, w.path[i], cfg);
            CHECK(wp.norm() == doctest::Approx(cfg.max_step).epsilon(1e-12));
        }
    }
}

TEST_CASE("greedy expert reaches the target from random nearby positions") {
    const EnvConfig cfg = quiet_config();
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const World w = generate_world(static_cast<uint64_t>(1000 + trial),
                                       trial % 2 ? Difficulty::Hard : Difficulty::Easy, cfg);
        Vec3 pos = {w.start[0] + rng.uniform(-25, 25), w.start[1] + rng.uniform(-25, 25),
                    w.start[2] + rng.uniform(-10, 10)};
        bool reached = false;
        for (int t = 0; t < cfg.horizon; ++t) {
            if (dist3(pos, w.target) < 20.0) {
                reached = true;
                break;
            }
            const Waypoint wp = expert_waypoint(w, pos, cfg);
            if (wp.norm() == 0.0) {
                reached = dist3(pos, w.target) <= cfg.success_radius;
                break;
            }
            pos = {pos[0] + wp.displacement[0], pos[1] + wp.displacement[1],
                   pos[2] + wp.displacement[2]};
        }
        CHECK(reached);
    }
}

TEST_CASE("zero horizon yields one position and no waypoints") {
    EnvConfig cfg = quiet_config();
    cfg.horizon = 0;
    const World w = generate_world(11, Difficulty::Easy, cfg);
    const Model model = Model::create(small_model(cfg), 1);
    const Episode ep = rollout(model, model.params, w, RolloutMode::ClosedLoop, cfg, 1);
    CHECK(ep.agent_positions.size() == 1);
    CHECK(ep.executed_waypoints.empty());
    CHECK(ep.observations.empty());
}

TEST_CASE("teacher forcing traces the expert path within the step size") {
    const EnvConfig cfg = quiet_config();
    const Model model = Model::create(small_model(cfg), 2);
    for (uint64_t seed = 40; seed < 44; ++seed) {
        const World w = generate_world(seed, Difficulty::Easy, cfg);
        const Episode ep = rollout(model, model.params, w, RolloutMode::TeacherForced, cfg, seed);
        CHECK(ep.end_reason == EndReason::Stopped);
        for (int t = 0; t < static_cast<int>(ep.agent_positions.size()); ++t)
            CHECK(ep.position_error(t) <= cfg.max_step + 1e-9);
        CHECK(ep.final_distance() <= cfg.success_radius);
        // positions invariant
        CHECK(ep.agent_positions.size() == ep.executed_waypoints.size() + 1);
        CHECK(ep.observations.size() == ep.executed_waypoints.size());
    }
}

TEST_CASE("teacher-forced positions are independent of the waypoint head") {
    const EnvConfig cfg = quiet_config();
    const ModelConfig mc = small_model(cfg);
    Model a = Model::create(mc, 3);
    Model b = Model::create(mc, 3);
    // Scramble only the waypoint head of b.
    Rng rng(6);
    for (auto& entry : b.params.entries()) {
        if (entry.name.rfind("wp_head.", 0) != 0) continue;
        if (std::holds_alternative<Mat>(entry.value))
            for (double& v : std::get<Mat>(entry.value).a) v = rng.uniform(-1, 1);
        else
            for (double& v : std::get<Vec>(entry.value)) v = rng.uniform(-1, 1);
    }
    const World w = generate_world(50, Difficulty::Easy, cfg);
    const Episode ea = rollout(a, a.params, w, RolloutMode::TeacherForced, cfg, 9);
    const Episode eb = rollout(b, b.params, w, RolloutMode::TeacherForced, cfg, 9);
    CHECK(ea.agent_positions == eb.agent_positions);
}

TEST_CASE("rollouts are bit-identical given the same seed and parameters") {
    EnvConfig cfg;  // default noisy config
    cfg.horizon = 60;
    const Model model = Model::create(small_model(cfg), 4);
    const World w = generate_world(60, Difficulty::Easy, cfg);
    const Episode a = rollout(model, model.params, w, RolloutMode::ClosedLoop, cfg, 77);
    const Episode b = rollout(model, model.params, w, RolloutMode::ClosedLoop, cfg, 77);
    CHECK(a.agent_positions == b.agent_positions);
    CHECK(a.end_reason == b.end_reason);
    REQUIRE(a.step_traces.size() == b.step_traces.size());
    for (size_t i = 0; i < a.step_traces.size(); ++i) {
        CHECK(a.step_traces[i].sigma == b.step_traces[i].sigma);
        CHECK(a.step_traces[i].mean_gain == b.step_traces[i].mean_gain);
    }
}

TEST_CASE("untrained closed-loop rollouts do not solve the task") {
    EnvConfig cfg;
    cfg.horizon = 120;
    const ModelConfig mc = small_model(cfg);
    double ne_sum = 0.0, d0_sum = 0.0;
    for (uint64_t seed = 0; seed < 50; ++seed) {
        const Model model = Model::create(mc, 1234);
        const World w = generate_world(3000 + seed, seed % 2 ? Difficulty::Hard : Difficulty::Easy,
                                       cfg);
        const Episode ep = rollout(model, model.params, w, RolloutMode::ClosedLoop, cfg, seed);
        ne_sum += ep.final_distance();
        d0_sum += w.straight_distance();
    }
    CHECK(ne_sum / 50.0 > d0_sum / 50.0 / 2.0);
}

TEST_CASE("metric formulas and invariants") {
    const EnvConfig cfg = quiet_config();
    const World w = generate_world(70, Difficulty::Easy, cfg);

    auto make_episode = [&](double final_dist, double extra_path) {
        Episode ep;
        ep.world = w;
        ep.agent_positions.push_back(w.start);
        // Move along the straight line toward the target, possibly overshooting
        // path length via a detour leg.
        const double straight = w.straight_distance();
        if (extra_path > 0) {
            ep.agent_positions.push_back({w.start[0], w.start[1] + extra_path / 2.0, w.start[2]});
            ep.agent_positions.push_back(w.start);
            ep.executed_waypoints.push_back({});
            ep.executed_waypoints.push_back({});
        }
        const double frac = (straight - final_dist) / straight;
        ep.agent_positions.push_back({w.start[0] + (w.target[0] - w.start[0]) * frac,
                                      w.start[1] + (w.target[1] - w.start[1]) * frac,
                                      w.start[2] + (w.target[2] - w.start[2]) * frac});
        ep.executed_waypoints.push_back({});
        ep.end_reason = EndReason::Stopped;
        return ep;
    };

    SUBCASE("single success just inside the radius") {
        const std::vector<Episode> eps = {make_episode(19.9, 0.0)};
        const MetricReport rep = compute_metrics(eps, 20.0);
        CHECK(rep.sr == 1.0);
        CHECK(rep.osr == 1.0);
        CHECK(rep.ne == doctest::Approx(19.9).epsilon(1e-9));
    }

    SUBCASE("an agent that never moves scores zero everywhere") {
        Episode ep;
        ep.world = w;
        ep.agent_positions.push_back(w.start);
        ep.end_reason = EndReason::Horizon;
        const MetricReport rep = compute_metrics(std::vector<Episode>{ep}, 20.0);
        CHECK(rep.ne == doctest::Approx(w.straight_distance()));
        CHECK(rep.sr == 0.0);
        CHECK(rep.osr == 0.0);
        CHECK(rep.spl == 0.0);
    }

    SUBCASE("spl contribution is l / p for a path twice as long") {
        // Success with total path length == 2 x straight-line distance.
        Episode ep = make_episode(0.0, w.straight_distance());
        const MetricReport rep = compute_metrics(std::vector<Episode>{ep}, 20.0);
        CHECK(rep.sr == 1.0);
        CHECK(rep.spl == doctest::Approx(0.5).epsilon(1e-9));
    }

    SUBCASE("sr <= osr and spl <= sr over a mixed batch") {
        std::vector<Episode> eps;
        for (double fd : {5.0, 19.9, 20.0, 45.0, 150.0}) eps.push_back(make_episode(fd, 30.0));
        const MetricReport rep = compute_metrics(eps, 20.0);
        CHECK(rep.sr <= rep.osr);
        CHECK(rep.spl <= rep.sr);
    }

    SUBCASE("exactly 20 m is not a success") {
        // Construct the boundary distance exactly (single-axis offset).
        Episode ep;
        ep.world = w;
        ep.agent_positions = {w.start, {w.target[0] - 20.0, w.target[1], w.target[2]}};
        ep.executed_waypoints.push_back({});
        ep.end_reason = EndReason::Stopped;
        CHECK(ep.final_distance() == 20.0);
        CHECK(compute_metrics(std::vector<Episode>{ep}, 20.0).sr == 0.0);
    }

    SUBCASE("collision forfeits success even when close") {
        Episode ep = make_episode(5.0, 0.0);
        ep.end_reason = EndReason::Collision;
        const MetricReport rep = compute_metrics(std::vector<Episode>{ep}, 20.0);
        CHECK(rep.sr == 0.0);
        CHECK(rep.osr == 1.0);  // oracle still counts the близость
    }

    SUBCASE("empty episode list is a configuration error") {
        CHECK_THROWS_AS(compute_metrics(std::vector<Episode>{}, 20.0), ConfigError);
    }
}

TEST_CASE("make_worlds respects the split") {
    const EnvConfig cfg;
    for (const World& w : lab::make_worlds(5, 8, "easy", cfg))
        CHECK(w.straight_distance() < 250.0);
    for (const World& w : lab::make_worlds(5, 8, "hard", cfg))
        CHECK(w.straight_distance() >= 250.0);
    const auto full = lab::make_worlds(5, 8, "full", cfg);
    int easy = 0, hard = 0;
    for (const World& w : full) (w.straight_distance() < 250.0 ? easy : hard) += 1;
    CHECK(easy == 4);
    CHECK(hard == 4);
}

// SPDX-License-Identifier: Apache-2.0
#include "neurokalman/verify.hpp"

#include <cmath>

#include "neurokalman/drift.hpp"
#include "neurokalman/grad_check.hpp"
#include "neurokalman/kalman.hpp"
#include "neurokalman/retrieval.hpp"
#include "neurokalman/trainer.hpp"

namespace nk::verify {

namespace {

Vec random_vec(Rng& rng, int n, double lo = -3.0, double hi = 3.0) {
    Vec v(static_cast<size_t>(n));
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

SuiteResult make_result(const std::string& name, bool pass, double worst,
                        const std::string& detail) {
    return {name, pass, worst, detail};
}

// Small synthetic episode record for the composed-loss gradient check.
env::EpisodeRecord synthetic_record(const ModelConfig& cfg, int steps, uint64_t seed) {
    Rng rng(seed, 0x726563ULL);
    env::EpisodeRecord rec;
    for (int t = 0; t < steps; ++t) {
        env::StepInputs in;
        in.feature = random_vec(rng, cfg.feat_dim, -1.0, 1.0);
        in.evidence = random_vec(rng, cfg.feat_dim, -1.0, 1.0);
        in.goal = random_vec(rng, cfg.goal_dim, -1.0, 1.0);
        in.obs_position = {rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50)};
        in.expert = {{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-1, 1)}};
        in.executed = {{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-1, 1)}};
        rec.steps.push_back(std::move(in));
    }
    return rec;
}

ModelConfig small_model_config() {
    ModelConfig cfg;
    cfg.latent_dim = 8;
    cfg.hidden_dim = 8;
    cfg.feat_dim = 6;
    cfg.goal_dim = 8;
    cfg.wp_embed_dim = 4;
    cfg.pos_embed_dim = 4;
    cfg.enc_hidden = 10;
    cfg.prior_proj_hidden = 8;
    cfg.wp_head_hidden = 8;
    return cfg;
}

}  // namespace

SuiteResult kde_attention_suite(double scale_mutation) {
    Rng rng(20240601);
    double worst = 0.0;
    for (int iter = 0; iter < 1000; ++iter) {
        const int n = rng.uniform_int(1, 64);
        const int d = rng.uniform_int(1, 32);
        std::vector<Vec> keys;
        keys.reserve(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) keys.push_back(random_vec(rng, d));
        const Vec q = random_vec(rng, d);

        const double scale = scale_mutation / std::sqrt(static_cast<double>(d));
        const AttentionResult att = attention(q, keys, keys, scale);
        const Vec nw = nw_oracle(q, keys, keys);
        for (size_t k = 0; k < nw.size(); ++k)
            worst = std::max(worst, std::abs(nw[k] - att.output[k]));

        double wsum = 0.0;
        for (double w : att.weights) {
            if (w < 0.0) worst = std::max(worst, -w);
            wsum += w;
        }
        worst = std::max(worst, std::abs(wsum - 1.0));
    }

    // Empty-memory fallback: the query passes through untouched.
    {
        MemoryBank bank(4, 0.5);
        const Vec q = random_vec(rng, 8);
        const RetrievalResult res = retrieve(q, bank);
        if (res.used_memory || res.evidence != q || !res.weights.empty())
            return make_result("kde_attention_equivalence", false, worst,
                               "empty-memory fallback violated");
    }

    const bool pass = worst < 1e-10;
    return make_result("kde_attention_equivalence", pass, worst,
                       "1000 random instances, N<=64, d<=32");
}

SuiteResult fusion_identity_suite() {
    Rng rng(20240602);
    double worst = 0.0;
    for (int iter = 0; iter < 10000; ++iter) {
        const int d = rng.uniform_int(1, 16);
        const Vec z = random_vec(rng, d);
        const Vec r = random_vec(rng, d);
        Vec k(static_cast<size_t>(d));
        for (double& v : k) v = rng.uniform(1e-6, 1.0 - 1e-6);
        for (int i = 0; i < d; ++i) {
            const size_t si = static_cast<size_t>(i);
            const double residual_form = z[si] + k[si] * (r[si] - z[si]);
            const double convex_form = (1.0 - k[si]) * z[si] + k[si] * r[si];
            worst = std::max(worst, std::abs(residual_form - convex_form));
        }
    }
    return make_result("fusion_identity", worst < 1e-12, worst, "1e4 random triples");
}

SuiteResult grad_check_suite() {
    Rng rng(20240603);
    double worst = 0.0;
    std::string worst_block = "none";
    auto track = [&](const GradCheckReport& rep) {
        if (rep.max_rel_error > worst) {
            worst = rep.max_rel_error;
            worst_block = rep.block;
        }
    };

    // MLP with every activation in the stack.
    {
        const Mlp mlp("blk", 5, {{7, Act::Tanh}, {6, Act::Sigmoid}, {4, Act::Relu}, {3, Act::Identity}});
        ParamSet ps;
        Rng init(1);
        mlp.init(ps, init);
        const Vec x = random_vec(rng, 5, -1, 1);
        const Vec target = random_vec(rng, 3, -1, 1);
        track(grad_check("mlp", [&](const ParamSet& p, ParamSet& g) {
            Mlp::Cache cache;
            const Vec y = mlp.forward(p, x, cache);
            Vec dy(y.size());
            double loss = 0.0;
            for (size_t i = 0; i < y.size(); ++i) {
                loss += 0.5 * (y[i] - target[i]) * (y[i] - target[i]);
                dy[i] = y[i] - target[i];
            }
            mlp.backward(p, cache, dy, g);
            return loss;
        }, ps));
    }

    // GRU step.
    {
        const GruCell gru("gru", 5, 6);
        ParamSet ps;
        Rng init(2);
        gru.init(ps, init);
        const Vec x = random_vec(rng, 5, -1, 1);
        const Vec h0 = random_vec(rng, 6, -1, 1);
        const Vec target = random_vec(rng, 6, -1, 1);
        track(grad_check("gru_step", [&](const ParamSet& p, ParamSet& g) {
            GruCell::Cache cache;
            const Vec h = gru.step(p, x, h0, cache);
            Vec dh(h.size());
            double loss = 0.0;
            for (size_t i = 0; i < h.size(); ++i) {
                loss += 0.5 * (h[i] - target[i]) * (h[i] - target[i]);
                dh[i] = h[i] - target[i];
            }
            gru.backward(p, cache, dh, g);
            return loss;
        }, ps));
    }

    // Attention with query/keys/values as the checked parameters.
    {
        const int n = 5, d = 4;
        ParamSet ps;
        Rng init(3);
        {
            Vec& q = ps.add_vec("q", d);
            for (double& v : q) v = init.uniform(-1, 1);
            Mat& km = ps.add_mat("K", n, d);
            for (double& v : km.a) v = init.uniform(-1, 1);
            Mat& vm = ps.add_mat("V", n, d);
            for (double& v : vm.a) v = init.uniform(-1, 1);
        }
        const Vec target = random_vec(rng, d, -1, 1);
        const double scale = 1.0 / std::sqrt(static_cast<double>(d));
        track(grad_check("attention", [&](const ParamSet& p, ParamSet& g) {
            const Mat& km = p.mat("K");
            const Mat& vm = p.mat("V");
            std::vector<Vec> keys(n), values(n);
            for (int i = 0; i < n; ++i) {
                keys[static_cast<size_t>(i)].assign(km.a.begin() + i * d, km.a.begin() + (i + 1) * d);
                values[static_cast<size_t>(i)].assign(vm.a.begin() + i * d, vm.a.begin() + (i + 1) * d);
            }
            const AttentionResult fwd = attention(p.vec("q"), keys, values, scale);
            Vec dout(fwd.output.size());
            double loss = 0.0;
            for (size_t i = 0; i < fwd.output.size(); ++i) {
                loss += 0.5 * (fwd.output[i] - target[i]) * (fwd.output[i] - target[i]);
                dout[i] = fwd.output[i] - target[i];
            }
            const AttentionGrad ag = attention_backward(p.vec("q"), keys, values, scale, fwd, dout);
            add_inplace(g.vec("q"), ag.dquery);
            Mat& gk = g.mat("K");
            Mat& gv = g.mat("V");
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < d; ++j) {
                    gk(i, j) += ag.dkeys[static_cast<size_t>(i)][static_cast<size_t>(j)];
                    gv(i, j) += ag.dvalues[static_cast<size_t>(i)][static_cast<size_t>(j)];
                }
            return loss;
        }, ps));
    }

    // Gain network composed with fusion.
    {
        const int d = 6;
        const GainNetwork gn = GainNetwork::make(d);
        ParamSet ps;
        Rng init(4);
        gn.init(ps, init);
        const Vec z_tilde = random_vec(rng, d);
        const Vec r = random_vec(rng, d);
        const double sigma = 0.7;
        const Vec target = random_vec(rng, d);
        track(grad_check("compute_gain_fuse", [&](const ParamSet& p, ParamSet& g) {
            GainNetwork::Cache cache;
            const Vec residual = sub(r, z_tilde);
            const GainVector k = gn.compute(p, residual, sigma, cache);
            const CorrectionOutput out = fuse(z_tilde, r, k);
            Vec dz(out.z_post.size());
            double loss = 0.0;
            for (size_t i = 0; i < out.z_post.size(); ++i) {
                loss += 0.5 * (out.z_post[i] - target[i]) * (out.z_post[i] - target[i]);
                dz[i] = out.z_post[i] - target[i];
            }
            Vec dk(dz.size());
            for (size_t i = 0; i < dz.size(); ++i) dk[i] = dz[i] * residual[i];
            gn.backward(p, cache, dk, g);
            return loss;
        }, ps));
    }

    // Measurement encoder, both heads.
    {
        const MeasurementEncoder enc = MeasurementEncoder::make(5, 4, 3, 8, 6, 100.0);
        ParamSet ps;
        Rng init(5);
        enc.init(ps, init);
        Observation obs;
        obs.position = {12.0, -4.0, 33.0};
        obs.local_feature = random_vec(rng, 5, -1, 1);
        obs.goal_embed = random_vec(rng, 4, -1, 1);
        RetrievalResult ret;
        ret.evidence = random_vec(rng, 5, -1, 1);
        const Vec target = random_vec(rng, 6, -1, 1);
        track(grad_check("measurement_encoder", [&](const ParamSet& p, ParamSet& g) {
            MeasurementEncoder::Cache cache;
            const Measurement m = enc.encode(p, obs, ret, cache);
            Vec dr(m.r.size());
            double loss = 0.0;
            for (size_t i = 0; i < m.r.size(); ++i) {
                loss += 0.5 * (m.r[i] - target[i]) * (m.r[i] - target[i]);
                dr[i] = m.r[i] - target[i];
            }
            loss += 0.5 * (m.sigma - 0.25) * (m.sigma - 0.25);
            enc.backward(p, cache, dr, m.sigma - 0.25, g);
            return loss;
        }, ps));
    }

    // Full composed episode loss with BPTT across steps.
    {
        const ModelConfig cfg = small_model_config();
        Model model = Model::create(cfg, 77);
        const env::EpisodeRecord rec = synthetic_record(cfg, 5, 99);
        track(grad_check("composed_episode_loss", [&](const ParamSet& p, ParamSet& g) {
            return train::episode_loss(model, p, rec, 0.2, 3, &g).total;
        }, model.params));
    }

    const bool pass = worst < 1e-4;
    return make_result("grad_checks", pass, worst, "worst block: " + worst_block);
}

SuiteResult kalman_oracle_suite() {
    double worst = 0.0;

    // Two-step 1D filter against the conjugate-Gaussian closed form.
    {
        kf::LinearGaussianModel m;
        m.A = Mat(1, 1);
        m.A(0, 0) = 1.0;
        m.H = Mat(1, 1);
        m.H(0, 0) = 1.0;
        m.Q = Mat(1, 1);  // zero process noise: pure conjugate updates
        m.R = Mat(1, 1);
        m.R(0, 0) = 2.0;

        kf::GaussianBelief b;
        b.mean = {0.5};
        b.covariance = Mat(1, 1);
        b.covariance(0, 0) = 4.0;

        const double y1 = 1.7, y2 = -0.3;
        kf::GaussianBelief post = kf::update(kf::predict(b, m, {0.0}), m, {y1});
        post = kf::update(kf::predict(post, m, {0.0}), m, {y2});

        // Conjugate normal with known variance: precision adds, means
        // precision-average.
        const double prec = 1.0 / 4.0 + 1.0 / 2.0 + 1.0 / 2.0;
        const double mean = (0.5 / 4.0 + y1 / 2.0 + y2 / 2.0) / prec;
        worst = std::max(worst, std::abs(post.mean[0] - mean));
        worst = std::max(worst, std::abs(post.covariance(0, 0) - 1.0 / prec));
    }

    // argmin fusion equals the Kalman update for H = I, diagonal covariances.
    {
        Rng rng(20240604);
        for (int iter = 0; iter < 100; ++iter) {
            const int d = rng.uniform_int(1, 8);
            kf::GaussianBelief prior;
            prior.mean = random_vec(rng, d);
            prior.covariance = Mat(d, d);
            Mat obs_cov(d, d);
            for (int i = 0; i < d; ++i) {
                prior.covariance(i, i) = rng.uniform(0.05, 4.0);
                obs_cov(i, i) = rng.uniform(0.05, 4.0);
            }
            const Vec obs = random_vec(rng, d);

            kf::LinearGaussianModel m;
            m.A = Mat::identity(d);
            m.H = Mat::identity(d);
            m.Q = Mat(d, d);
            m.R = obs_cov;
            const kf::GaussianBelief post = kf::update(prior, m, obs);
            const Vec fused = kf::argmin_fusion(prior, obs, obs_cov);
            for (int i = 0; i < d; ++i)
                worst = std::max(worst,
                                 std::abs(post.mean[static_cast<size_t>(i)] - fused[static_cast<size_t>(i)]));
        }
    }

    return make_result("kalman_oracle", worst < 1e-10, worst,
                       "conjugate closed form + argmin fusion cross-check");
}

SuiteResult metric_invariant_suite() {
    env::EnvConfig cfg;
    cfg.horizon = 30;
    cfg.process_noise_std = 0.0;

    std::vector<env::Episode> episodes;
    for (int i = 0; i < 6; ++i) {
        const env::World w = env::generate_world(500 + static_cast<uint64_t>(i),
                                                 env::Difficulty::Easy, cfg);
        env::Episode ep;
        ep.world = w;
        ep.agent_positions.push_back(w.start);
        // Walk part of the route, then retreat: makes min-distance < final.
        const size_t reach = w.path.size() * static_cast<size_t>(i + 1) / 7;
        for (size_t p = 1; p <= reach && p < w.path.size(); ++p) {
            ep.agent_positions.push_back(w.path[p]);
            ep.executed_waypoints.push_back({});
        }
        ep.agent_positions.push_back(w.start);
        ep.executed_waypoints.push_back({});
        ep.end_reason = env::EndReason::Stopped;
        episodes.push_back(std::move(ep));
    }
    const env::MetricReport rep = env::compute_metrics(episodes, cfg.success_radius);
    bool ok = rep.sr <= rep.osr + 1e-15 && rep.spl <= rep.sr + 1e-15;

    // Success boundary: exactly 20 m is a miss, anything under succeeds.
    {
        const env::World w = env::generate_world(321, env::Difficulty::Easy, cfg);
        const Vec3 t = w.target;
        auto episode_at = [&](double dist) {
            env::Episode ep;
            ep.world = w;
            ep.agent_positions = {w.start, {t[0] - dist, t[1], t[2]}};
            ep.executed_waypoints.push_back({});
            ep.end_reason = env::EndReason::Stopped;
            return ep;
        };
        const std::vector<env::Episode> at{episode_at(20.0)};
        const std::vector<env::Episode> under{episode_at(19.9)};
        ok = ok && env::compute_metrics(at, 20.0).sr == 0.0 &&
             env::compute_metrics(under, 20.0).sr == 1.0;
    }
    return make_result("metric_invariants", ok, 0.0, "SR<=OSR, SPL<=SR, 20 m boundary");
}

SuiteResult memory_policy_suite() {
    Rng rng(20240605);
    bool ok = true;
    for (int iter = 0; iter < 10000 && ok; ++iter) {
        const int capacity = rng.uniform_int(1, 16);
        const double threshold = rng.uniform(0.0, 1.0);
        MemoryBank bank(capacity, threshold);
        const int inserts = rng.uniform_int(0, 40);
        for (int i = 0; i < inserts; ++i) {
            const double sigma = rng.uniform(0.0, 1.0);
            const bool stored = bank.try_store(random_vec(rng, 3), i, sigma);
            if (stored != (sigma > threshold)) ok = false;
            if (static_cast<int>(bank.size()) > capacity) ok = false;
        }
        for (const MemoryAnchor& a : bank.anchors())
            if (!(a.confidence > threshold)) ok = false;
        const MemoryBank::Snapshot snap = bank.snapshot();
        if (snap.keys != snap.values) ok = false;
    }
    return make_result("memory_policy", ok, 0.0, "1e4 random insertion sequences");
}

SuiteResult contraction_suite() {
    double worst = 0.0;
    for (double lambda : {0.9, 1.05, 1.1, 1.3})
        for (double k : {0.2, 0.5, 0.8})
            for (double xi : {0.01, 0.1, 1.0}) {
                const lab::ContractionTrace trace = lab::contraction_check(lambda, k, xi, 1.0, 400);
                if ((1.0 - k) * lambda < 1.0) {
                    const double fp = xi * k / (1.0 - (1.0 - k) * lambda);
                    worst = std::max(worst, std::abs(trace.epsilon.back() - fp));
                    worst = std::max(worst, std::abs(trace.fixed_point - fp));
                    if (trace.diverges) worst = std::max(worst, 1.0);
                } else if (!trace.diverges) {
                    worst = std::max(worst, 1.0);
                }
            }
    return make_result("contraction_recursion", worst < 1e-9, worst,
                       "fixed point vs closed form over a (lambda,k,xi) grid");
}

std::vector<SuiteResult> run_all() {
    return {kde_attention_suite(),  fusion_identity_suite(), grad_check_suite(),
            kalman_oracle_suite(),  metric_invariant_suite(), memory_policy_suite(),
            contraction_suite()};
}

}  // namespace nk::verify

// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "neurokalman/grad_check.hpp"
#include "neurokalman/model.hpp"
#include "neurokalman/retrieval.hpp"

using namespace nk;

namespace {

Vec rand_vec(Rng& rng, int n, double lo = -1.0, double hi = 1.0) {
    Vec v(static_cast<size_t>(n));
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.latent_dim = 6;
    cfg.hidden_dim = 6;
    cfg.feat_dim = 5;
    cfg.goal_dim = 8;
    cfg.wp_embed_dim = 3;
    cfg.pos_embed_dim = 3;
    cfg.enc_hidden = 8;
    cfg.prior_proj_hidden = 6;
    cfg.wp_head_hidden = 6;
    return cfg;
}

Observation random_obs(Rng& rng, const ModelConfig& cfg) {
    Observation obs;
    obs.position = {rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(10, 80)};
    obs.local_feature = rand_vec(rng, cfg.feat_dim);
    obs.goal_embed = rand_vec(rng, cfg.goal_dim);
    return obs;
}

}  // namespace

// ---------------------------------------------------------------------------
// memory bank
// ---------------------------------------------------------------------------

TEST_CASE("store happens only above the strict threshold") {
    MemoryBank bank(10, 0.5);
    CHECK(bank.try_store({1.0}, 0, 0.6));
    CHECK_FALSE(bank.try_store({2.0}, 1, 0.5));  // boundary: strict inequality
    CHECK_FALSE(bank.try_store({3.0}, 2, 0.1));
    CHECK(bank.size() == 1);
}

TEST_CASE("capacity evicts the oldest anchor") {
    MemoryBank bank(10, 0.5);
    for (int i = 0; i < 11; ++i) CHECK(bank.try_store({static_cast<double>(i)}, i + 1, 0.9));
    CHECK(bank.size() == 10);
    CHECK(bank.anchors().front().step == 2);
    CHECK(bank.anchors().back().step == 11);
}

TEST_CASE("snapshot returns anchors in order with key == value") {
    MemoryBank bank(3, 0.5);
    CHECK(bank.snapshot().keys.empty());
    CHECK(bank.snapshot().values.empty());

    for (int i = 0; i < 5; ++i) bank.try_store({static_cast<double>(i), 1.0}, i, 0.8);
    const MemoryBank::Snapshot snap = bank.snapshot();
    REQUIRE(snap.keys.size() == 3);
    CHECK(snap.keys == snap.values);
    CHECK(snap.keys[0][0] == 2.0);
    CHECK(snap.keys[2][0] == 4.0);
}

TEST_CASE("memory invariants hold under random insertion sequences") {
    Rng rng(55);
    for (int iter = 0; iter < 500; ++iter) {
        const int cap = rng.uniform_int(1, 8);
        const double thr = rng.uniform(0.0, 1.0);
        MemoryBank bank(cap, thr);
        for (int i = 0; i < 30; ++i) {
            const double sigma = rng.uniform(0.0, 1.0);
            bank.try_store(rand_vec(rng, 2), i, sigma);
            CHECK(static_cast<int>(bank.size()) <= cap);
        }
        for (const MemoryAnchor& a : bank.anchors()) CHECK(a.confidence > thr);
    }
}

TEST_CASE("anchor dump has one row per anchor") {
    MemoryBank bank(4, 0.5);
    bank.try_store({1.0, 2.0}, 3, 0.7);
    bank.try_store({0.5, -1.0}, 5, 0.9);
    const std::string csv = bank.dump_csv();
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + 2 rows
    CHECK(csv.find("step,confidence,feature_hash") == 0);
}

// ---------------------------------------------------------------------------
// KDE retrieval
// ---------------------------------------------------------------------------

TEST_CASE("retrieve on an empty bank falls back to the query") {
    MemoryBank bank(4, 0.5);
    const Vec q = {0.3, -0.2, 1.0};
    const RetrievalResult res = retrieve(q, bank);
    CHECK_FALSE(res.used_memory);
    CHECK(res.evidence == q);
    CHECK(res.weights.empty());
}

TEST_CASE("retrieve with a single anchor returns that anchor") {
    MemoryBank bank(4, 0.5);
    const Vec f = {1.0, 2.0, 3.0};
    bank.try_store(f, 0, 0.9);
    const RetrievalResult res = retrieve({0.1, 0.1, 0.1}, bank);
    CHECK(res.used_memory);
    CHECK(res.evidence == f);
    CHECK(res.weights == Vec{1.0});
}

TEST_CASE("equal dot products give equal weights and the mean") {
    MemoryBank bank(4, 0.5);
    bank.try_store({1.0, 0.0}, 0, 0.9);
    bank.try_store({0.0, 1.0}, 1, 0.9);
    const RetrievalResult res = retrieve({1.0, 1.0}, bank);  // symmetric query
    CHECK(res.weights[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(res.weights[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(res.evidence[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(res.evidence[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("retrieve equals the brute-force Nadaraya-Watson oracle") {
    Rng rng(60);
    for (int iter = 0; iter < 200; ++iter) {
        const int n = rng.uniform_int(1, 10);
        const int d = rng.uniform_int(1, 16);
        MemoryBank bank(16, 0.5);
        for (int i = 0; i < n; ++i) bank.try_store(rand_vec(rng, d, -3, 3), i, 0.9);
        const Vec q = rand_vec(rng, d, -3, 3);
        const RetrievalResult res = retrieve(q, bank);
        const MemoryBank::Snapshot snap = bank.snapshot();
        const Vec oracle = nw_oracle(q, snap.keys, snap.values);
        for (size_t k = 0; k < oracle.size(); ++k)
            CHECK(std::abs(res.evidence[k] - oracle[k]) < 1e-10);
    }
}

TEST_CASE("nw_oracle handles degenerate and adversarial inputs") {
    // N = 1
    CHECK(nw_oracle({1.0}, std::vector<Vec>{{2.0}}, std::vector<Vec>{{5.0}}) == Vec{5.0});

    // identical keys -> unweighted mean of values
    {
        std::vector<Vec> keys(4, Vec{1.0, 1.0});
        std::vector<Vec> values = {{1.0, 0.0}, {3.0, 0.0}, {5.0, 0.0}, {7.0, 0.0}};
        const Vec out = nw_oracle({0.5, -0.5}, keys, values);
        CHECK(out[0] == doctest::Approx(4.0).epsilon(1e-12));
    }

    // dot products around +/- 500: must stay finite and match retrieve()
    {
        const int d = 4;
        MemoryBank bank(4, 0.5);
        const double big = 500.0 * std::sqrt(static_cast<double>(d));
        bank.try_store({big, 0, 0, 0}, 0, 0.9);
        bank.try_store({-big, 0, 0, 0}, 1, 0.9);
        const Vec q = {1.0, 0.0, 0.0, 0.0};
        const MemoryBank::Snapshot snap = bank.snapshot();
        const Vec oracle = nw_oracle(q, snap.keys, snap.values);
        const RetrievalResult res = retrieve(q, bank);
        for (size_t k = 0; k < oracle.size(); ++k) {
            CHECK(std::isfinite(oracle[k]));
            CHECK(std::abs(res.evidence[k] - oracle[k]) < 1e-10);
        }
    }
}

TEST_CASE("evidence stays inside the convex hull of stored values") {
    Rng rng(61);
    for (int iter = 0; iter < 100; ++iter) {
        const int n = rng.uniform_int(2, 8);
        const int d = 6;
        MemoryBank bank(8, 0.5);
        std::vector<Vec> stored;
        for (int i = 0; i < n; ++i) {
            stored.push_back(rand_vec(rng, d, -3, 3));
            bank.try_store(stored.back(), i, 0.9);
        }
        const RetrievalResult res = retrieve(rand_vec(rng, d, -3, 3), bank);
        for (int k = 0; k < d; ++k) {
            double lo = stored[0][static_cast<size_t>(k)], hi = lo;
            for (const Vec& s : stored) {
                lo = std::min(lo, s[static_cast<size_t>(k)]);
                hi = std::max(hi, s[static_cast<size_t>(k)]);
            }
            CHECK(res.evidence[static_cast<size_t>(k)] >= lo - 1e-12);
            CHECK(res.evidence[static_cast<size_t>(k)] <= hi + 1e-12);
        }
    }
}

// ---------------------------------------------------------------------------
// measurement encoder
// ---------------------------------------------------------------------------

TEST_CASE("zero encoder params give sigma exactly 0.5 and r = 0") {
    const ModelConfig cfg = tiny_config();
    const Model model = Model::create_zeroed(cfg);
    Rng rng(70);
    const Observation obs = random_obs(rng, cfg);
    RetrievalResult ret;
    ret.evidence = obs.local_feature;
    const Measurement m = model.encoder.encode(model.params, obs, ret);
    CHECK(m.sigma == 0.5);
    for (double v : m.r) CHECK(v == 0.0);
}

TEST_CASE("encode is deterministic and passes the raw feature through") {
    const ModelConfig cfg = tiny_config();
    const Model model = Model::create(cfg, 123);
    Rng rng(71);
    const Observation obs = random_obs(rng, cfg);
    RetrievalResult ret;
    ret.evidence = rand_vec(rng, cfg.feat_dim);
    const Measurement a = model.encoder.encode(model.params, obs, ret);
    const Measurement b = model.encoder.encode(model.params, obs, ret);
    CHECK(a.r == b.r);
    CHECK(a.sigma == b.sigma);
    CHECK(a.feature == obs.local_feature);
    CHECK(a.sigma >= 0.0);
    CHECK(a.sigma <= 1.0);
}

TEST_CASE("encode is sensitive to the retrieved evidence") {
    const ModelConfig cfg = tiny_config();
    const Model model = Model::create(cfg, 124);
    Rng rng(72);
    const Observation obs = random_obs(rng, cfg);
    RetrievalResult ret;
    ret.evidence = rand_vec(rng, cfg.feat_dim);
    const Measurement base = model.encoder.encode(model.params, obs, ret);

    RetrievalResult perturbed = ret;
    for (double& v : perturbed.evidence) v += rng.uniform(0.05, 0.2);
    const Measurement moved = model.encoder.encode(model.params, obs, perturbed);
    double delta = 0.0;
    for (size_t i = 0; i < base.r.size(); ++i) delta += std::abs(moved.r[i] - base.r[i]);
    CHECK(delta > 0.0);
}

TEST_CASE("sigma stays in [0,1] across random parameterizations") {
    const ModelConfig cfg = tiny_config();
    Rng rng(73);
    for (int iter = 0; iter < 30; ++iter) {
        const Model model = Model::create(cfg, static_cast<uint64_t>(iter));
        const Observation obs = random_obs(rng, cfg);
        RetrievalResult ret;
        ret.evidence = rand_vec(rng, cfg.feat_dim, -10, 10);
        const Measurement m = model.encoder.encode(model.params, obs, ret);
        CHECK(m.sigma >= 0.0);
        CHECK(m.sigma <= 1.0);
    }
}

// ---------------------------------------------------------------------------
// prior predictor
// ---------------------------------------------------------------------------

TEST_CASE("init_prior with zero params gives h0 = 0 and z~0 = z0 = r0") {
    const ModelConfig cfg = tiny_config();
    const Model model = Model::create_zeroed(cfg);
    Measurement r0;
    r0.r = Vec(static_cast<size_t>(cfg.latent_dim), 0.0);
    const PriorState s = model.prior.init_prior(model.params, r0);
    for (double v : s.h) CHECK(v == 0.0);
    CHECK(s.z_tilde == r0.r);
}

TEST_CASE("init_prior is deterministic and h0 is strictly inside (-1,1)") {
    const ModelConfig cfg = tiny_config();
    const Model model = Model::create(cfg, 321);
    Rng rng(80);
    for (int iter = 0; iter < 50; ++iter) {
        Measurement r0;
        r0.r = rand_vec(rng, cfg.latent_dim, -5, 5);
        const PriorState a = model.prior.init_prior(model.params, r0);
        const PriorState b = model.prior.init_prior(model.params, r0);
        CHECK(a.h == b.h);
        for (double v : a.h) {
            CHECK(v > -1.0);
            CHECK(v < 1.0);
        }
    }
}

TEST_CASE("predict with zero params collapses to zero prior") {
    const ModelConfig cfg = tiny_config();
    const Model model = Model::create_zeroed(cfg);
    PriorState prev;
    prev.h = Vec(static_cast<size_t>(cfg.hidden_dim), 0.7);
    const PriorState next = model.prior.predict(model.params, prev,
                                                Vec(static_cast<size_t>(cfg.latent_dim), 0.3),
                                                {{1.0, 2.0, 3.0}});
    for (size_t i = 0; i < next.h.size(); ++i)
        CHECK(next.h[i] == doctest::Approx(0.35).epsilon(1e-15));  // 0.5 * h_prev
    for (double v : next.z_tilde) CHECK(v == 0.0);
}

TEST_CASE("repeated input drives the hidden state to a fixed point under contractive params") {
    const ModelConfig cfg = tiny_config();
    Model model = Model::create(cfg, 11);
    // Scale every GRU parameter well below 1 so the step map contracts.
    for (auto& entry : model.params.entries()) {
        if (entry.name.rfind("prior.gru.", 0) != 0) continue;
        if (std::holds_alternative<Mat>(entry.value))
            scale_inplace(std::get<Mat>(entry.value), 0.1);
        else
            scale_inplace(std::get<Vec>(entry.value), 0.1);
    }
    Rng rng(81);
    const Vec z_prev = rand_vec(rng, cfg.latent_dim);
    const Waypoint w{{0.5, -0.5, 0.2}};
    PriorState state;
    state.h = rand_vec(rng, cfg.hidden_dim);
    double prev_delta = 1e300;
    for (int t = 0; t < 25; ++t) {
        const PriorState next = model.prior.predict(model.params, state, z_prev, w);
        const double delta = norm(sub(next.h, state.h));
        if (t > 0) CHECK(delta <= prev_delta + 1e-12);
        prev_delta = delta;
        state = next;
    }
    CHECK(prev_delta < 1e-6);
}

TEST_CASE("the prior never reads the current observation") {
    const ModelConfig cfg = tiny_config();
    const Model model = Model::create(cfg, 99);
    Rng rng(82);
    FilterState state;
    state.h = rand_vec(rng, cfg.hidden_dim);
    state.z = rand_vec(rng, cfg.latent_dim);
    const Waypoint w{{1.0, 0.0, -0.5}};

    Model::StepCache cache_a, cache_b;
    const Observation obs_a = random_obs(rng, cfg);
    Observation obs_b = random_obs(rng, cfg);  // a completely different observation
    RetrievalResult ret_a, ret_b;
    ret_a.evidence = rand_vec(rng, cfg.feat_dim);
    ret_b.evidence = rand_vec(rng, cfg.feat_dim);

    model.filter_update(model.params, state, w, obs_a, ret_a, &cache_a);
    model.filter_update(model.params, state, w, obs_b, ret_b, &cache_b);
    CHECK(cache_a.z_tilde == cache_b.z_tilde);  // bit-identical prior
}

// ---------------------------------------------------------------------------
// kalman correction
// ---------------------------------------------------------------------------

TEST_CASE("zero gain params give K = 0.5 everywhere") {
    const GainNetwork gn = GainNetwork::make(5);
    ParamSet ps;
    Rng rng(83);
    gn.init(ps, rng);
    ps = ps.zeros_like();
    const GainVector k = gn.compute(ps, Vec(5, 0.3), 0.7);
    for (double v : k.k) CHECK(v == 0.5);
}

TEST_CASE("a saturated bias pins the gain to 1") {
    const GainNetwork gn = GainNetwork::make(4);
    ParamSet ps;
    Rng rng(84);
    gn.init(ps, rng);
    ps = ps.zeros_like();
    for (double& v : ps.vec("gain.bg")) v = 20.0;
    const GainVector k = gn.compute(ps, Vec(4, -0.2), 0.1);
    for (double v : k.k) CHECK(std::abs(v - 1.0) < 1e-8);
}

TEST_CASE("gain entries stay strictly inside (0,1) over random inputs") {
    const GainNetwork gn = GainNetwork::make(6);
    ParamSet ps;
    Rng rng(85);
    gn.init(ps, rng);
    for (int iter = 0; iter < 1000; ++iter) {
        const GainVector k = gn.compute(ps, rand_vec(rng, 6, -5, 5), rng.uniform(0, 1));
        for (double v : k.k) {
            CHECK(v > 0.0);
            CHECK(v < 1.0);
        }
    }
}

TEST_CASE("fuse interpolates between prior and measurement") {
    const Vec z = {1.0, 2.0};
    const Vec r = {3.0, 4.0};
    CHECK(fuse(z, r, GainVector::dead_reckoning(2)).z_post == z);       // K = 0
    CHECK(fuse(z, r, GainVector{{1.0, 1.0}}).z_post == r);              // K = 1 (forced)
    const CorrectionOutput mid = fuse(z, r, fixed_gain(0.5, 2));
    CHECK(mid.z_post[0] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(mid.z_post[1] == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(mid.residual == Vec{2.0, 2.0});
}

TEST_CASE("fixed_gain validates its range and fills the vector") {
    const GainVector g = fixed_gain(0.1, 3);
    for (double v : g.k) CHECK(v == 0.1);
    CHECK_THROWS_AS(fixed_gain(0.0, 3), ConfigError);
    CHECK_THROWS_AS(fixed_gain(1.0, 3), ConfigError);
    CHECK_THROWS_AS(fixed_gain(1.5, 3), ConfigError);
}

TEST_CASE("both fusion forms agree within 1e-12 and stay in the convex hull") {
    Rng rng(86);
    for (int iter = 0; iter < 2000; ++iter) {
        const int d = rng.uniform_int(1, 8);
        const Vec z = rand_vec(rng, d, -3, 3);
        const Vec r = rand_vec(rng, d, -3, 3);
        Vec k(static_cast<size_t>(d));
        for (double& v : k) v = rng.uniform(1e-9, 1 - 1e-9);
        const CorrectionOutput out = fuse(z, r, GainVector{k});
        for (int i = 0; i < d; ++i) {
            const size_t si = static_cast<size_t>(i);
            const double convex = (1.0 - k[si]) * z[si] + k[si] * r[si];
            CHECK(std::abs(out.z_post[si] - convex) <= 1e-12);
            CHECK(out.z_post[si] >= std::min(z[si], r[si]) - 1e-12);
            CHECK(out.z_post[si] <= std::max(z[si], r[si]) + 1e-12);
        }
    }
}

TEST_CASE("raising one gain entry moves the posterior toward the measurement") {
    const Vec z = {0.0, 0.0, 0.0};
    const Vec r = {1.0, 2.0, 3.0};  // r > z coordinate-wise
    Vec k = {0.3, 0.3, 0.3};
    const Vec base = fuse(z, r, GainVector{k}).z_post;
    for (size_t i = 0; i < 3; ++i) {
        Vec k2 = k;
        k2[i] = 0.8;
        const Vec moved = fuse(z, r, GainVector{k2}).z_post;
        for (size_t j = 0; j < 3; ++j) {
            if (j == i)
                CHECK(moved[j] > base[j]);
            else
                CHECK(moved[j] == base[j]);
        }
    }
}

TEST_CASE("gain-and-fuse composition passes the gradient check") {
    const int d = 5;
    const GainNetwork gn = GainNetwork::make(d);
    ParamSet ps;
    Rng rng(87);
    gn.init(ps, rng);
    Rng in_rng(88);
    const Vec z_tilde = rand_vec(in_rng, d), r = rand_vec(in_rng, d), target = rand_vec(in_rng, d);
    const double sigma = 0.4;

    const GradCheckReport rep = grad_check("gain_fuse", [&](const ParamSet& p, ParamSet& g) {
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
        for (size_t i = 0; i < dz.size(); ++i) dk[i] = dz[i] * (r[i] - z_tilde[i]);
        gn.backward(p, cache, dk, g);
        return loss;
    }, ps);
    CHECK(rep.max_rel_error < 1e-4);
}

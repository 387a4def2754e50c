// SPDX-License-Identifier: Apache-2.0
#include "neurokalman/nn.hpp"

#include <algorithm>
#include <cmath>

namespace nk {

Act act_from_string(const std::string& s) {
    if (s == "identity") return Act::Identity;
    if (s == "tanh") return Act::Tanh;
    if (s == "sigmoid") return Act::Sigmoid;
    if (s == "relu") return Act::Relu;
    throw ConfigError("unknown activation: " + s);
}

double act_apply(Act a, double x) {
    switch (a) {
        case Act::Identity: return x;
        case Act::Tanh: return std::tanh(x);
        case Act::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
        case Act::Relu: return x > 0.0 ? x : 0.0;
    }
    return x;
}

double act_deriv_from_output(Act a, double y) {
    switch (a) {
        case Act::Identity: return 1.0;
        case Act::Tanh: return 1.0 - y * y;
        case Act::Sigmoid: return y * (1.0 - y);
        case Act::Relu: return y > 0.0 ? 1.0 : 0.0;
    }
    return 1.0;
}

Vec act_apply(Act a, const Vec& x) {
    Vec y(x.size());
    for (size_t i = 0; i < x.size(); ++i) y[i] = act_apply(a, x[i]);
    return y;
}

Vec softmax(const Vec& logits) {
    require(!logits.empty(), "softmax: empty logits");
    const double mx = *std::max_element(logits.begin(), logits.end());
    Vec w(logits.size());
    double sum = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        w[i] = std::exp(logits[i] - mx);
        sum += w[i];
    }
    for (double& v : w) v /= sum;
    return w;
}

// ---------------------------------------------------------------------------
// Mlp
// ---------------------------------------------------------------------------

namespace {
std::string wname(const std::string& prefix, size_t i) { return prefix + ".W" + std::to_string(i); }
std::string bname(const std::string& prefix, size_t i) { return prefix + ".b" + std::to_string(i); }
}  // namespace

void Mlp::init(ParamSet& ps, Rng& rng) const {
    int fan_in = in_dim;
    for (size_t i = 0; i < layers.size(); ++i) {
        Mat& w = ps.add_mat(wname(prefix, i), layers[i].width, fan_in);
        Vec& b = ps.add_vec(bname(prefix, i), layers[i].width);
        const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(1, fan_in)));
        for (double& v : w.a) v = rng.uniform(-bound, bound);
        for (double& v : b) v = rng.uniform(-bound, bound);
        fan_in = layers[i].width;
    }
}

Vec Mlp::forward(const ParamSet& ps, const Vec& x) const {
    Cache unused;
    return forward(ps, x, unused);
}

Vec Mlp::forward(const ParamSet& ps, const Vec& x, Cache& cache) const {
    require(static_cast<int>(x.size()) == in_dim, "Mlp " + prefix + ": input dimension mismatch");
    cache.input = x;
    cache.outputs.clear();
    cache.outputs.reserve(layers.size());
    Vec cur = x;
    for (size_t i = 0; i < layers.size(); ++i) {
        const Mat& w = ps.mat(wname(prefix, i));
        const Vec& b = ps.vec(bname(prefix, i));
        Vec pre = matvec(w, cur);
        add_inplace(pre, b);
        for (double& v : pre) v = act_apply(layers[i].act, v);
        cache.outputs.push_back(pre);
        cur = std::move(pre);
    }
    return cur;
}

Vec Mlp::backward(const ParamSet& ps, const Cache& cache, const Vec& dout, ParamSet& grads) const {
    Vec d = dout;
    for (int i = static_cast<int>(layers.size()) - 1; i >= 0; --i) {
        const Vec& y = cache.outputs[static_cast<size_t>(i)];
        Vec dpre(d.size());
        for (size_t k = 0; k < d.size(); ++k)
            dpre[k] = d[k] * act_deriv_from_output(layers[static_cast<size_t>(i)].act, y[k]);
        const Vec& layer_in = (i == 0) ? cache.input : cache.outputs[static_cast<size_t>(i) - 1];
        outer_add(grads.mat(wname(prefix, static_cast<size_t>(i))), dpre, layer_in);
        add_inplace(grads.vec(bname(prefix, static_cast<size_t>(i))), dpre);
        d = matvec_t(ps.mat(wname(prefix, static_cast<size_t>(i))), dpre);
    }
    return d;
}

// ---------------------------------------------------------------------------
// GruCell
// ---------------------------------------------------------------------------

void GruCell::init(ParamSet& ps, Rng& rng) const {
    const double bw = 1.0 / std::sqrt(static_cast<double>(in_dim));
    const double bu = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    for (const char* gate : {"z", "r", "c"}) {
        Mat& w = ps.add_mat(prefix + ".W" + gate, hidden_dim, in_dim);
        Mat& u = ps.add_mat(prefix + ".U" + gate, hidden_dim, hidden_dim);
        Vec& b = ps.add_vec(prefix + ".b" + gate, hidden_dim);
        for (double& v : w.a) v = rng.uniform(-bw, bw);
        for (double& v : u.a) v = rng.uniform(-bu, bu);
        for (double& v : b) v = rng.uniform(-bu, bu);
    }
}

Vec GruCell::step(const ParamSet& ps, const Vec& x, const Vec& h_prev) const {
    Cache unused;
    return step(ps, x, h_prev, unused);
}

Vec GruCell::step(const ParamSet& ps, const Vec& x, const Vec& h_prev, Cache& cache) const {
    require(static_cast<int>(x.size()) == in_dim, "GruCell " + prefix + ": input dimension mismatch");
    require(static_cast<int>(h_prev.size()) == hidden_dim,
            "GruCell " + prefix + ": hidden dimension mismatch");

    auto gate_pre = [&](const char* g, const Vec& h_in) {
        Vec pre = matvec(ps.mat(prefix + ".W" + g), x);
        add_inplace(pre, matvec(ps.mat(prefix + ".U" + g), h_in));
        add_inplace(pre, ps.vec(prefix + ".b" + g));
        return pre;
    };

    cache.x = x;
    cache.h_prev = h_prev;
    cache.z = act_apply(Act::Sigmoid, gate_pre("z", h_prev));
    cache.r = act_apply(Act::Sigmoid, gate_pre("r", h_prev));
    cache.c = act_apply(Act::Tanh, gate_pre("c", hadamard(cache.r, h_prev)));

    Vec h(hidden_dim);
    for (int i = 0; i < hidden_dim; ++i)
        h[static_cast<size_t>(i)] = (1.0 - cache.z[static_cast<size_t>(i)]) * cache.c[static_cast<size_t>(i)] +
                                    cache.z[static_cast<size_t>(i)] * h_prev[static_cast<size_t>(i)];
    return h;
}

GruCell::Grad GruCell::backward(const ParamSet& ps, const Cache& cache, const Vec& dh,
                                ParamSet& grads) const {
    const size_t n = static_cast<size_t>(hidden_dim);
    Vec dz(n), dc(n), dh_prev(n), dr(n);

    // h' = (1 - z) .* c + z .* h_prev
    for (size_t i = 0; i < n; ++i) {
        dc[i] = dh[i] * (1.0 - cache.z[i]);
        dh_prev[i] = dh[i] * cache.z[i];
        dz[i] = dh[i] * (cache.h_prev[i] - cache.c[i]);
    }

    Vec dx(static_cast<size_t>(in_dim), 0.0);

    // candidate: c = tanh(Wc x + Uc (r .* h_prev) + bc)
    Vec da_c(n);
    for (size_t i = 0; i < n; ++i) da_c[i] = dc[i] * (1.0 - cache.c[i] * cache.c[i]);
    outer_add(grads.mat(prefix + ".Wc"), da_c, cache.x);
    outer_add(grads.mat(prefix + ".Uc"), da_c, hadamard(cache.r, cache.h_prev));
    add_inplace(grads.vec(prefix + ".bc"), da_c);
    add_inplace(dx, matvec_t(ps.mat(prefix + ".Wc"), da_c));
    {
        const Vec drh = matvec_t(ps.mat(prefix + ".Uc"), da_c);
        for (size_t i = 0; i < n; ++i) {
            dr[i] = drh[i] * cache.h_prev[i];
            dh_prev[i] += drh[i] * cache.r[i];
        }
    }

    // reset gate: r = sigmoid(Wr x + Ur h_prev + br)
    Vec da_r(n);
    for (size_t i = 0; i < n; ++i) da_r[i] = dr[i] * cache.r[i] * (1.0 - cache.r[i]);
    outer_add(grads.mat(prefix + ".Wr"), da_r, cache.x);
    outer_add(grads.mat(prefix + ".Ur"), da_r, cache.h_prev);
    add_inplace(grads.vec(prefix + ".br"), da_r);
    add_inplace(dx, matvec_t(ps.mat(prefix + ".Wr"), da_r));
    add_inplace(dh_prev, matvec_t(ps.mat(prefix + ".Ur"), da_r));

    // update gate: z = sigmoid(Wz x + Uz h_prev + bz)
    Vec da_z(n);
    for (size_t i = 0; i < n; ++i) da_z[i] = dz[i] * cache.z[i] * (1.0 - cache.z[i]);
    outer_add(grads.mat(prefix + ".Wz"), da_z, cache.x);
    outer_add(grads.mat(prefix + ".Uz"), da_z, cache.h_prev);
    add_inplace(grads.vec(prefix + ".bz"), da_z);
    add_inplace(dx, matvec_t(ps.mat(prefix + ".Wz"), da_z));
    add_inplace(dh_prev, matvec_t(ps.mat(prefix + ".Uz"), da_z));

    return {std::move(dx), std::move(dh_prev)};
}

// ---------------------------------------------------------------------------
// Attention
// ---------------------------------------------------------------------------

AttentionResult attention(const Vec& query, std::span<const Vec> keys, std::span<const Vec> values,
                          double scale) {
    require(!keys.empty(), "attention: empty key set");
    require(keys.size() == values.size(), "attention: |keys| != |values|");
    Vec logits(keys.size());
    for (size_t i = 0; i < keys.size(); ++i) {
        require(keys[i].size() == query.size(), "attention: key dimension mismatch");
        logits[i] = dot(query, keys[i]) * scale;
    }
    AttentionResult res;
    res.weights = softmax(logits);
    res.output.assign(values[0].size(), 0.0);
    for (size_t i = 0; i < values.size(); ++i) {
        require(values[i].size() == res.output.size(), "attention: value dimension mismatch");
        for (size_t k = 0; k < res.output.size(); ++k) res.output[k] += res.weights[i] * values[i][k];
    }
    return res;
}

AttentionGrad attention_backward(const Vec& query, std::span<const Vec> keys,
                                 std::span<const Vec> values, double scale,
                                 const AttentionResult& fwd, const Vec& dout) {
    const size_t n = keys.size();
    AttentionGrad g;
    g.dquery.assign(query.size(), 0.0);
    g.dkeys.assign(n, Vec(query.size(), 0.0));
    g.dvalues.assign(n, Vec(values[0].size(), 0.0));

    Vec dalpha(n);
    for (size_t i = 0; i < n; ++i) {
        dalpha[i] = dot(dout, values[i]);
        for (size_t k = 0; k < dout.size(); ++k) g.dvalues[i][k] = fwd.weights[i] * dout[k];
    }
    // softmax backward: ds_i = a_i * (dalpha_i - sum_j a_j dalpha_j)
    double mix = 0.0;
    for (size_t i = 0; i < n; ++i) mix += fwd.weights[i] * dalpha[i];
    for (size_t i = 0; i < n; ++i) {
        const double ds = fwd.weights[i] * (dalpha[i] - mix);
        for (size_t k = 0; k < query.size(); ++k) {
            g.dquery[k] += ds * scale * keys[i][k];
            g.dkeys[i][k] += ds * scale * query[k];
        }
    }
    return g;
}

double l1_loss(const Vec& pred, const Vec& target) {
    require(pred.size() == target.size(), "l1_loss: size mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) acc += std::abs(pred[i] - target[i]);
    return acc / static_cast<double>(pred.size());
}

Vec l1_loss_grad(const Vec& pred, const Vec& target) {
    Vec g(pred.size());
    const double inv = 1.0 / static_cast<double>(pred.size());
    for (size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        g[i] = d > 0.0 ? inv : (d < 0.0 ? -inv : 0.0);
    }
    return g;
}

}  // namespace nk

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "neurokalman/params.hpp"
#include "neurokalman/rng.hpp"

namespace nk {

enum class Act { Identity, Tanh, Sigmoid, Relu };

Act act_from_string(const std::string& s);
double act_apply(Act a, double x);
/// Derivative expressed through the activation output y = act(x).
double act_deriv_from_output(Act a, double y);

Vec act_apply(Act a, const Vec& x);
Vec softmax(const Vec& logits);  // max-shifted, numerically stable

struct LayerSpec {
    int width;
    Act act;
};

/// Multi-layer perceptron over named parameters "<prefix>.W<i>" /
/// "<prefix>.b<i>". Forward passes are pure; the cache variant records the
/// per-layer outputs needed by backward().
struct Mlp {
    std::string prefix;
    int in_dim = 0;
    std::vector<LayerSpec> layers;

    Mlp() = default;
    Mlp(std::string prefix_, int in_dim_, std::vector<LayerSpec> layers_)
        : prefix(std::move(prefix_)), in_dim(in_dim_), layers(std::move(layers_)) {}

    int out_dim() const { return layers.empty() ? in_dim : layers.back().width; }

    /// Registers W/b entries, uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
    void init(ParamSet& ps, Rng& rng) const;

    struct Cache {
        Vec input;
        std::vector<Vec> outputs;  // post-activation per layer
    };

    Vec forward(const ParamSet& ps, const Vec& x) const;
    Vec forward(const ParamSet& ps, const Vec& x, Cache& cache) const;

    /// Accumulates parameter gradients into `grads`; returns d(loss)/d(input).
    Vec backward(const ParamSet& ps, const Cache& cache, const Vec& dout, ParamSet& grads) const;
};

/// Standard GRU cell (update gate z, reset gate r, candidate with the reset
/// applied to the previous hidden state):
///   z = sigmoid(Wz x + Uz h + bz)
///   r = sigmoid(Wr x + Ur h + br)
///   c = tanh(Wc x + Uc (r .* h) + bc)
///   h' = (1 - z) .* c + z .* h
struct GruCell {
    std::string prefix;
    int in_dim = 0;
    int hidden_dim = 0;

    GruCell() = default;
    GruCell(std::string prefix_, int in_dim_, int hidden_dim_)
        : prefix(std::move(prefix_)), in_dim(in_dim_), hidden_dim(hidden_dim_) {}

    void init(ParamSet& ps, Rng& rng) const;

    struct Cache {
        Vec x, h_prev;
        Vec z, r, c;  // gate activations
    };

    Vec step(const ParamSet& ps, const Vec& x, const Vec& h_prev) const;
    Vec step(const ParamSet& ps, const Vec& x, const Vec& h_prev, Cache& cache) const;

    struct Grad {
        Vec dx;
        Vec dh_prev;
    };
    Grad backward(const ParamSet& ps, const Cache& cache, const Vec& dh, ParamSet& grads) const;
};

struct AttentionResult {
    Vec output;
    Vec weights;
};

/// Scaled dot-product attention for a single query. Weights are a
/// probability vector; softmax is max-shifted. Throws ConfigError on an
/// empty key set — callers that want a fallback must decide it themselves.
AttentionResult attention(const Vec& query, std::span<const Vec> keys, std::span<const Vec> values,
                          double scale);

struct AttentionGrad {
    Vec dquery;
    std::vector<Vec> dkeys;
    std::vector<Vec> dvalues;
};

AttentionGrad attention_backward(const Vec& query, std::span<const Vec> keys,
                                 std::span<const Vec> values, double scale,
                                 const AttentionResult& fwd, const Vec& dout);

/// Mean absolute error and its gradient w.r.t. `pred`.
double l1_loss(const Vec& pred, const Vec& target);
Vec l1_loss_grad(const Vec& pred, const Vec& target);

}  // namespace nk

// SPDX-License-Identifier: Apache-2.0
#include "neurokalman/retrieval.hpp"

#include <cmath>

#include "neurokalman/nn.hpp"

namespace nk {

RetrievalResult retrieve(const Vec& query, const MemoryBank& bank) {
    RetrievalResult res;
    if (bank.empty()) {
        res.evidence = query;
        res.used_memory = false;
        return res;
    }
    const MemoryBank::Snapshot snap = bank.snapshot();
    const double scale = 1.0 / std::sqrt(static_cast<double>(query.size()));
    AttentionResult att = attention(query, snap.keys, snap.values, scale);
    res.evidence = std::move(att.output);
    res.weights = std::move(att.weights);
    res.used_memory = true;
    return res;
}

Vec nw_oracle(const Vec& query, std::span<const Vec> keys, std::span<const Vec> values) {
    require(!keys.empty() && keys.size() == values.size(), "nw_oracle: empty or mismatched lists");
    const size_t d = query.size();
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

    // Scaled dot products, one explicit loop per pair.
    std::vector<double> logit(keys.size(), 0.0);
    for (size_t i = 0; i < keys.size(); ++i) {
        require(keys[i].size() == d, "nw_oracle: key dimension mismatch");
        double s = 0.0;
        for (size_t k = 0; k < d; ++k) s += query[k] * keys[i][k];
        logit[i] = s * inv_sqrt_d;
    }
    double mx = logit[0];
    for (double l : logit) mx = l > mx ? l : mx;

    double denom = 0.0;
    std::vector<double> w(keys.size(), 0.0);
    for (size_t i = 0; i < keys.size(); ++i) {
        w[i] = std::exp(logit[i] - mx);
        denom += w[i];
    }

    Vec out(values[0].size(), 0.0);
    for (size_t i = 0; i < values.size(); ++i) {
        require(values[i].size() == out.size(), "nw_oracle: value dimension mismatch");
        const double alpha = w[i] / denom;
        for (size_t k = 0; k < out.size(); ++k) out[k] += alpha * values[i][k];
    }
    return out;
}

}  // namespace nk

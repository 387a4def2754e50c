// SPDX-License-Identifier: Apache-2.0
#include "neurokalman/memory.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>

namespace nk {

bool MemoryBank::try_store(const Vec& feature, int step, double sigma) {
    require(sigma >= 0.0 && sigma <= 1.0, "MemoryBank::try_store: sigma outside [0,1]");
    if (!(sigma > threshold_)) return false;  // strict inequality at the threshold
    if (static_cast<int>(anchors_.size()) == capacity_) anchors_.pop_front();
    anchors_.push_back({feature, step, sigma});
    return true;
}

MemoryBank::Snapshot MemoryBank::snapshot() const {
    Snapshot s;
    s.keys.reserve(anchors_.size());
    s.values.reserve(anchors_.size());
    for (const MemoryAnchor& a : anchors_) {
        s.keys.push_back(a.feature);
        s.values.push_back(a.feature);
    }
    return s;
}

namespace {
uint64_t fnv1a(const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = 0xcbf29ce484222325ULL;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}
}  // namespace

std::string MemoryBank::dump_csv() const {
    std::string out = "step,confidence,feature_hash\n";
    char line[96];
    for (const MemoryAnchor& a : anchors_) {
        const uint64_t h = fnv1a(a.feature.data(), a.feature.size() * sizeof(double));
        std::snprintf(line, sizeof(line), "%d,%.17g,%016llx\n", a.step, a.confidence,
                      static_cast<unsigned long long>(h));
        out += line;
    }
    return out;
}

}  // namespace nk

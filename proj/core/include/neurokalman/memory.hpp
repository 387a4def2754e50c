// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <deque>
#include <string>

#include "neurokalman/linalg.hpp"

namespace nk {

/// A validated historical feature snapshot. Key and value are the same
/// vector; only features whose confidence cleared the bank threshold at
/// insertion time are ever held.
struct MemoryAnchor {
    Vec feature;
    int step = 0;
    double confidence = 0.0;
};

/// Episodic memory with a bounded history length and oldest-first eviction.
/// One bank per episode; never shared across episodes.
class MemoryBank {
public:
    MemoryBank() = default;
    MemoryBank(int capacity, double threshold) : capacity_(capacity), threshold_(threshold) {
        require(capacity >= 1, "MemoryBank: capacity must be >= 1");
    }

    /// Stores the feature iff sigma strictly exceeds the threshold. At
    /// capacity the oldest anchor is evicted. Returns whether a store
    /// happened.
    bool try_store(const Vec& feature, int step, double sigma);

    struct Snapshot {
        std::vector<Vec> keys;
        std::vector<Vec> values;
    };
    /// Anchors in storage order (oldest first); empty lists when the bank is
    /// empty. Keys and values are element-wise identical.
    Snapshot snapshot() const;

    bool empty() const { return anchors_.empty(); }
    size_t size() const { return anchors_.size(); }
    int capacity() const { return capacity_; }
    double threshold() const { return threshold_; }
    const std::deque<MemoryAnchor>& anchors() const { return anchors_; }

    void clear() { anchors_.clear(); }

    /// Debug dump: one CSV row per anchor (step, confidence, feature hash).
    std::string dump_csv() const;

private:
    std::deque<MemoryAnchor> anchors_;
    int capacity_ = 10;
    double threshold_ = 0.5;
};

}  // namespace nk

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <variant>
#include <vector>

#include "neurokalman/linalg.hpp"

namespace nk {

/// Named parameter container with deterministic iteration order (insertion
/// order). Holds both weight matrices and bias vectors.
class ParamSet {
public:
    using Value = std::variant<Vec, Mat>;

    struct Entry {
        std::string name;
        Value value;
    };

    Mat& add_mat(const std::string& name, int rows, int cols);
    Vec& add_vec(const std::string& name, int n);

    bool has(const std::string& name) const;
    Mat& mat(const std::string& name);
    const Mat& mat(const std::string& name) const;
    Vec& vec(const std::string& name);
    const Vec& vec(const std::string& name) const;

    size_t size() const { return entries_.size(); }
    const std::vector<Entry>& entries() const { return entries_; }
    std::vector<Entry>& entries() { return entries_; }

    /// Same names and shapes, all values zero. Used for gradients and
    /// optimizer moments.
    ParamSet zeros_like() const;

    /// Total number of scalar parameters.
    size_t scalar_count() const;

    /// Flat read/write access across all entries, in iteration order.
    /// Index i addresses the i-th scalar.
    double get_flat(size_t i) const;
    void set_flat(size_t i, double v);

    bool same_layout(const ParamSet& o) const;

private:
    int find(const std::string& name) const;

    std::vector<Entry> entries_;
};

/// Binary checkpoint with a format-version header. Round-trips bit-exactly.
void save_checkpoint(const ParamSet& params, const std::string& path);

/// Load a checkpoint written by save_checkpoint. If `expect` is non-null the
/// record names and shapes are validated against it and a mismatch names the
/// offending block.
ParamSet load_checkpoint(const std::string& path, const ParamSet* expect = nullptr);

}  // namespace nk

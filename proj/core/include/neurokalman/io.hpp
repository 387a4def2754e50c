// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "neurokalman/linalg.hpp"

namespace nk::io {

/// Deterministic formatting for CSV cells: shortest round-trippable decimal.
std::string fmt(double v);
std::string fmt(int v);
std::string fmt(uint64_t v);

/// Row-oriented CSV builder; writes byte-identical output for identical
/// inputs.
class Csv {
public:
    explicit Csv(std::vector<std::string> header);
    void row(std::vector<std::string> cells);
    const std::string& text() const { return text_; }
    void write(const std::string& path) const;

private:
    std::string text_;
    size_t width_;
};

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

/// Self-contained SVG line plot (axes, ticks, legend, one polyline per
/// series). No external plotting toolchain.
std::string line_plot_svg(const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<Series>& series);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

/// Writes out_dir/manifest.txt listing the config hash and artifact names.
void write_manifest(const std::string& out_dir, const std::string& config_hash,
                    const std::vector<std::string>& artifacts);

/// Exclusive lock on an output directory; the guard file is removed on
/// destruction. A held lock raises NumericalError.
class DirLock {
public:
    explicit DirLock(const std::string& dir);
    ~DirLock();
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    std::string path_;
};

}  // namespace nk::io

// SPDX-License-Identifier: Apache-2.0
#include "neurokalman/params.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace nk {

namespace {
constexpr char kMagic[4] = {'N', 'K', 'C', 'P'};
constexpr uint32_t kVersion = 1;
}  // namespace

int ParamSet::find(const std::string& name) const {
    for (size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].name == name) return static_cast<int>(i);
    return -1;
}

Mat& ParamSet::add_mat(const std::string& name, int rows, int cols) {
    require(find(name) < 0, "ParamSet: duplicate name " + name);
    entries_.push_back({name, Mat(rows, cols)});
    return std::get<Mat>(entries_.back().value);
}

Vec& ParamSet::add_vec(const std::string& name, int n) {
    require(find(name) < 0, "ParamSet: duplicate name " + name);
    entries_.push_back({name, Vec(n, 0.0)});
    return std::get<Vec>(entries_.back().value);
}

bool ParamSet::has(const std::string& name) const { return find(name) >= 0; }

Mat& ParamSet::mat(const std::string& name) {
    const int i = find(name);
    require(i >= 0, "ParamSet: unknown parameter " + name);
    return std::get<Mat>(entries_[i].value);
}

const Mat& ParamSet::mat(const std::string& name) const {
    return const_cast<ParamSet*>(this)->mat(name);
}

Vec& ParamSet::vec(const std::string& name) {
    const int i = find(name);
    require(i >= 0, "ParamSet: unknown parameter " + name);
    return std::get<Vec>(entries_[i].value);
}

const Vec& ParamSet::vec(const std::string& name) const {
    return const_cast<ParamSet*>(this)->vec(name);
}

ParamSet ParamSet::zeros_like() const {
    ParamSet out;
    for (const Entry& e : entries_) {
        if (std::holds_alternative<Mat>(e.value)) {
            const Mat& m = std::get<Mat>(e.value);
            out.add_mat(e.name, m.rows, m.cols);
        } else {
            out.add_vec(e.name, static_cast<int>(std::get<Vec>(e.value).size()));
        }
    }
    return out;
}

size_t ParamSet::scalar_count() const {
    size_t n = 0;
    for (const Entry& e : entries_) {
        if (std::holds_alternative<Mat>(e.value))
            n += std::get<Mat>(e.value).a.size();
        else
            n += std::get<Vec>(e.value).size();
    }
    return n;
}

double ParamSet::get_flat(size_t i) const {
    for (const Entry& e : entries_) {
        if (std::holds_alternative<Mat>(e.value)) {
            const auto& a = std::get<Mat>(e.value).a;
            if (i < a.size()) return a[i];
            i -= a.size();
        } else {
            const auto& v = std::get<Vec>(e.value);
            if (i < v.size()) return v[i];
            i -= v.size();
        }
    }
    throw ConfigError("ParamSet: flat index out of range");
}

void ParamSet::set_flat(size_t i, double x) {
    for (Entry& e : entries_) {
        if (std::holds_alternative<Mat>(e.value)) {
            auto& a = std::get<Mat>(e.value).a;
            if (i < a.size()) {
                a[i] = x;
                return;
            }
            i -= a.size();
        } else {
            auto& v = std::get<Vec>(e.value);
            if (i < v.size()) {
                v[i] = x;
                return;
            }
            i -= v.size();
        }
    }
    throw ConfigError("ParamSet: flat index out of range");
}

bool ParamSet::same_layout(const ParamSet& o) const {
    if (entries_.size() != o.entries_.size()) return false;
    for (size_t i = 0; i < entries_.size(); ++i) {
        const Entry& a = entries_[i];
        const Entry& b = o.entries_[i];
        if (a.name != b.name) return false;
        if (a.value.index() != b.value.index()) return false;
        if (std::holds_alternative<Mat>(a.value)) {
            if (!std::get<Mat>(a.value).same_shape(std::get<Mat>(b.value))) return false;
        } else if (std::get<Vec>(a.value).size() != std::get<Vec>(b.value).size()) {
            return false;
        }
    }
    return true;
}

namespace {

void write_u32(std::ofstream& f, uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); }

uint32_t read_u32(std::ifstream& f, const std::string& path) {
    uint32_t v = 0;
    if (!f.read(reinterpret_cast<char*>(&v), 4))
        throw NumericalError("checkpoint truncated: " + path);
    return v;
}

}  // namespace

void save_checkpoint(const ParamSet& params, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw NumericalError("cannot open checkpoint for writing: " + path);
    f.write(kMagic, 4);
    write_u32(f, kVersion);
    write_u32(f, static_cast<uint32_t>(params.size()));
    for (const auto& e : params.entries()) {
        write_u32(f, static_cast<uint32_t>(e.name.size()));
        f.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        if (std::holds_alternative<Mat>(e.value)) {
            const Mat& m = std::get<Mat>(e.value);
            write_u32(f, 1);
            write_u32(f, static_cast<uint32_t>(m.rows));
            write_u32(f, static_cast<uint32_t>(m.cols));
            f.write(reinterpret_cast<const char*>(m.a.data()),
                    static_cast<std::streamsize>(m.a.size() * sizeof(double)));
        } else {
            const Vec& v = std::get<Vec>(e.value);
            write_u32(f, 0);
            write_u32(f, static_cast<uint32_t>(v.size()));
            write_u32(f, 1);
            f.write(reinterpret_cast<const char*>(v.data()),
                    static_cast<std::streamsize>(v.size() * sizeof(double)));
        }
    }
    if (!f) throw NumericalError("checkpoint write failed: " + path);
}

ParamSet load_checkpoint(const std::string& path, const ParamSet* expect) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw NumericalError("cannot open checkpoint: " + path);
    char magic[4];
    if (!f.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw NumericalError("not a checkpoint file: " + path);
    const uint32_t version = read_u32(f, path);
    if (version != kVersion)
        throw NumericalError("unsupported checkpoint version " + std::to_string(version) + ": " + path);
    const uint32_t count = read_u32(f, path);

    ParamSet out;
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t name_len = read_u32(f, path);
        std::string name(name_len, '\0');
        if (!f.read(name.data(), name_len)) throw NumericalError("checkpoint truncated: " + path);
        const uint32_t kind = read_u32(f, path);
        const uint32_t rows = read_u32(f, path);
        const uint32_t cols = read_u32(f, path);
        if (kind == 1) {
            Mat& m = out.add_mat(name, static_cast<int>(rows), static_cast<int>(cols));
            if (!f.read(reinterpret_cast<char*>(m.a.data()),
                        static_cast<std::streamsize>(m.a.size() * sizeof(double))))
                throw NumericalError("checkpoint truncated: " + path);
        } else {
            Vec& v = out.add_vec(name, static_cast<int>(rows));
            if (!f.read(reinterpret_cast<char*>(v.data()),
                        static_cast<std::streamsize>(v.size() * sizeof(double))))
                throw NumericalError("checkpoint truncated: " + path);
        }
    }

    if (expect != nullptr && !out.same_layout(*expect)) {
        // Name the first mismatching block for the diagnostic.
        std::string detail = "layout mismatch";
        const size_t n = std::min(out.size(), expect->size());
        for (size_t i = 0; i < n; ++i) {
            if (out.entries()[i].name != expect->entries()[i].name) {
                detail = "block '" + out.entries()[i].name + "' where '" +
                         expect->entries()[i].name + "' was expected";
                break;
            }
            const auto& a = out.entries()[i].value;
            const auto& b = expect->entries()[i].value;
            const bool shape_ok =
                a.index() == b.index() &&
                (std::holds_alternative<Mat>(a)
                     ? std::get<Mat>(a).same_shape(std::get<Mat>(b))
                     : std::get<Vec>(a).size() == std::get<Vec>(b).size());
            if (!shape_ok) {
                detail = "shape mismatch in block '" + out.entries()[i].name + "'";
                break;
            }
        }
        if (out.size() != expect->size())
            detail += " (checkpoint has " + std::to_string(out.size()) + " blocks, model expects " +
                      std::to_string(expect->size()) + ")";
        throw NumericalError("checkpoint does not match model: " + detail);
    }
    return out;
}

}  // namespace nk

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

namespace nk {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic RNG stream. Independent streams are derived from a base
/// seed and one or more stream indices, so episodes / epochs never share
/// generator state.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(splitmix64(seed)) {}
    Rng(uint64_t seed, uint64_t stream) : gen_(splitmix64(splitmix64(seed) ^ stream)) {}
    Rng(uint64_t seed, uint64_t stream_a, uint64_t stream_b)
        : gen_(splitmix64(splitmix64(splitmix64(seed) ^ stream_a) ^ stream_b)) {}

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(gen_);
    }
    double normal(double mean, double std) {
        if (std == 0.0) return mean;
        return std::normal_distribution<double>(mean, std)(gen_);
    }
    int uniform_int(int lo, int hi) {  // inclusive range
        return std::uniform_int_distribution<int>(lo, hi)(gen_);
    }
    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
};

}  // namespace nk

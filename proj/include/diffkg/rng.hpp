#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "diffkg/tensor.hpp"

namespace diffkg {

/// Seeded random source. Every stochastic operation in the engine draws from
/// an explicitly passed Rng so runs are reproducible from the config seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    real normal() { return normal_(gen_); }
    real uniform() { return uniform_(gen_); }  // [0,1)

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(gen_);
    }

    bool bernoulli(double p) { return uniform() < static_cast<real>(p); }

    void fill_normal(std::vector<real>& v) {
        for (real& x : v) x = normal();
    }

    /// Uniform in [-scale, scale).
    void fill_uniform_sym(std::vector<real>& v, real scale) {
        for (real& x : v) x = (real(2) * uniform() - real(1)) * scale;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        std::shuffle(v.begin(), v.end(), gen_);
    }

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
    std::normal_distribution<real> normal_{real(0), real(1)};
    std::uniform_real_distribution<real> uniform_{real(0), real(1)};
};

}  // namespace diffkg

#pragma once

#include <cstdint>
#include <vector>

namespace spades {

// Self-contained xoshiro256** generator. Keeping the generator (and the
// distribution transforms below) in-repo pins every sampled sequence to the
// seed alone, independent of the standard library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform on [0, 1).
    double uniform();
    // Uniform on [lo, hi).
    double uniform(double lo, double hi);
    // Uniform integer on [0, n).
    std::uint64_t uniform_index(std::uint64_t n);

    // Standard normal via Box-Muller (two uniforms per draw, no cache).
    double normal();
    double normal(double mean, double stddev);

    // Exponential with the given scale (mean).
    double exponential(double scale);

    // Poisson by inversion; fine for the desk-scale rates used here.
    std::uint64_t poisson(double rate);

    // Derive an independent generator for a named substream.
    Rng fork(std::uint64_t stream);

    // k distinct indices from [0, n), in ascending order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

private:
    std::uint64_t s_[4];
};

} // namespace spades

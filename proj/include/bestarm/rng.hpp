#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace bestarm {

/**
 * A reproducible pseudo-random stream.
 *
 * Every random decision in the library is drawn from a RandomStream obtained
 * through derive_rng(), so that a (master seed, label) pair fully determines
 * the sequence. Streams are cheap to copy; a copy continues independently
 * from the same position.
 */
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform real in [0, 1).
    double uniform01() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }

    /// Uniform index in [0, n). n must be positive.
    std::size_t uniform_index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    double normal(double mean = 0.0, double stddev = 1.0) {
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }

    bool bernoulli(double p) { return uniform01() < p; }

    std::uint64_t seed() const { return seed_; }

    std::mt19937_64& engine() { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

/// Mixes a master seed and a text label into the seed of an independent stream.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view label);

RandomStream derive_rng(std::uint64_t master_seed, std::string_view label);

}  // namespace bestarm

#pragma once

#include <cstdint>
#include <random>

namespace lilate {

// Counter-derived substreams: Rng(seed, k) for replication k gives the same
// draws no matter which thread runs it or in what order.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    double uniform() { return uniform_(engine_); }
    double normal() { return normal_(engine_); }
    bool bernoulli(double p) { return uniform() < p; }
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace lilate

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace mforge {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Deterministic RNG. The engine is std::mt19937_64, whose algorithm the
// standard pins down; the distributions are implemented here because the
// standard library's distribution algorithms are implementation-defined
// and would break byte-identical artifact reproduction across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

    std::uint64_t seed() const { return seed_; }

    // Independent substream keyed on (this rng's seed, stream id). Does not
    // consume engine state, so substreams are stable under any scheduling.
    Rng derive(std::uint64_t stream) const {
        return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x632be59bd9b4e019ull)));
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1).
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * kPi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mu, double sigma) { return mu + sigma * normal(); }

    /// Uniform integer in [0, n), rejection-sampled (no modulo bias).
    std::size_t uniform_index(std::size_t n) {
        if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
        std::uint64_t bound = static_cast<std::uint64_t>(n);
        std::uint64_t threshold = (~std::uint64_t{0} - bound + 1) % bound;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return static_cast<std::size_t>(r % bound);
        }
    }

    int bernoulli(double p) { return uniform01() < p ? 1 : 0; }

    /// Draws from a categorical distribution given probabilities summing to 1.
    int categorical(const std::vector<double>& probs) {
        double u = uniform01();
        double acc = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(probs.size()) - 1;
    }

    double exponential() {
        double u;
        do {
            u = uniform01();
        } while (u <= 0.0);
        return -std::log(u);
    }

private:
    static constexpr double kPi = 3.141592653589793238462643383279502884;
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace mforge

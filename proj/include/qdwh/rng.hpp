#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace qdwh {

// Deterministic RNG. mt19937_64 output is fixed by the standard, but the
// std distributions are not, so the mappings to doubles live here. Same
// seed gives the same stream on every platform and compiler.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }

    // Uniform in [0, 1), 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1]; safe as a log argument.
    double uniform_pos() { return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53; }

    // Standard normal via Box-Muller, one value per call.
    double normal() {
        double u1 = uniform_pos();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    // Uniform index in [0, n) without modulo bias.
    std::size_t index(std::size_t n) {
        std::uint64_t bound = UINT64_MAX - UINT64_MAX % static_cast<std::uint64_t>(n);
        std::uint64_t r;
        do {
            r = gen_();
        } while (r >= bound);
        return static_cast<std::size_t>(r % static_cast<std::uint64_t>(n));
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace qdwh

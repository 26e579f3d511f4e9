#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace stkd {

/// Deterministic random source for everything that draws numbers.
///
/// All distributions are implemented on top of the mt19937_64 bit stream,
/// so a given seed produces the same sequence on every platform and
/// standard library. Never use std:: distributions here; their output is
/// implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1), 53 mantissa bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased integer in [0, n). n must be positive.
    std::uint64_t bounded(std::uint64_t n);

    /// Standard normal via Box-Muller (pairs cached).
    double normal();

    /// Gamma(alpha, 1) via Marsaglia-Tsang, with the alpha < 1 boost.
    double gamma(double alpha);

    /// Beta(a, b) as the normalized ratio of two gamma draws.
    double beta(double a, double b);

    /// Fisher-Yates permutation of {0, ..., n-1}.
    std::vector<std::size_t> permutation(std::size_t n);

    /// Mixes a seed with a stream tag so independent consumers of the same
    /// run seed get unrelated sequences (splitmix64 finalizer).
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

private:
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

// Fixed stream tags for the per-run generators.
namespace stream {
inline constexpr std::uint64_t teacher_init = 1;
inline constexpr std::uint64_t student_init = 2;
inline constexpr std::uint64_t batches = 3;
inline constexpr std::uint64_t mixup = 4;
inline constexpr std::uint64_t flip = 5;
}  // namespace stream

}  // namespace stkd

#pragma once

// Counter-based pseudo-random generator. Draw k is a pure function of
// (seed, k), so independent streams can be split off a master seed and
// replicates parallelize without shared state or skip-ahead machinery.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace loglap {

namespace detail {

inline constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ull;

// SplitMix64 finalizer: bijective on 64-bit words, equidistributed output.
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

}  // namespace detail

/** Derive an independent child seed from a master seed and a stream index. */
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
    return detail::mix64(detail::mix64(master + detail::golden_gamma) +
                         stream * detail::golden_gamma);
}

/**
 * Deterministic generator over a keyed counter sequence. Copyable; a copy
 * replays the stream from the copied position. Not shareable mid-stream
 * across threads; give each concurrent consumer its own derived seed.
 */
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

    std::uint64_t next_bits() noexcept {
        return detail::mix64(seed_ + (++counter_) * detail::golden_gamma);
    }

    /** Uniform draw strictly inside (0, 1): (k + 1/2) / 2^53 on the top 53 bits. */
    double uniform() noexcept {
        return (static_cast<double>(next_bits() >> 11) + 0.5) * 0x1.0p-53;
    }

    /** Standard normal via Box-Muller; consumes two counter slots. */
    double gaussian() noexcept {
        double u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    /** Laplace draw with mean absolute deviation delta, by inverse CDF. */
    double laplace(double delta) noexcept {
        double v = uniform() - 0.5;
        return -delta * std::copysign(1.0, v) * std::log1p(-2.0 * std::fabs(v));
    }

  private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

}  // namespace loglap

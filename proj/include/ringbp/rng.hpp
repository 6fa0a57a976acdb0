#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace ringbp {

namespace detail {

// splitmix64 finalizer; statistically strong mixing of a 64-bit word.
inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace detail

/// Counter-based pseudo-random stream (splitmix64). A stream is fully
/// determined by (seed, stream ids), so disjoint ids give independent
/// streams that can be drawn concurrently with bit-reproducible results
/// regardless of scheduling.
class StreamRng {
  public:
    explicit StreamRng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream = {}) {
        state_ = detail::mix64(seed + detail::kGolden);
        for (std::uint64_t id : stream) {
            state_ = detail::mix64(state_ ^ detail::mix64(id + detail::kGolden));
        }
    }

    std::uint64_t next_u64() {
        state_ += detail::kGolden;
        return detail::mix64(state_);
    }

    /// Uniform double in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, bound). bound must be >= 1.
    std::uint64_t next_below(std::uint64_t bound) {
        // Multiply-shift rejection-free mapping; bias is negligible for
        // bound << 2^64 (alphabet sizes, stream counts).
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
    }

    /// Standard normal via Box-Muller; the paired value is cached.
    double next_normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = 0.0;
        do {
            u1 = next_double();
        } while (u1 <= 0.0);
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    /// Circularly-symmetric complex normal with total variance `variance`.
    std::complex<double> next_cnormal(double variance) {
        const double s = std::sqrt(variance * 0.5);
        const double re = s * next_normal();
        const double im = s * next_normal();
        return {re, im};
    }

  private:
    std::uint64_t state_ = 0;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace ringbp

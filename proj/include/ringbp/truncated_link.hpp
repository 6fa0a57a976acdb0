#pragma once

#include <complex>
#include <vector>

#include "ringbp/errors.hpp"
#include "ringbp/linalg.hpp"

namespace ringbp {

/// How second-order statistics of the residual noise are computed.
/// Exact evaluates the real/imaginary quadratic forms for antipodal real
/// symbols; CircularSymmetry assumes equal split and zero cross terms.
enum class StatisticsMode { Exact, CircularSymmetry };

inline const char* to_string(StatisticsMode m) {
    return m == StatisticsMode::Exact ? "exact" : "circular";
}

/// Conditional-MMSE truncation of the channel onto the ordered stream
/// pair (j | i): applying `weights` to the received vector leaves only
/// streams j and i as signal terms, everything else becomes `noise`.
///
///   w^H y = self_gain * x_j + neighbor_gain * x_i + noise
///
/// noise_power is the total residual noise-plus-interference power and
/// equals Re(self_gain); the real/imaginary split (and their covariance)
/// is carried explicitly because it is generally uneven for real-valued
/// alphabets.
struct TruncatedLink {
    int j = 0;  // detected stream
    int i = 0;  // conditioning ring neighbor
    CVector weights;
    Complex self_gain;
    Complex neighbor_gain;
    double noise_power = 0.0;     // = Re(self_gain)
    double noise_var_real = 0.0;  // Var of Re(noise)
    double noise_var_imag = 0.0;  // Var of Im(noise)
    double noise_cov_ri = 0.0;    // Cov(Re(noise), Im(noise))
};

namespace detail {

/// Cross-covariance of the real parts of two truncated-link noises,
/// E[Re(wa^H va) Re(wb^H vb)], where va/vb carry the streams outside
/// excluded_a/excluded_b plus the common receiver noise.
inline double cross_real_covariance(const CMatrix& h, double sigma2, const CVector& wa,
                                    const std::vector<int>& excluded_a, const CVector& wb,
                                    const std::vector<int>& excluded_b, StatisticsMode mode) {
    auto contains = [](const std::vector<int>& v, int x) {
        for (int e : v)
            if (e == x) return true;
        return false;
    };
    double acc = 0.0;
    for (int k = 0; k < static_cast<int>(h.cols()); ++k) {
        if (contains(excluded_a, k) || contains(excluded_b, k)) continue;
        const Complex ta = wa.dot(h.col(k));  // wa^H h_k
        const Complex tb = wb.dot(h.col(k));
        if (mode == StatisticsMode::Exact) {
            acc += ta.real() * tb.real();
        } else {
            acc += 0.5 * (ta.real() * tb.real() + ta.imag() * tb.imag());
        }
    }
    acc += 0.5 * sigma2 * wa.dot(wb).real();
    return acc;
}

}  // namespace detail

/// Builds the truncated link for the ordered pair (j | i).
inline TruncatedLink build_truncated_link(const CMatrix& h, double sigma2, int j, int i,
                                          StatisticsMode mode = StatisticsMode::Exact) {
    TruncatedLink link;
    link.j = j;
    link.i = i;
    const CMatrix k = build_k_matrix(h, sigma2, {j, i});
    link.weights = hermitian_solve(k, h.col(j));
    link.self_gain = link.weights.dot(h.col(j));  // w^H h_j
    link.neighbor_gain = link.weights.dot(h.col(i));
    link.noise_power = link.self_gain.real();

    if (mode == StatisticsMode::CircularSymmetry) {
        link.noise_var_real = 0.5 * link.noise_power;
        link.noise_var_imag = 0.5 * link.noise_power;
        link.noise_cov_ri = 0.0;
        return link;
    }

    // Exact second-order statistics: per remaining stream k the noise picks
    // up (w^H h_k) x_k, so with antipodal real symbols the real/imaginary
    // coefficients accumulate separately; receiver noise splits evenly.
    double var_r = 0.0, var_i = 0.0, cov_ri = 0.0;
    for (int c = 0; c < static_cast<int>(h.cols()); ++c) {
        if (c == j || c == i) continue;
        const Complex t = link.weights.dot(h.col(c));
        var_r += t.real() * t.real();
        var_i += t.imag() * t.imag();
        cov_ri += t.real() * t.imag();
    }
    const double wnorm2 = link.weights.squaredNorm();
    link.noise_var_real = var_r + 0.5 * sigma2 * wnorm2;
    link.noise_var_imag = var_i + 0.5 * sigma2 * wnorm2;
    link.noise_cov_ri = cov_ri;
    return link;
}

/// All ring links of a channel, plus the cross-link noise covariances the
/// density analysis needs. forward(j) detects stream j conditioned on its
/// ring predecessor, backward(j) on its successor.
class RingLinks {
  public:
    RingLinks(const CMatrix& h, double sigma2, StatisticsMode mode = StatisticsMode::Exact)
        : h_(h), sigma2_(sigma2), mode_(mode), m_(static_cast<int>(h.cols())) {
        if (m_ < 2) throw ConfigError("ring requires at least two streams");
        forward_.reserve(static_cast<std::size_t>(m_));
        backward_.reserve(static_cast<std::size_t>(m_));
        for (int j = 0; j < m_; ++j) {
            forward_.push_back(build_truncated_link(h, sigma2, j, prev(j), mode));
            backward_.push_back(build_truncated_link(h, sigma2, j, next(j), mode));
        }
    }

    int streams() const { return m_; }
    int prev(int j) const { return (j + m_ - 1) % m_; }
    int next(int j) const { return (j + 1) % m_; }

    const TruncatedLink& forward(int j) const { return forward_[static_cast<std::size_t>(j)]; }
    const TruncatedLink& backward(int j) const { return backward_[static_cast<std::size_t>(j)]; }

    const CMatrix& h() const { return h_; }
    double sigma2() const { return sigma2_; }
    StatisticsMode mode() const { return mode_; }

    /// Covariance of Re(noise) between the link into j and the link into
    /// its predecessor (forward) or successor (backward) -- the chain of
    /// links one message hop apart share interference and receiver noise.
    double hop_noise_covariance(int j, bool forward_direction) const {
        if (forward_direction) {
            const int p = prev(j);
            return detail::cross_real_covariance(h_, sigma2_, forward(j).weights, {j, p},
                                                 forward(p).weights, {p, prev(p)}, mode_);
        }
        const int s = next(j);
        return detail::cross_real_covariance(h_, sigma2_, backward(j).weights, {j, s},
                                             backward(s).weights, {s, next(s)}, mode_);
    }

    /// Covariance of Re(noise) between the two opposite-direction links
    /// into the same stream j.
    double pair_noise_covariance(int j) const {
        return detail::cross_real_covariance(h_, sigma2_, forward(j).weights, {j, prev(j)},
                                             backward(j).weights, {j, next(j)}, mode_);
    }

  private:
    CMatrix h_;
    double sigma2_;
    StatisticsMode mode_;
    int m_;
    std::vector<TruncatedLink> forward_;
    std::vector<TruncatedLink> backward_;
};

}  // namespace ringbp

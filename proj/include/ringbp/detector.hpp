#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ringbp/alphabet.hpp"
#include "ringbp/channel.hpp"
#include "ringbp/errors.hpp"
#include "ringbp/linalg.hpp"
#include "ringbp/truncated_link.hpp"

namespace ringbp {

/// Message-passing order around the ring. Parallel updates every directed
/// message simultaneously from the previous round's values; Sequential
/// sweeps each direction in ring order reusing freshly updated messages.
/// One iteration advances every directed message by one hop (Parallel) or
/// performs one complete sweep per direction (Sequential).
struct RingSchedule {
    enum class Mode { Parallel, Sequential };
    Mode mode = Mode::Parallel;
    int iterations = 2;
};

namespace detail {

inline double log_sum_exp2(double a, double b) {
    const double hi = std::max(a, b);
    const double lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace detail

/// Bounded odd-in-x nonlinearity through which a neighbor's LLR feeds the
/// next message: the log-ratio of two shifted cosh terms, evaluated in
/// log-sum-exp form. Monotone in x with the sign of c, slope below 1,
/// saturating at +/- 2c.
inline double zeta(double x, double c) {
    return detail::log_sum_exp2(0.5 * x + c, -0.5 * x - c) -
           detail::log_sum_exp2(0.5 * x - c, -0.5 * x + c);
}

/// Pairwise potential of the link as a matrix over the alphabet: entry
/// (m, n) is the Gaussian density of the truncated observation given
/// x_j = s_m and x_i = s_n. A global scale is removed for range safety;
/// messages are renormalized so it carries no information.
inline RMatrix translation_matrix(const TruncatedLink& link, const CVector& y,
                                  const Alphabet& alphabet) {
    if (!(link.noise_power > 0.0)) {
        throw DegenerateLink("translation_matrix: non-positive residual noise power");
    }
    const Complex y_link = link.weights.dot(y);  // w^H y
    const int q = alphabet.size();
    RMatrix exponents(q, q);
    double max_e = -std::numeric_limits<double>::infinity();
    for (int m = 0; m < q; ++m) {
        for (int n = 0; n < q; ++n) {
            const Complex mean =
                link.self_gain * alphabet.symbols[m] + link.neighbor_gain * alphabet.symbols[n];
            const double e = -std::norm(y_link - mean) / link.noise_power;
            exponents(m, n) = e;
            max_e = std::max(max_e, e);
        }
    }
    return (exponents.array() - max_e).exp().matrix();
}

// ---------------------------------------------------------------------------
// Discrete-alphabet ring BP
// ---------------------------------------------------------------------------

struct DiscreteDetection {
    std::vector<RVector> beliefs;   // normalized posterior per stream
    std::vector<int> hard;          // argmax symbol index per stream
    std::vector<RVector> forward;   // incoming message from the ring predecessor
    std::vector<RVector> backward;  // incoming message from the ring successor
};

namespace detail {

inline RVector normalized_l1(const RVector& v) {
    const double s = v.sum();
    return v / s;
}

template <typename Step>
inline void run_ring_recursion(int m, const RingSchedule& schedule, bool forward_direction,
                               std::vector<RVector>& msgs, const Step& step) {
    std::vector<RVector> scratch;
    for (int it = 0; it < schedule.iterations; ++it) {
        if (schedule.mode == RingSchedule::Mode::Parallel) {
            scratch = msgs;
            for (int j = 0; j < m; ++j) {
                const int src = forward_direction ? (j + m - 1) % m : (j + 1) % m;
                msgs[static_cast<std::size_t>(j)] = step(j, scratch[static_cast<std::size_t>(src)]);
            }
        } else {
            for (int k = 0; k < m; ++k) {
                const int j = forward_direction ? k : m - 1 - k;
                const int src = forward_direction ? (j + m - 1) % m : (j + 1) % m;
                msgs[static_cast<std::size_t>(j)] = step(j, msgs[static_cast<std::size_t>(src)]);
            }
        }
    }
}

}  // namespace detail

/// Forward-backward BP over the ring for an arbitrary alphabet. Messages
/// start uniform; each hop multiplies by the link's translation matrix and
/// renormalizes; the belief is the normalized product of the two incoming
/// messages (no extra local evidence at the node itself).
inline DiscreteDetection ring_bp_discrete(const RingLinks& links, const CVector& y,
                                          const Alphabet& alphabet,
                                          const RingSchedule& schedule = {}) {
    const int m = links.streams();
    const int q = alphabet.size();
    std::vector<RMatrix> a_fwd, a_bwd;
    a_fwd.reserve(static_cast<std::size_t>(m));
    a_bwd.reserve(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        a_fwd.push_back(translation_matrix(links.forward(j), y, alphabet));
        a_bwd.push_back(translation_matrix(links.backward(j), y, alphabet));
    }

    DiscreteDetection det;
    const RVector uniform = RVector::Constant(q, 1.0 / q);
    det.forward.assign(static_cast<std::size_t>(m), uniform);
    det.backward.assign(static_cast<std::size_t>(m), uniform);

    detail::run_ring_recursion(m, schedule, true, det.forward, [&](int j, const RVector& prev) {
        return detail::normalized_l1(a_fwd[static_cast<std::size_t>(j)] * prev);
    });
    detail::run_ring_recursion(m, schedule, false, det.backward, [&](int j, const RVector& prev) {
        return detail::normalized_l1(a_bwd[static_cast<std::size_t>(j)] * prev);
    });

    det.beliefs.resize(static_cast<std::size_t>(m));
    det.hard.resize(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        RVector b = det.forward[static_cast<std::size_t>(j)].cwiseProduct(
            det.backward[static_cast<std::size_t>(j)]);
        b = detail::normalized_l1(b);
        det.beliefs[static_cast<std::size_t>(j)] = b;
        Eigen::Index arg = 0;
        b.maxCoeff(&arg);
        det.hard[static_cast<std::size_t>(j)] = static_cast<int>(arg);
    }
    return det;
}

// ---------------------------------------------------------------------------
// Gaussian ring BP
// ---------------------------------------------------------------------------

struct GaussianDetection {
    std::vector<Complex> mean_fwd, mean_bwd;
    std::vector<double> var_fwd, var_bwd;
};

/// Mean/variance message passing for Gaussian input. Both directions
/// converge to the per-stream LMMSE estimate and its MMSE.
inline GaussianDetection ring_bp_gaussian(const RingLinks& links, const CVector& y,
                                          const RingSchedule& schedule = {}) {
    const int m = links.streams();
    std::vector<Complex> y_fwd(static_cast<std::size_t>(m)), y_bwd(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        y_fwd[static_cast<std::size_t>(j)] = links.forward(j).weights.dot(y);
        y_bwd[static_cast<std::size_t>(j)] = links.backward(j).weights.dot(y);
    }

    GaussianDetection det;
    det.mean_fwd.assign(static_cast<std::size_t>(m), Complex{0.0, 0.0});
    det.mean_bwd.assign(static_cast<std::size_t>(m), Complex{0.0, 0.0});
    det.var_fwd.assign(static_cast<std::size_t>(m), 1.0);
    det.var_bwd.assign(static_cast<std::size_t>(m), 1.0);

    auto step = [&](const TruncatedLink& link, Complex y_link, Complex mean_prev, double var_prev,
                    Complex& mean_out, double& var_out) {
        const double denom = 1.0 + link.noise_power;
        const double g = std::norm(link.neighbor_gain) / (denom * denom);
        var_out = 1.0 / denom + g * var_prev;
        mean_out = y_link / denom - (link.neighbor_gain / denom) * mean_prev;
    };

    std::vector<Complex> mf, mb;
    std::vector<double> vf, vb;
    for (int it = 0; it < schedule.iterations; ++it) {
        if (schedule.mode == RingSchedule::Mode::Parallel) {
            mf = det.mean_fwd;
            vf = det.var_fwd;
            mb = det.mean_bwd;
            vb = det.var_bwd;
            for (int j = 0; j < m; ++j) {
                const auto sj = static_cast<std::size_t>(j);
                step(links.forward(j), y_fwd[sj], mf[static_cast<std::size_t>(links.prev(j))],
                     vf[static_cast<std::size_t>(links.prev(j))], det.mean_fwd[sj], det.var_fwd[sj]);
                step(links.backward(j), y_bwd[sj], mb[static_cast<std::size_t>(links.next(j))],
                     vb[static_cast<std::size_t>(links.next(j))], det.mean_bwd[sj], det.var_bwd[sj]);
            }
        } else {
            for (int j = 0; j < m; ++j) {
                const auto sj = static_cast<std::size_t>(j);
                step(links.forward(j), y_fwd[sj], det.mean_fwd[static_cast<std::size_t>(links.prev(j))],
                     det.var_fwd[static_cast<std::size_t>(links.prev(j))], det.mean_fwd[sj],
                     det.var_fwd[sj]);
            }
            for (int k = 0; k < m; ++k) {
                const int j = m - 1 - k;
                const auto sj = static_cast<std::size_t>(j);
                step(links.backward(j), y_bwd[sj], det.mean_bwd[static_cast<std::size_t>(links.next(j))],
                     det.var_bwd[static_cast<std::size_t>(links.next(j))], det.mean_bwd[sj],
                     det.var_bwd[sj]);
            }
        }
    }
    return det;
}

// ---------------------------------------------------------------------------
// Binary (scalar LLR) ring BP
// ---------------------------------------------------------------------------

struct BinaryOptions {
    std::vector<double> priors;  // a-priori LLR per stream; empty means uniform
    double llr_clamp = 50.0;     // messages are clamped to +/- this value
    // When set, receives a copy of the forward messages after every
    // iteration (for density measurements).
    std::vector<std::vector<double>>* forward_trace = nullptr;
};

struct BinaryDetection {
    std::vector<double> llr;      // final belief: forward + backward message
    std::vector<double> forward;  // l from ring predecessor
    std::vector<double> backward;
    std::vector<int> hard;  // symbol index (0 -> +1, 1 -> -1)
};

/// Per-link constants of the scalar LLR recursion, derived once per
/// observation: l_out = prior + 4 Re(w^H y) - zeta(l_in + shift; c).
struct BinaryLinkTerms {
    double four_y_real = 0.0;
    double shift = 0.0;  // 2/noise_power * Re(conj(neighbor_gain) w^H y)
    double c = 0.0;      // 2 Re(neighbor_gain)
};

inline BinaryLinkTerms binary_link_terms(const TruncatedLink& link, const CVector& y) {
    if (!(link.noise_power > 0.0)) {
        throw DegenerateLink("binary_link_terms: non-positive residual noise power");
    }
    BinaryLinkTerms t;
    const Complex y_link = link.weights.dot(y);
    t.four_y_real = 4.0 * y_link.real();
    t.shift = 2.0 * (std::conj(link.neighbor_gain) * y_link).real() / link.noise_power;
    t.c = 2.0 * link.neighbor_gain.real();
    return t;
}

/// Scalar forward-backward recursion for BPSK. Equivalent to the discrete
/// recursion in LLR form, but each message is a single number.
inline BinaryDetection ring_bp_binary(const RingLinks& links, const CVector& y,
                                      const Alphabet& alphabet, const RingSchedule& schedule = {},
                                      const BinaryOptions& opts = {}) {
    if (alphabet.name != Modulation::Bpsk) {
        throw AlphabetMismatch("ring_bp_binary requires the BPSK alphabet");
    }
    const int m = links.streams();
    std::vector<BinaryLinkTerms> t_fwd, t_bwd;
    t_fwd.reserve(static_cast<std::size_t>(m));
    t_bwd.reserve(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        t_fwd.push_back(binary_link_terms(links.forward(j), y));
        t_bwd.push_back(binary_link_terms(links.backward(j), y));
    }
    auto prior = [&](int j) {
        return opts.priors.empty() ? 0.0 : opts.priors[static_cast<std::size_t>(j)];
    };
    auto clamp = [&](double l) { return std::clamp(l, -opts.llr_clamp, opts.llr_clamp); };

    BinaryDetection det;
    det.forward.assign(static_cast<std::size_t>(m), 0.0);
    det.backward.assign(static_cast<std::size_t>(m), 0.0);

    std::vector<double> scratch;
    for (int it = 0; it < schedule.iterations; ++it) {
        if (schedule.mode == RingSchedule::Mode::Parallel) {
            scratch = det.forward;
            for (int j = 0; j < m; ++j) {
                const auto& t = t_fwd[static_cast<std::size_t>(j)];
                const double in = scratch[static_cast<std::size_t>(links.prev(j))];
                det.forward[static_cast<std::size_t>(j)] =
                    clamp(prior(j) + t.four_y_real - zeta(in + t.shift, t.c));
            }
            scratch = det.backward;
            for (int j = 0; j < m; ++j) {
                const auto& t = t_bwd[static_cast<std::size_t>(j)];
                const double in = scratch[static_cast<std::size_t>(links.next(j))];
                det.backward[static_cast<std::size_t>(j)] =
                    clamp(prior(j) + t.four_y_real - zeta(in + t.shift, t.c));
            }
        } else {
            for (int j = 0; j < m; ++j) {
                const auto& t = t_fwd[static_cast<std::size_t>(j)];
                const double in = det.forward[static_cast<std::size_t>(links.prev(j))];
                det.forward[static_cast<std::size_t>(j)] =
                    clamp(prior(j) + t.four_y_real - zeta(in + t.shift, t.c));
            }
            for (int k = 0; k < m; ++k) {
                const int j = m - 1 - k;
                const auto& t = t_bwd[static_cast<std::size_t>(j)];
                const double in = det.backward[static_cast<std::size_t>(links.next(j))];
                det.backward[static_cast<std::size_t>(j)] =
                    clamp(prior(j) + t.four_y_real - zeta(in + t.shift, t.c));
            }
        }
        if (opts.forward_trace) opts.forward_trace->push_back(det.forward);
    }

    det.llr.resize(static_cast<std::size_t>(m));
    det.hard.resize(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        det.llr[sj] = det.forward[sj] + det.backward[sj];
        det.hard[sj] = det.llr[sj] >= 0.0 ? 0 : 1;
    }
    return det;
}

// ---------------------------------------------------------------------------
// Linear MMSE baseline
// ---------------------------------------------------------------------------

struct LmmseDetection {
    CVector xhat;       // h_j^H K^{-1} y per stream
    RVector mmse;       // 1 - h_j^H K^{-1} h_j per stream
    RVector llr;        // BPSK LLR: 4 Re(xhat) / mmse
    std::vector<int> hard;  // nearest-symbol index
};

inline LmmseDetection lmmse_detect(const ChannelInstance& ch, const CVector& y) {
    const CMatrix k = build_k_matrix(ch.h, ch.sigma2, {});
    Eigen::LLT<CMatrix> llt(k);
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefinite("lmmse_detect: covariance not positive definite");
    }
    const CVector z = llt.solve(y);
    const CMatrix kinv_h = llt.solve(ch.h);

    LmmseDetection det;
    const int m = ch.m();
    det.xhat = ch.h.adjoint() * z;
    det.mmse.resize(m);
    det.llr.resize(m);
    det.hard.resize(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        const double rho = ch.h.col(j).dot(kinv_h.col(j)).real();
        det.mmse(j) = 1.0 - rho;
        det.llr(j) = 4.0 * det.xhat(j).real() / det.mmse(j);
        det.hard[static_cast<std::size_t>(j)] = ch.alphabet.hard_decision(det.xhat(j));
    }
    return det;
}

/// Post-detection SINR of the LMMSE estimate on the binary decision
/// metric (real dimension): 2 rho / (1 - rho) with rho = h^H K^{-1} h.
inline RVector lmmse_sinr(const ChannelInstance& ch) {
    const CMatrix k = build_k_matrix(ch.h, ch.sigma2, {});
    Eigen::LLT<CMatrix> llt(k);
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefinite("lmmse_sinr: covariance not positive definite");
    }
    const CMatrix kinv_h = llt.solve(ch.h);
    RVector out(ch.m());
    for (int j = 0; j < ch.m(); ++j) {
        const double rho = ch.h.col(j).dot(kinv_h.col(j)).real();
        out(j) = 2.0 * rho / (1.0 - rho);
    }
    return out;
}

}  // namespace ringbp

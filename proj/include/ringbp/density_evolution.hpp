#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ringbp/convergence.hpp"
#include "ringbp/errors.hpp"
#include "ringbp/quadrature.hpp"
#include "ringbp/truncated_link.hpp"

namespace ringbp {

/// Gaussian summary of one directed LLR message: mean is the reliability
/// (sign-folded onto the transmitted bit), so both entries are
/// non-negative for any symmetric channel.
struct DensityState {
    double mean = 0.0;
    double variance = 0.0;
};

struct DeStates {
    std::vector<DensityState> forward;   // state of the message into j from j-1
    std::vector<DensityState> backward;  // state of the message into j from j+1
};

struct DeOptions {
    int quad_nodes = 40;
    bool check_quadrature = true;      // re-evaluate at half the nodes and compare
    double quad_error_bound = 1e-4;    // relative; exceeding it throws QuadratureUnstable
    double psd_clip_fraction = 0.999;  // off-diagonal clip for indefinite covariances
};

/// Counters surfaced to the caller's log stream.
struct DeDiagnostics {
    int psd_clips = 0;
    double max_quad_error = 0.0;
};

/// Cross-covariance terms feeding one evolution step: sigma_lz couples the
/// incoming message to the current link's real noise (they share
/// interference one hop apart); alpha is the extra variance the imaginary
/// noise component injects through the observation-derived shift.
struct MessageCovariance {
    double sigma_lz = 0.0;
    double alpha = 0.0;
};

inline MessageCovariance message_covariance(const RingLinks& links, int j, Direction direction) {
    const bool fwd = direction == Direction::Forward;
    const TruncatedLink& link = fwd ? links.forward(j) : links.backward(j);
    MessageCovariance out;
    out.sigma_lz = links.hop_noise_covariance(j, fwd);
    const double g = 4.0 * link.neighbor_gain.imag() / link.noise_power;
    out.alpha = g * g * link.noise_var_imag;
    return out;
}

namespace detail {

/// The one-step LLR as a function of the conditioning triple: bit value of
/// the neighbor, real noise-plus-signal of the link, and the lumped
/// Gaussian carrying the previous message plus the imaginary-носе shift.
struct DeIntegrand {
    double a_r = 0.0;   // Re(neighbor_gain)
    double c = 0.0;     // 2 a_r
    double k_z = 0.0;   // 4 a_r / noise_power
    double k_x = 0.0;   // 4 |neighbor_gain|^2 / noise_power

    explicit DeIntegrand(const TruncatedLink& link) {
        a_r = link.neighbor_gain.real();
        c = 2.0 * a_r;
        k_z = 4.0 * a_r / link.noise_power;
        k_x = 4.0 * std::norm(link.neighbor_gain) / link.noise_power;
    }

    double operator()(double x, double z, double w) const {
        return 4.0 * z + 4.0 * a_r * x - zeta(k_z * z + k_x * x + w, c);
    }
};

struct MeanVar {
    double mean = 0.0;
    double variance = 0.0;
};

inline MeanVar de_step_at(const GaussHermite& gh, const TruncatedLink& link,
                          const DensityState& prev, const MessageCovariance& cov,
                          double psd_clip, DeDiagnostics* diag) {
    const DeIntegrand llr(link);
    const double mean_z = link.self_gain.real();
    const double var_z = link.noise_var_real;
    // A message with zero variance carries no noise history, so the
    // cross-covariance with the current link vanishes; afterwards the
    // message contains the previous link's real noise scaled by 4.
    const double cov_zw = prev.variance > 0.0 ? 4.0 * cov.sigma_lz : 0.0;
    const double var_w = prev.variance + cov.alpha;

    const double s = std::sqrt(2.0);
    double e1 = 0.0, e2 = 0.0;
    for (double x : {1.0, -1.0}) {
        BivariateGaussian g(mean_z, prev.mean * x, var_z, var_w, cov_zw, psd_clip);
        if (g.clipped && diag) ++diag->psd_clips;
        for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
            const double z = g.mean0 + s * g.l00 * gh.nodes[i];
            double inner1 = 0.0, inner2 = 0.0;
            for (std::size_t k = 0; k < gh.nodes.size(); ++k) {
                const double w = g.mean1 + s * (g.l10 * gh.nodes[i] + g.l11 * gh.nodes[k]);
                const double value = llr(x, z, w);
                inner1 += gh.weights[k] * value;
                inner2 += gh.weights[k] * value * value;
            }
            e1 += 0.5 * gh.weights[i] * inner1;
            e2 += 0.5 * gh.weights[i] * inner2;
        }
    }
    e1 /= std::numbers::pi;
    e2 /= std::numbers::pi;
    return {e1, e2 - e1 * e1};
}

}  // namespace detail

/// Evolves the Gaussian density of one directed message through one link.
inline DensityState de_step(const TruncatedLink& link, const DensityState& prev,
                            const MessageCovariance& cov, const DeOptions& opts = {},
                            DeDiagnostics* diag = nullptr) {
    const GaussHermite gh(opts.quad_nodes);
    const detail::MeanVar full =
        detail::de_step_at(gh, link, prev, cov, opts.psd_clip_fraction, diag);
    if (opts.check_quadrature) {
        const GaussHermite gh_half(std::max(4, opts.quad_nodes / 2));
        const detail::MeanVar coarse =
            detail::de_step_at(gh_half, link, prev, cov, opts.psd_clip_fraction, nullptr);
        const double err =
            std::max(std::abs(full.mean - coarse.mean) / std::max(1.0, std::abs(full.mean)),
                     std::abs(full.variance - coarse.variance) / std::max(1.0, std::abs(full.variance)));
        if (diag) diag->max_quad_error = std::max(diag->max_quad_error, err);
        if (err > opts.quad_error_bound) {
            throw QuadratureUnstable("de_step: estimated quadrature error " + std::to_string(err));
        }
    }
    return {full.mean, full.variance};
}

/// Runs the parallel-schedule density evolution for `turns` complete
/// update rounds. Entry [0] is the all-zero initialization; entry [t] the
/// states after round t.
inline std::vector<DeStates> run_de(const RingLinks& links, int turns, const DeOptions& opts = {},
                                    DeDiagnostics* diag = nullptr) {
    const int m = links.streams();
    std::vector<MessageCovariance> cov_f(static_cast<std::size_t>(m)),
        cov_b(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        cov_f[static_cast<std::size_t>(j)] = message_covariance(links, j, Direction::Forward);
        cov_b[static_cast<std::size_t>(j)] = message_covariance(links, j, Direction::Backward);
    }

    std::vector<DeStates> trace;
    trace.reserve(static_cast<std::size_t>(turns) + 1);
    DeStates state;
    state.forward.assign(static_cast<std::size_t>(m), DensityState{});
    state.backward.assign(static_cast<std::size_t>(m), DensityState{});
    trace.push_back(state);

    for (int t = 0; t < turns; ++t) {
        DeStates next = state;
        for (int j = 0; j < m; ++j) {
            const auto sj = static_cast<std::size_t>(j);
            next.forward[sj] =
                de_step(links.forward(j), state.forward[static_cast<std::size_t>(links.prev(j))],
                        cov_f[sj], opts, diag);
            next.backward[sj] =
                de_step(links.backward(j), state.backward[static_cast<std::size_t>(links.next(j))],
                        cov_b[sj], opts, diag);
        }
        state = std::move(next);
        trace.push_back(state);
    }
    return trace;
}

/// Gaussian tail probability.
inline double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

/// Closed-form SINR of the final belief under perfect cancellation of the
/// neighbor symbols; an upper bound on the achievable SINR.
inline double sinr_bound(const RingLinks& links, int j) {
    const TruncatedLink& f = links.forward(j);
    const TruncatedLink& b = links.backward(j);
    const double num = f.self_gain.real() + b.self_gain.real();
    const double den = f.noise_var_real + b.noise_var_real + 2.0 * links.pair_noise_covariance(j);
    return num * num / den;
}

struct SinrReport {
    std::vector<double> mean_llr;   // mean of the final belief per stream
    std::vector<double> var_llr;    // variance including the cross term
    std::vector<double> gamma;      // mean^2 / variance
    std::vector<double> gamma_bound;
    double ber_estimate = 0.0;  // (1/M) sum Q(sqrt(gamma))
    double ber_bound = 0.0;     // same with gamma_bound
};

/// Final-belief statistics from converged evolution states. The two
/// incoming messages share link noise, so their product mean is evaluated
/// by conditioning each on its own link noise and integrating over the
/// correlated noise pair.
inline SinrReport belief_sinr(const RingLinks& links, const DeStates& states,
                              const DeOptions& opts = {}, DeDiagnostics* diag = nullptr) {
    const int m = links.streams();
    const GaussHermite gh(opts.quad_nodes);
    const double s = std::sqrt(2.0);

    SinrReport report;
    report.mean_llr.resize(static_cast<std::size_t>(m));
    report.var_llr.resize(static_cast<std::size_t>(m));
    report.gamma.resize(static_cast<std::size_t>(m));
    report.gamma_bound.resize(static_cast<std::size_t>(m));

    for (int j = 0; j < m; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        const TruncatedLink& link_f = links.forward(j);
        const TruncatedLink& link_b = links.backward(j);
        const DensityState& st_f = states.forward[sj];
        const DensityState& st_b = states.backward[sj];
        const DensityState& prev_f = states.forward[static_cast<std::size_t>(links.prev(j))];
        const DensityState& prev_b = states.backward[static_cast<std::size_t>(links.next(j))];
        const MessageCovariance cov_f = message_covariance(links, j, Direction::Forward);
        const MessageCovariance cov_b = message_covariance(links, j, Direction::Backward);

        // Conditional mean of one incoming message given its link noise z.
        auto conditional_mean = [&](const TruncatedLink& link, const DensityState& prev,
                                    const MessageCovariance& cov) {
            const detail::DeIntegrand llr(link);
            const double var_z = link.noise_var_real;
            const double cov_zw = prev.variance > 0.0 ? 4.0 * cov.sigma_lz : 0.0;
            const double slope = var_z > 0.0 ? cov_zw / var_z : 0.0;
            const double var_w_cond =
                std::max(prev.variance + cov.alpha - slope * cov_zw, 0.0);
            const double mean_z = link.self_gain.real();
            return [=, &gh](double z) {
                double acc = 0.0;
                for (double x : {1.0, -1.0}) {
                    const double mean_w = prev.mean * x + slope * (z - mean_z);
                    acc += 0.5 * normal_expectation(gh, mean_w, var_w_cond,
                                                    [&](double w) { return llr(x, z, w); });
                }
                return acc;
            };
        };
        const auto mean_f_given_z = conditional_mean(link_f, prev_f, cov_f);
        const auto mean_b_given_z = conditional_mean(link_b, prev_b, cov_b);

        const double szz = links.pair_noise_covariance(j);
        BivariateGaussian g(link_f.self_gain.real(), link_b.self_gain.real(),
                            link_f.noise_var_real, link_b.noise_var_real, szz,
                            opts.psd_clip_fraction);
        if (g.clipped && diag) ++diag->psd_clips;

        // Cache the forward conditional mean: the whitened first coordinate
        // depends only on the outer node.
        std::vector<double> f_cache(gh.nodes.size());
        for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
            f_cache[i] = mean_f_given_z(g.mean0 + s * g.l00 * gh.nodes[i]);
        }
        double e_ll = 0.0;
        for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
            double inner = 0.0;
            for (std::size_t k = 0; k < gh.nodes.size(); ++k) {
                const double zb = g.mean1 + s * (g.l10 * gh.nodes[i] + g.l11 * gh.nodes[k]);
                inner += gh.weights[k] * mean_b_given_z(zb);
            }
            e_ll += gh.weights[i] * f_cache[i] * inner;
        }
        e_ll /= std::numbers::pi;

        const double mean = st_f.mean + st_b.mean;
        const double var = st_f.variance + st_b.variance + 2.0 * e_ll - 2.0 * st_f.mean * st_b.mean;
        if (!(var > 0.0)) {
            throw NegativeVariance("belief_sinr: non-positive belief variance at stream " +
                                   std::to_string(j));
        }
        report.mean_llr[sj] = mean;
        report.var_llr[sj] = var;
        report.gamma[sj] = mean * mean / var;
        report.gamma_bound[sj] = sinr_bound(links, j);
    }

    double ber = 0.0, ber_b = 0.0;
    for (int j = 0; j < m; ++j) {
        ber += q_function(std::sqrt(report.gamma[static_cast<std::size_t>(j)]));
        ber_b += q_function(std::sqrt(report.gamma_bound[static_cast<std::size_t>(j)]));
    }
    report.ber_estimate = ber / m;
    report.ber_bound = ber_b / m;
    return report;
}

/// Ensemble BER estimate: average of Q(sqrt(gamma)) over streams and
/// channels, plus the same under the perfect-cancellation bound.
inline std::pair<double, double> ber_from_sinr(const std::vector<SinrReport>& reports) {
    double ber = 0.0, ber_bound = 0.0;
    std::size_t count = 0;
    for (const auto& r : reports) {
        for (std::size_t j = 0; j < r.gamma.size(); ++j) {
            ber += q_function(std::sqrt(r.gamma[j]));
            ber_bound += q_function(std::sqrt(r.gamma_bound[j]));
            ++count;
        }
    }
    if (count == 0) return {0.0, 0.0};
    return {ber / static_cast<double>(count), ber_bound / static_cast<double>(count)};
}

}  // namespace ringbp

#pragma once

// Shared fixtures and independent Monte-Carlo oracles for the test and
// acceptance suites. Everything here evaluates the *definitions* (sample
// moments of explicitly simulated noise, brute-force sums) rather than
// reusing the library's closed forms.

#include <cmath>
#include <string>
#include <vector>

#include "ringbp/ringbp.hpp"

namespace testsupport {

inline std::string data_path(const std::string& name) {
    return std::string(RINGBP_DATA_DIR) + "/" + name;
}

inline ringbp::CMatrix h_ex() { return ringbp::read_matrix_file(data_path("h_ex.txt")); }

inline double sigma2_at_6db() { return ringbp::snr_to_sigma2(6.0); }

/// Random Hermitian positive-definite matrix A = B B^H + eps I.
inline ringbp::CMatrix random_hpd(int n, ringbp::StreamRng& rng, double eps = 0.1) {
    ringbp::CMatrix b(n, n);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) b(r, c) = rng.next_cnormal(1.0);
    }
    ringbp::CMatrix a = b * b.adjoint() + eps * ringbp::CMatrix::Identity(n, n);
    return ((a + a.adjoint()) * 0.5).eval();
}

inline ringbp::CVector random_cvector(int n, ringbp::StreamRng& rng) {
    ringbp::CVector v(n);
    for (int r = 0; r < n; ++r) v(r) = rng.next_cnormal(1.0);
    return v;
}

/// Sample mean together with the standard error of the mean.
struct MomentEstimate {
    double mean = 0.0;
    double se = 0.0;
};

class MomentAccumulator {
  public:
    void add(double v) {
        sum_ += v;
        sum2_ += v * v;
        ++n_;
    }
    MomentEstimate estimate() const {
        const double n = static_cast<double>(n_);
        const double mean = sum_ / n;
        const double var = std::max(sum2_ / n - mean * mean, 0.0);
        return {mean, std::sqrt(var / n)};
    }

  private:
    double sum_ = 0.0, sum2_ = 0.0;
    long long n_ = 0;
};

inline bool within_se(const MomentEstimate& est, double expected, double n_sigmas = 3.0,
                      double abs_floor = 1e-12) {
    return std::abs(est.mean - expected) <= n_sigmas * est.se + abs_floor;
}

/// One joint draw of the residual noises of several truncated links, from
/// the definition: antipodal interferer symbols plus receiver noise pushed
/// through each link's weight vector.
struct LinkNoiseDraw {
    std::vector<std::complex<double>> noise;  // per requested link
};

inline LinkNoiseDraw draw_link_noises(const ringbp::CMatrix& h, double sigma2,
                                      const std::vector<const ringbp::TruncatedLink*>& links,
                                      ringbp::StreamRng& rng) {
    const int m = static_cast<int>(h.cols());
    const int n = static_cast<int>(h.rows());
    std::vector<double> x(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) x[static_cast<std::size_t>(k)] = rng.next_double() < 0.5 ? 1.0 : -1.0;
    ringbp::CVector noise_vec(n);
    for (int r = 0; r < n; ++r) noise_vec(r) = rng.next_cnormal(sigma2);

    LinkNoiseDraw out;
    out.noise.reserve(links.size());
    for (const auto* link : links) {
        ringbp::CVector v = noise_vec;
        for (int k = 0; k < m; ++k) {
            if (k == link->j || k == link->i) continue;
            v += h.col(k) * x[static_cast<std::size_t>(k)];
        }
        out.noise.push_back(link->weights.dot(v));
    }
    return out;
}

/// Gaussian tail oracle via the complementary error function (independent
/// of the library's helper only in call site; kept for clarity of tests).
inline double q_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

}  // namespace testsupport

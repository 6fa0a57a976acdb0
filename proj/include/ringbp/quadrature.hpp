#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "ringbp/errors.hpp"

namespace ringbp {

/// Gauss-Hermite rule for the weight exp(-t^2): integrates polynomials of
/// degree 2n-1 exactly. Nodes are found by Newton iteration on the
/// scaled Hermite recurrence.
struct GaussHermite {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussHermite(int n) {
        nodes.resize(static_cast<std::size_t>(n));
        weights.resize(static_cast<std::size_t>(n));
        const double pim4 = 1.0 / std::pow(std::numbers::pi, 0.25);
        const int half = (n + 1) / 2;
        double z = 0.0;
        for (int i = 0; i < half; ++i) {
            // Standard initial guesses for the largest roots, then stepping
            // inward from the previous one.
            if (i == 0) {
                z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
            } else if (i == 1) {
                z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
            } else if (i == 2) {
                z = 1.86 * z - 0.86 * nodes[0];
            } else if (i == 3) {
                z = 1.91 * z - 0.91 * nodes[1];
            } else {
                z = 2.0 * z - nodes[static_cast<std::size_t>(i) - 2];
            }
            double pp = 0.0;
            for (int iter = 0; iter < 100; ++iter) {
                double p1 = pim4;
                double p2 = 0.0;
                for (int k = 0; k < n; ++k) {
                    const double p3 = p2;
                    p2 = p1;
                    p1 = z * std::sqrt(2.0 / (k + 1.0)) * p2 -
                         std::sqrt(static_cast<double>(k) / (k + 1.0)) * p3;
                }
                pp = std::sqrt(2.0 * n) * p2;
                const double dz = p1 / pp;
                z -= dz;
                if (std::abs(dz) < 1e-15) break;
            }
            nodes[static_cast<std::size_t>(i)] = z;
            nodes[static_cast<std::size_t>(n - 1 - i)] = -z;
            weights[static_cast<std::size_t>(i)] = 2.0 / (pp * pp);
            weights[static_cast<std::size_t>(n - 1 - i)] = weights[static_cast<std::size_t>(i)];
        }
        // Roots come out largest-first; order them ascending.
        std::reverse(nodes.begin(), nodes.end());
    }
};

/// E[f(X)] for X ~ N(mean, var) via Gauss-Hermite.
template <typename F>
inline double normal_expectation(const GaussHermite& gh, double mean, double var, const F& f) {
    const double scale = std::sqrt(2.0 * std::max(var, 0.0));
    double acc = 0.0;
    for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
        acc += gh.weights[i] * f(mean + scale * gh.nodes[i]);
    }
    return acc / std::sqrt(std::numbers::pi);
}

/// 2x2 symmetric PSD factorization for quadrature whitening, with the
/// off-diagonal clipped to keep the matrix positive semidefinite (the
/// covariance entries are model approximations and can overshoot).
struct BivariateGaussian {
    double mean0 = 0.0, mean1 = 0.0;
    // Lower-triangular factor of the covariance: C = L L^T.
    double l00 = 0.0, l10 = 0.0, l11 = 0.0;
    bool clipped = false;

    BivariateGaussian(double m0, double m1, double var0, double var1, double cov,
                      double clip_fraction = 0.999)
        : mean0(m0), mean1(m1) {
        var0 = std::max(var0, 0.0);
        var1 = std::max(var1, 0.0);
        const double bound = clip_fraction * std::sqrt(var0 * var1);
        if (std::abs(cov) > bound) {
            cov = std::copysign(bound, cov);
            clipped = true;
        }
        l00 = std::sqrt(var0);
        l10 = l00 > 0.0 ? cov / l00 : 0.0;
        l11 = std::sqrt(std::max(var1 - l10 * l10, 0.0));
    }
};

/// E[f(U, V)] for (U, V) jointly Gaussian, via a tensor-product rule on
/// the whitened pair.
template <typename F>
inline double bivariate_expectation(const GaussHermite& gh, const BivariateGaussian& g, const F& f) {
    const double s = std::sqrt(2.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
        const double t0 = gh.nodes[i];
        const double u = g.mean0 + s * g.l00 * t0;
        double inner = 0.0;
        for (std::size_t k = 0; k < gh.nodes.size(); ++k) {
            const double t1 = gh.nodes[k];
            const double v = g.mean1 + s * (g.l10 * t0 + g.l11 * t1);
            inner += gh.weights[k] * f(u, v);
        }
        acc += gh.weights[i] * inner;
    }
    return acc / std::numbers::pi;
}

}  // namespace ringbp

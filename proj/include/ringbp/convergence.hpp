#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "ringbp/detector.hpp"
#include "ringbp/errors.hpp"
#include "ringbp/linalg.hpp"

namespace ringbp {

enum class Direction { Forward, Backward };

/// Product of translation matrices for one complete turn around the ring,
/// ending at stream j. Iterating it reproduces the long-run behavior of
/// the discrete message recursion.
struct TurnOperator {
    int j = 0;
    Direction direction = Direction::Forward;
    RMatrix matrix;
};

/// Builds the one-turn operator from per-target translation matrices
/// (index t holds the matrix of the link into stream t for the given
/// direction).
inline TurnOperator turn_operator(const std::vector<RMatrix>& translations, int j,
                                  Direction direction) {
    const int m = static_cast<int>(translations.size());
    TurnOperator op;
    op.j = j;
    op.direction = direction;
    op.matrix = translations[static_cast<std::size_t>(j)];
    for (int k = 1; k < m; ++k) {
        const int t = direction == Direction::Forward ? (j - k + m * m) % m : (j + k) % m;
        op.matrix = op.matrix * translations[static_cast<std::size_t>(t)];
    }
    return op;
}

struct PerronReport {
    RVector limit;            // L1-normalized dominant eigenvector
    double lambda1 = 0.0;     // dominant eigenvalue estimate
    int iterations = 0;       // iterations until the tolerance was met
    double spectral_gap = 0.0;  // |lambda2| / lambda1 estimate from residual decay
    bool degenerate = false;  // residuals vanished too fast to estimate the gap
};

/// Power iteration on a positive matrix from a given start (uniform by
/// default), normalizing in L1 each step. The spectral gap is estimated
/// from the geometric decay of the L1 residuals.
inline PerronReport perron_limit(const TurnOperator& op, double tol = 1e-10,
                                 int max_iterations = 100000, const RVector* start = nullptr) {
    const Eigen::Index q = op.matrix.rows();
    RVector v = start ? detail::normalized_l1(*start) : RVector::Constant(q, 1.0 / static_cast<double>(q));

    std::vector<double> residuals;
    PerronReport report;
    for (int it = 1; it <= max_iterations; ++it) {
        RVector next = op.matrix * v;
        report.lambda1 = next.sum();
        next /= report.lambda1;
        const double res = (next - v).cwiseAbs().sum();
        residuals.push_back(res);
        v = next;
        if (res < tol) {
            report.iterations = it;
            break;
        }
        if (it == max_iterations) {
            throw NoConvergence("perron_limit: tolerance not reached within the iteration cap");
        }
    }
    report.limit = v;

    // Least-squares slope of log residuals over the last window; the decay
    // rate per iteration approximates |lambda2| / lambda1.
    const int window = std::min<int>(20, static_cast<int>(residuals.size()));
    int usable = 0;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (int k = 0; k < window; ++k) {
        const double r = residuals[residuals.size() - static_cast<std::size_t>(window) + static_cast<std::size_t>(k)];
        if (!(r > 0.0)) continue;
        const double x = static_cast<double>(k);
        const double yv = std::log(r);
        sx += x;
        sy += yv;
        sxx += x * x;
        sxy += x * yv;
        ++usable;
    }
    if (usable >= 3) {
        const double n = static_cast<double>(usable);
        const double denom = n * sxx - sx * sx;
        if (denom > 0.0) {
            report.spectral_gap = std::exp((n * sxy - sx * sy) / denom);
        } else {
            report.degenerate = true;
        }
    } else {
        report.degenerate = true;
    }
    return report;
}

/// One node of the scalar LLR recursion: l -> offset - zeta(l + shift; c).
struct ScalarNodeMap {
    double offset = 0.0;
    double shift = 0.0;
    double c = 0.0;

    double operator()(double l) const { return offset - zeta(l + shift, c); }
};

/// Composition of the M per-node maps for one complete turn, ending at
/// the message into stream j.
struct ScalarTurnMap {
    std::vector<ScalarNodeMap> maps;  // applied in order

    double operator()(double l) const {
        for (const auto& g : maps) l = g(l);
        return l;
    }
};

/// One-turn scalar map of the binary recursion for the message into j.
inline ScalarTurnMap binary_turn_map(const RingLinks& links, const CVector& y, int j,
                                     Direction direction) {
    const int m = links.streams();
    ScalarTurnMap turn;
    turn.maps.reserve(static_cast<std::size_t>(m));
    for (int k = 1; k <= m; ++k) {
        const int t = direction == Direction::Forward ? (j + k) % m : (j - k + m * m) % m;
        const auto& link = direction == Direction::Forward ? links.forward(t) : links.backward(t);
        const BinaryLinkTerms terms = binary_link_terms(link, y);
        turn.maps.push_back(ScalarNodeMap{terms.four_y_real, terms.shift, terms.c});
    }
    return turn;
}

struct FixedPointReport {
    double limit = 0.0;
    int iterations = 0;
    bool gaps_strictly_decreasing = true;  // |x_k - x_{k-1}| monotone
};

/// Iterates a contraction-like scalar map to its unique fixed point and
/// records whether the iterate gaps decreased strictly along the way.
template <typename Map>
inline FixedPointReport scalar_fixed_point(const Map& g, double tol = 1e-10, double start = 0.0,
                                           int max_iterations = 100000) {
    double x = start;
    double prev_gap = std::numeric_limits<double>::infinity();
    FixedPointReport report;
    for (int it = 1; it <= max_iterations; ++it) {
        const double next = g(x);
        const double gap = std::abs(next - x);
        x = next;
        if (gap > 0.0 && gap >= prev_gap) report.gaps_strictly_decreasing = false;
        prev_gap = gap;
        if (gap < tol) {
            report.iterations = it;
            report.limit = x;
            return report;
        }
    }
    throw NoConvergence("scalar_fixed_point: tolerance not reached within the iteration cap");
}

}  // namespace ringbp

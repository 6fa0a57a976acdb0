#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "ringbp/errors.hpp"

namespace ringbp {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Solves A x = b for Hermitian positive-definite A via Cholesky.
/// Throws NotPositiveDefinite when the factorization fails, which is the
/// signal for a degenerate channel (sigma2 == 0 or rank-deficient H).
inline CVector hermitian_solve(const CMatrix& a, const CVector& b) {
    Eigen::LLT<CMatrix> llt(a);
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefinite("hermitian_solve: matrix is not positive definite");
    }
    return llt.solve(b);
}

/// True when A equals its conjugate transpose to `tol` relative.
inline bool is_hermitian(const CMatrix& a, double tol = 1e-12) {
    if (a.rows() != a.cols()) return false;
    const double scale = std::max(1.0, a.norm());
    return (a - a.adjoint()).norm() <= tol * scale;
}

/// Noise-plus-interference covariance of the received vector with the
/// listed streams excluded: sigma2*I + sum over the remaining columns of
/// h_k h_k^H. Hermitian positive definite for sigma2 > 0.
inline CMatrix build_k_matrix(const CMatrix& h, double sigma2, const std::vector<int>& excluded) {
    const Eigen::Index n = h.rows();
    CMatrix k = sigma2 * CMatrix::Identity(n, n);
    for (Eigen::Index col = 0; col < h.cols(); ++col) {
        bool skip = false;
        for (int e : excluded) {
            if (e == static_cast<int>(col)) {
                skip = true;
                break;
            }
        }
        if (!skip) k.noalias() += h.col(col) * h.col(col).adjoint();
    }
    // Round off the asymmetry accumulated by the rank-1 updates.
    k = ((k + k.adjoint()) * 0.5).eval();
    return k;
}

}  // namespace ringbp

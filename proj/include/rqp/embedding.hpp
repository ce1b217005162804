// SPDX-License-Identifier: Apache-2.0
//
// rqp -- robust QoS precoding for the multiuser MISO downlink
//
// Complex matrix values and the real embeddings that the conic design
// formulations operate on. A complex row h maps to [Re(h), Im(h)]; a complex
// matrix P maps to the tied block matrix [[Re(P), Im(P)], [-Im(P), Re(P)]]
// so that embed_row(h) * embed_matrix(P) == embed_row(h * P).

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>

namespace rqp {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CRowVector = Eigen::RowVectorXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RRowVector = Eigen::RowVectorXd;
using RVector = Eigen::VectorXd;

/// Default tolerance for validating the tied block structure of an embedded
/// matrix coming back from a solver.
inline constexpr double kBlockTieTol = 1e-9;

/// [Re(h), Im(h)] layout; length 2*Nt.
inline RRowVector embed_row(const CRowVector& h) {
    if (h.size() == 0) throw std::invalid_argument("embed_row: empty row");
    if (!h.allFinite()) throw std::invalid_argument("embed_row: non-finite entries");
    RRowVector out(2 * h.size());
    out << h.real(), h.imag();
    return out;
}

/// [[Re(P), Im(P)], [-Im(P), Re(P)]]; 2Nt x 2K.
inline RMatrix embed_matrix(const CMatrix& P) {
    if (P.size() == 0) throw std::invalid_argument("embed_matrix: empty matrix");
    if (!P.allFinite()) throw std::invalid_argument("embed_matrix: non-finite entries");
    const Eigen::Index n = P.rows(), k = P.cols();
    RMatrix out(2 * n, 2 * k);
    out.topLeftCorner(n, k) = P.real();
    out.topRightCorner(n, k) = P.imag();
    out.bottomLeftCorner(n, k) = -P.imag();
    out.bottomRightCorner(n, k) = P.real();
    return out;
}

/// Largest deviation from the tied block structure: the two Re blocks must be
/// identical and the two Im blocks negatives of each other.
inline double block_tie_residual(const RMatrix& M) {
    if (M.rows() % 2 != 0 || M.cols() % 2 != 0)
        throw std::invalid_argument("block_tie_residual: odd dimensions");
    const Eigen::Index n = M.rows() / 2, k = M.cols() / 2;
    const double re_dev = (M.topLeftCorner(n, k) - M.bottomRightCorner(n, k)).cwiseAbs().maxCoeff();
    const double im_dev = (M.topRightCorner(n, k) + M.bottomLeftCorner(n, k)).cwiseAbs().maxCoeff();
    return std::max(re_dev, im_dev);
}

/// Inverse of embed_matrix. Rejects inputs whose block-tie residual exceeds
/// `tol` (signals corrupted solver output).
inline CMatrix unembed_matrix(const RMatrix& M, double tol = kBlockTieTol) {
    const double dev = block_tie_residual(M);
    if (dev > tol)
        throw std::invalid_argument("unembed_matrix: block-tie residual " + std::to_string(dev) +
                                    " exceeds tolerance");
    const Eigen::Index n = M.rows() / 2, k = M.cols() / 2;
    CMatrix P(n, k);
    P.real() = 0.5 * (M.topLeftCorner(n, k) + M.bottomRightCorner(n, k));
    P.imag() = 0.5 * (M.topRightCorner(n, k) - M.bottomLeftCorner(n, k));
    return P;
}

/// Complex row vector from its embedded form.
inline CRowVector unembed_row(const RRowVector& u) {
    if (u.size() % 2 != 0) throw std::invalid_argument("unembed_row: odd length");
    const Eigen::Index n = u.size() / 2;
    CRowVector h(n);
    h.real() = u.head(n);
    h.imag() = u.tail(n);
    return h;
}

}  // namespace rqp

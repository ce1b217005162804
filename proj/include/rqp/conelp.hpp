// SPDX-License-Identifier: Apache-2.0
//
// Dense primal-dual interior-point method for cone programs
//
//     minimize    c'x
//     subject to  A x = b
//                 G x + s = h,   s in K
//
// where K is a product of nonnegative orthants, second-order cones and PSD
// cones (in svec coordinates). Nesterov-Todd scaling with a Mehrotra
// predictor-corrector step on the homogeneous self-dual embedding, so
// primal/dual infeasibility is certified rather than guessed. The search
// direction is obtained from a reduced KKT system (s, z and kappa
// eliminated) followed by iterative refinement against the full system.
//
// Intended for the small dense problems this library generates (a few dozen
// variables, PSD blocks of order <= ~40); everything is O(m^3)-dense.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

namespace rqp::conelp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct ConeSpec {
    int l = 0;               // nonnegative orthant dimension
    std::vector<int> q;      // second-order cone dimensions
    std::vector<int> s;      // PSD block orders
};

struct Options {
    double feastol = 1e-8;
    double abstol = 1e-8;
    double reltol = 1e-8;
    double feastol_inacc = 1e-4;
    double abstol_inacc = 5e-5;
    double reltol_inacc = 5e-5;
    int max_iterations = 100;
    double step_fraction = 0.99;
    bool verbose = false;
};

enum class Status { Optimal, PrimalInfeasible, DualInfeasible, Inaccurate, Failed };

struct Solution {
    Status status = Status::Failed;
    VectorXd x, y, s, z;
    double pobj = 0.0, dobj = 0.0;
    double pres = 0.0, dres = 0.0;
    double gap = 0.0, relgap = 0.0;
    int iterations = 0;
    std::string message;
};

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline int svec_dim(int m) { return m * (m + 1) / 2; }

// svec layout: lower triangle stacked column by column, off-diagonals * sqrt2
inline void unsvec(const double* u, int m, MatrixXd& M) {
    static const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    M.resize(m, m);
    int k = 0;
    for (int j = 0; j < m; ++j)
        for (int i = j; i < m; ++i, ++k) {
            const double v = (i == j) ? u[k] : u[k] * inv_sqrt2;
            M(i, j) = v;
            M(j, i) = v;
        }
}

inline void svec(const MatrixXd& M, double* u) {
    static const double sqrt2 = std::sqrt(2.0);
    const int m = static_cast<int>(M.rows());
    int k = 0;
    for (int j = 0; j < m; ++j)
        for (int i = j; i < m; ++i, ++k) u[k] = (i == j) ? M(i, j) : M(i, j) * sqrt2;
}

struct Layout {
    int l = 0;
    std::vector<std::pair<int, int>> q;        // (offset, dim)
    std::vector<std::pair<int, int>> s;        // (offset, order)
    int m = 0;                                 // total cone rows
    int degree = 0;                            // barrier degree
};

inline Layout make_layout(const ConeSpec& cone) {
    Layout L;
    L.l = cone.l;
    int off = cone.l;
    L.degree = cone.l;
    for (int qi : cone.q) {
        L.q.emplace_back(off, qi);
        off += qi;
        L.degree += 1;
    }
    for (int si : cone.s) {
        L.s.emplace_back(off, si);
        off += svec_dim(si);
        L.degree += si;
    }
    L.m = off;
    return L;
}

// J u = (u0, -u1) for a second-order cone vector
inline VectorXd socJ(const Eigen::Ref<const VectorXd>& u) {
    VectorXd v = -u;
    v[0] = u[0];
    return v;
}

struct SocScaling {
    double beta = 1.0;
    VectorXd v;  // unit hyperbolic norm: v'Jv = 1
};

struct PsdScaling {
    MatrixXd R, Rinv, T, Tinv;
    VectorXd lam;  // scaled-space eigenvalues (diagonal of Lambda)
};

struct Scaling {
    VectorXd d;                    // LP scaling
    std::vector<SocScaling> soc;
    std::vector<PsdScaling> psd;
    VectorXd lambda;               // scaled point, full cone coordinates
};

// factor M = F F' for symmetric positive definite M; falls back to an
// eigenvalue-clamped square root if the Cholesky breaks down numerically
inline MatrixXd robust_factor(const MatrixXd& M) {
    Eigen::LLT<MatrixXd> llt(M);
    if (llt.info() == Eigen::Success) return MatrixXd(llt.matrixL());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(M);
    const double floor_val = std::max(1e-14 * es.eigenvalues().cwiseAbs().maxCoeff(), 1e-150);
    VectorXd ev = es.eigenvalues().cwiseMax(floor_val);
    return es.eigenvectors() * ev.cwiseSqrt().asDiagonal();
}

inline bool compute_scaling(const Layout& L, const VectorXd& s, const VectorXd& z, Scaling& W) {
    W.lambda.resize(L.m);
    if (L.l > 0) {
        auto sl = s.head(L.l).array();
        auto zl = z.head(L.l).array();
        if ((sl <= 0).any() || (zl <= 0).any()) return false;
        W.d = (sl / zl).sqrt().matrix();
        W.lambda.head(L.l) = (sl * zl).sqrt().matrix();
    }
    W.soc.resize(L.q.size());
    for (size_t i = 0; i < L.q.size(); ++i) {
        const auto [off, dim] = L.q[i];
        const auto sk = s.segment(off, dim);
        const auto zk = z.segment(off, dim);
        const double a2 = sk[0] * sk[0] - sk.tail(dim - 1).squaredNorm();
        const double b2 = zk[0] * zk[0] - zk.tail(dim - 1).squaredNorm();
        if (a2 <= 0 || b2 <= 0 || sk[0] <= 0 || zk[0] <= 0) return false;
        const double aa = std::sqrt(a2), bb = std::sqrt(b2);
        SocScaling& sc = W.soc[i];
        sc.beta = std::sqrt(aa / bb);
        const double cc = std::sqrt((sk.dot(zk) / (aa * bb) + 1.0) / 2.0);
        VectorXd v = (sk / aa + socJ(zk / bb)) / (2.0 * cc);
        v[0] += 1.0;
        v /= std::sqrt(2.0 * v[0]);
        sc.v = v;
        // scaled point
        VectorXd lam(dim);
        const double s0 = sk[0] / aa, z0 = zk[0] / bb;
        const double dd = 2.0 * cc + s0 + z0;
        lam[0] = cc;
        lam.tail(dim - 1) = ((cc + z0) / dd) * (sk.tail(dim - 1) / aa) +
                            ((cc + s0) / dd) * (zk.tail(dim - 1) / bb);
        lam *= std::sqrt(aa * bb);
        W.lambda.segment(off, dim) = lam;
    }
    W.psd.resize(L.s.size());
    for (size_t i = 0; i < L.s.size(); ++i) {
        const auto [off, order] = L.s[i];
        MatrixXd S, Z;
        unsvec(s.data() + off, order, S);
        unsvec(z.data() + off, order, Z);
        const MatrixXd Ls = robust_factor(S);
        const MatrixXd Lz = robust_factor(Z);
        Eigen::JacobiSVD<MatrixXd> svd(Lz.transpose() * Ls, Eigen::ComputeFullU);
        PsdScaling& ps = W.psd[i];
        ps.lam = svd.singularValues();
        if (ps.lam.minCoeff() <= 0) return false;
        const VectorXd rt = ps.lam.cwiseSqrt();
        // R = Lz^{-T} U sqrt(Lam), Rinv = sqrt(Lam)^{-1} U' Lz'
        ps.R = Lz.transpose().partialPivLu().solve(svd.matrixU()) * rt.asDiagonal();
        ps.Rinv = rt.cwiseInverse().asDiagonal() * svd.matrixU().transpose() * Lz.transpose();
        ps.T = ps.R * ps.R.transpose();
        ps.Tinv = ps.Rinv.transpose() * ps.Rinv;
        MatrixXd Lam = ps.lam.asDiagonal();
        svec(Lam, W.lambda.data() + off);
    }
    return true;
}

enum class Op { W, Wt, Winv, WinvT, D, Dinv };

// applies the NT scaling (or its transpose/inverse/Gram form) blockwise
inline VectorXd apply(const Layout& L, const Scaling& W, Op op, const VectorXd& u) {
    VectorXd out(L.m);
    if (L.l > 0) {
        switch (op) {
            case Op::W:
            case Op::Wt: out.head(L.l) = W.d.cwiseProduct(u.head(L.l)); break;
            case Op::Winv:
            case Op::WinvT: out.head(L.l) = u.head(L.l).cwiseQuotient(W.d); break;
            case Op::D: out.head(L.l) = W.d.array().square().matrix().cwiseProduct(u.head(L.l)); break;
            case Op::Dinv: out.head(L.l) = u.head(L.l).cwiseQuotient(W.d.array().square().matrix()); break;
        }
    }
    for (size_t i = 0; i < L.q.size(); ++i) {
        const auto [off, dim] = L.q[i];
        const SocScaling& sc = W.soc[i];
        const auto uk = u.segment(off, dim);
        auto H = [&](const VectorXd& w) -> VectorXd {
            return 2.0 * sc.v * sc.v.dot(w) - socJ(w);
        };
        auto Hinv = [&](const VectorXd& w) -> VectorXd {
            const VectorXd Jv = socJ(sc.v);
            return 2.0 * Jv * sc.v.dot(socJ(w)) - w;
        };
        VectorXd r;
        switch (op) {
            case Op::W:
            case Op::Wt: r = sc.beta * H(uk); break;
            case Op::Winv:
            case Op::WinvT: r = Hinv(uk) / sc.beta; break;
            case Op::D: r = sc.beta * sc.beta * H(H(uk)); break;
            case Op::Dinv: r = Hinv(Hinv(uk)) / (sc.beta * sc.beta); break;
        }
        out.segment(off, dim) = r;
    }
    for (size_t i = 0; i < L.s.size(); ++i) {
        const auto [off, order] = L.s[i];
        const PsdScaling& ps = W.psd[i];
        MatrixXd U;
        unsvec(u.data() + off, order, U);
        MatrixXd R;
        switch (op) {
            case Op::W: R = ps.R.transpose() * U * ps.R; break;
            case Op::Wt: R = ps.R * U * ps.R.transpose(); break;
            case Op::Winv: R = ps.Rinv.transpose() * U * ps.Rinv; break;
            case Op::WinvT: R = ps.Rinv * U * ps.Rinv.transpose(); break;
            case Op::D: R = ps.T * U * ps.T; break;
            case Op::Dinv: R = ps.Tinv * U * ps.Tinv; break;
        }
        R = 0.5 * (R + R.transpose());
        svec(R, out.data() + off);
    }
    return out;
}

// Jordan algebra pieces
inline VectorXd jprod(const Layout& L, const VectorXd& u, const VectorXd& v) {
    VectorXd out(L.m);
    if (L.l > 0) out.head(L.l) = u.head(L.l).cwiseProduct(v.head(L.l));
    for (const auto& [off, dim] : L.q) {
        const auto uk = u.segment(off, dim);
        const auto vk = v.segment(off, dim);
        out[off] = uk.dot(vk);
        out.segment(off + 1, dim - 1) = uk[0] * vk.tail(dim - 1) + vk[0] * uk.tail(dim - 1);
    }
    for (const auto& [off, order] : L.s) {
        MatrixXd U, V;
        unsvec(u.data() + off, order, U);
        unsvec(v.data() + off, order, V);
        MatrixXd R = 0.5 * (U * V + V * U);
        R = 0.5 * (R + R.transpose());
        svec(R, out.data() + off);
    }
    return out;
}

// solves lambda o u = d where lambda is the NT-scaled point (diagonal in the
// PSD blocks by construction)
inline VectorXd jdiv_lambda(const Layout& L, const Scaling& W, const VectorXd& d) {
    const VectorXd& lam = W.lambda;
    VectorXd out(L.m);
    if (L.l > 0) out.head(L.l) = d.head(L.l).cwiseQuotient(lam.head(L.l));
    for (const auto& [off, dim] : L.q) {
        const auto lk = lam.segment(off, dim);
        const auto dk = d.segment(off, dim);
        const double a = lk[0] * lk[0] - lk.tail(dim - 1).squaredNorm();
        const double u0 = (lk[0] * dk[0] - lk.tail(dim - 1).dot(dk.tail(dim - 1))) / a;
        out[off] = u0;
        out.segment(off + 1, dim - 1) = (dk.tail(dim - 1) - u0 * lk.tail(dim - 1)) / lk[0];
    }
    for (size_t i = 0; i < L.s.size(); ++i) {
        const auto [off, order] = L.s[i];
        const VectorXd& lv = W.psd[i].lam;
        MatrixXd D;
        unsvec(d.data() + off, order, D);
        for (int r = 0; r < order; ++r)
            for (int c = 0; c < order; ++c) D(r, c) *= 2.0 / (lv[r] + lv[c]);
        svec(D, out.data() + off);
    }
    return out;
}

inline VectorXd cone_identity(const Layout& L) {
    VectorXd e = VectorXd::Zero(L.m);
    if (L.l > 0) e.head(L.l).setOnes();
    for (const auto& [off, dim] : L.q) e[off] = 1.0;
    for (const auto& [off, order] : L.s) {
        int k = off;
        for (int j = 0; j < order; ++j) {
            e[k] = 1.0;
            k += order - j;
        }
    }
    return e;
}

// smallest cone "eigenvalue" of u; negative means outside the cone
inline double cone_min_eig(const Layout& L, const VectorXd& u) {
    double mn = kInf;
    if (L.l > 0) mn = std::min(mn, u.head(L.l).minCoeff());
    for (const auto& [off, dim] : L.q)
        mn = std::min(mn, u[off] - u.segment(off + 1, dim - 1).norm());
    for (const auto& [off, order] : L.s) {
        MatrixXd U;
        unsvec(u.data() + off, order, U);
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(U, Eigen::EigenvaluesOnly);
        mn = std::min(mn, es.eigenvalues().minCoeff());
    }
    return mn;
}

// sup { alpha >= 0 : lambda + alpha d in K }, lambda strictly interior
inline double max_step(const Layout& L, const Scaling& W, const VectorXd& d) {
    const VectorXd& lam = W.lambda;
    double alpha = kInf;
    for (int i = 0; i < L.l; ++i)
        if (d[i] < 0) alpha = std::min(alpha, -lam[i] / d[i]);
    for (const auto& [off, dim] : L.q) {
        const auto lk = lam.segment(off, dim);
        const auto dk = d.segment(off, dim);
        const double A = dk[0] * dk[0] - dk.tail(dim - 1).squaredNorm();
        const double B = 2.0 * (lk[0] * dk[0] - lk.tail(dim - 1).dot(dk.tail(dim - 1)));
        const double C = lk[0] * lk[0] - lk.tail(dim - 1).squaredNorm();
        double root = kInf;
        if (std::abs(A) < 1e-300) {
            if (B < 0) root = -C / B;
        } else {
            const double disc = B * B - 4.0 * A * C;
            if (disc >= 0) {
                const double sq = std::sqrt(disc);
                for (double r : {(-B - sq) / (2.0 * A), (-B + sq) / (2.0 * A)})
                    if (r > 0) root = std::min(root, r);
            }
        }
        // also keep the first coordinate positive
        if (dk[0] < 0) root = std::min(root, -lk[0] / dk[0]);
        alpha = std::min(alpha, root);
    }
    for (size_t i = 0; i < L.s.size(); ++i) {
        const auto [off, order] = L.s[i];
        const VectorXd& lv = W.psd[i].lam;
        MatrixXd D;
        unsvec(d.data() + off, order, D);
        for (int r = 0; r < order; ++r)
            for (int c = 0; c < order; ++c) D(r, c) /= std::sqrt(lv[r] * lv[c]);
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(D, Eigen::EigenvaluesOnly);
        const double mn = es.eigenvalues().minCoeff();
        if (mn < 0) alpha = std::min(alpha, -1.0 / mn);
    }
    return alpha;
}

}  // namespace detail

inline Solution solve(const MatrixXd& G, const VectorXd& h, const MatrixXd& A,
                      const VectorXd& b, const VectorXd& c, const ConeSpec& cone,
                      const Options& opt = {}) {
    using namespace detail;
    const Layout L = make_layout(cone);
    const int n = static_cast<int>(c.size());
    const int p = static_cast<int>(b.size());
    const int m = L.m;

    Solution sol;
    sol.message = "";
    if (m == 0) {
        sol.status = Status::Failed;
        sol.message = "no cone constraints";
        return sol;
    }
    if (G.rows() != m || G.cols() != n || A.cols() != (p > 0 ? n : A.cols()) || h.size() != m) {
        sol.status = Status::Failed;
        sol.message = "dimension mismatch";
        return sol;
    }

    // ---- initial point: least-norm primal/dual heuristics with W = I ----
    MatrixXd M0 = MatrixXd::Zero(n + p, n + p);
    M0.topLeftCorner(n, n) = G.transpose() * G;
    M0.topLeftCorner(n, n).diagonal().array() += 1e-12;
    if (p > 0) {
        M0.topRightCorner(n, p) = A.transpose();
        M0.bottomLeftCorner(p, n) = A;
    }
    Eigen::FullPivLU<MatrixXd> lu0(M0);

    VectorXd rhs0(n + p);
    rhs0.head(n) = G.transpose() * h;
    if (p > 0) rhs0.tail(p) = b;
    VectorXd xy = lu0.solve(rhs0);
    VectorXd x = xy.head(n);
    VectorXd y = p > 0 ? VectorXd(xy.tail(p)) : VectorXd();
    VectorXd s = h - G * x;
    {
        const double mn = cone_min_eig(L, s);
        if (mn <= 0) s += (1.0 - mn) * cone_identity(L);
    }
    rhs0.head(n) = -c;
    if (p > 0) rhs0.tail(p).setZero();
    xy = lu0.solve(rhs0);
    VectorXd z = G * xy.head(n);
    if (p > 0) y = xy.tail(p);
    {
        const double mn = cone_min_eig(L, z);
        if (mn <= 0) z += (1.0 - mn) * cone_identity(L);
    }
    if (p == 0) y.resize(0);
    double tau = 1.0, kappa = 1.0;

    const double resx0 = std::max(1.0, c.norm());
    const double resy0 = std::max(1.0, p > 0 ? b.norm() : 0.0);
    const double resz0 = std::max(1.0, h.norm());

    Scaling W;
    Solution best;
    double best_score = kInf;

    auto finalize = [&](Status st, const std::string& msg, int it) {
        sol.status = st;
        sol.message = msg;
        sol.iterations = it;
        return sol;
    };

    for (int iter = 0; iter <= opt.max_iterations; ++iter) {
        // ---- residuals ----
        VectorXd hrx = -(G.transpose() * z);
        if (p > 0) hrx -= A.transpose() * y;
        const double hresx = hrx.norm();
        VectorXd rx = hrx - tau * c;               // -(A'y + G'z) - c tau = -resx
        VectorXd hry = p > 0 ? VectorXd(A * x) : VectorXd();
        const double hresy = p > 0 ? hry.norm() : 0.0;
        VectorXd ry = p > 0 ? VectorXd(hry - tau * b) : VectorXd();
        VectorXd hrz = s + G * x;
        const double hresz = hrz.norm();
        VectorXd rz = hrz - tau * h;
        const double cx = c.dot(x);
        const double by = p > 0 ? b.dot(y) : 0.0;
        const double hz = h.dot(z);
        const double rt = kappa + cx + by + hz;

        const double nx = x.norm(), ny = p > 0 ? y.norm() : 0.0, nz = z.norm(), ns = s.norm();
        const double gap = s.dot(z);
        const double pcost = cx / tau;
        const double dcost = -(by + hz) / tau;
        double relgap = kInf;
        if (pcost < 0)
            relgap = gap / tau / tau / (-pcost);
        else if (dcost > 0)
            relgap = gap / tau / tau / dcost;
        const double nry = p > 0 ? ry.norm() / std::max(1.0, resy0 + nx) : 0.0;
        const double nrz = rz.norm() / std::max(1.0, resz0 + nx + ns);
        const double pres = std::max(nry, nrz) / tau;
        const double dres = rx.norm() / std::max(1.0, resx0 + ny + nz) / tau;

        double pinfres = kInf, dinfres = kInf;
        if (hz + by < -opt.reltol * std::max(1.0, ny + nz))
            pinfres = hresx / std::max(1.0, ny + nz) / (-(hz + by) / std::max(1.0, ny + nz));
        if (cx < -opt.reltol * std::max(1.0, nx))
            dinfres = std::max(p > 0 ? hresy / std::max(1.0, nx) : 0.0,
                               hresz / std::max(1.0, nx + ns)) / (-cx / std::max(1.0, nx));

        if (opt.verbose)
            std::printf("it %2d  pcost=%+.6e dcost=%+.6e pres=%.2e dres=%.2e gap=%.2e tau=%.2e kap=%.2e\n",
                        iter, pcost, dcost, pres, dres, gap / tau / tau, tau, kappa);

        // ---- convergence tests ----
        const double abs_gap = gap / tau / tau;
        auto optimal_at = [&](double ft, double at, double rt_) {
            return pres <= ft && dres <= ft && (abs_gap <= at || relgap <= rt_);
        };
        if (optimal_at(opt.feastol, opt.abstol, opt.reltol)) {
            sol.x = x / tau;
            sol.y = y / tau;
            sol.s = s / tau;
            sol.z = z / tau;
            sol.pobj = pcost;
            sol.dobj = dcost;
            sol.pres = pres;
            sol.dres = dres;
            sol.gap = abs_gap;
            sol.relgap = relgap;
            return finalize(Status::Optimal, "optimal", iter);
        }
        if (pinfres <= opt.feastol && tau < kappa) {
            sol.y = p > 0 ? VectorXd(y / (-(hz + by))) : y;
            sol.z = z / (-(hz + by));
            sol.pres = pinfres;
            return finalize(Status::PrimalInfeasible, "primal infeasible certificate", iter);
        }
        if (dinfres <= opt.feastol && tau < kappa) {
            sol.x = x / (-cx);
            sol.s = s / (-cx);
            sol.dres = dinfres;
            return finalize(Status::DualInfeasible, "dual infeasible certificate", iter);
        }

        // track the best almost-solution for the inaccurate exits
        const double score = std::max({pres, dres, std::min(relgap, abs_gap)});
        if (score < best_score) {
            best_score = score;
            best.x = x / tau;
            best.y = p > 0 ? VectorXd(y / tau) : y;
            best.s = s / tau;
            best.z = z / tau;
            best.pobj = pcost;
            best.dobj = dcost;
            best.pres = pres;
            best.dres = dres;
            best.gap = abs_gap;
            best.relgap = relgap;
        }

        if (iter == opt.max_iterations) break;

        // ---- NT scaling ----
        if (!compute_scaling(L, s, z, W)) {
            sol = best;
            if (pinfres < opt.feastol_inacc && tau < kappa)
                return finalize(Status::PrimalInfeasible, "primal infeasible (reduced accuracy)", iter);
            if (optimal_at(opt.feastol_inacc, opt.abstol_inacc, opt.reltol_inacc))
                return finalize(Status::Inaccurate, "scaling breakdown; reduced accuracy", iter);
            return finalize(Status::Failed, "NT scaling breakdown", iter);
        }
        const double mu = (gap + kappa * tau) / (L.degree + 1);

        // ---- reduced KKT matrix (Delta z, s, kappa eliminated) ----
        // [ G'Dinv G      A'   c - G'Dinv h ] [dx  ]   [ R1 + G'Dinv Rt3 ]
        // [ A             0    -b           ] [dy  ] = [ R2              ]
        // [ (c+G'Dinv h)' b'   -h'Dinv h-k/t] [dtau]   [ R4 - dk/t + h'Dinv Rt3 ]
        MatrixXd red = MatrixXd::Zero(n + p + 1, n + p + 1);
        MatrixXd DinvG(m, n);
        for (int jcol = 0; jcol < n; ++jcol)
            DinvG.col(jcol) = apply(L, W, Op::Dinv, G.col(jcol));
        const VectorXd Dinvh = apply(L, W, Op::Dinv, h);
        red.topLeftCorner(n, n) = G.transpose() * DinvG;
        if (p > 0) {
            red.block(0, n, n, p) = A.transpose();
            red.block(n, 0, p, n) = A;
            red.block(n, n + p, p, 1) = -b;
            red.block(n + p, n, 1, p) = b.transpose();
        }
        red.block(0, n + p, n, 1) = c - G.transpose() * Dinvh;
        red.block(n + p, 0, 1, n) = (c + G.transpose() * Dinvh).transpose();
        red(n + p, n + p) = -h.dot(Dinvh) - kappa / tau;
        Eigen::FullPivLU<MatrixXd> lu(red);
        if (!lu.isInvertible()) {
            // tiny regularization, then retry once
            red.diagonal().array() += 1e-11;
            lu.compute(red);
        }

        struct Dirs {
            VectorXd dx, dy, dz, ds;
            double dtau = 0, dkap = 0;
        };

        auto solve_dirs = [&](const VectorXd& R1, const VectorXd& R2, const VectorXd& R3,
                              double R4, const VectorXd& dsrhs, double dkrhs) {
            Dirs D;
            D.dx = VectorXd::Zero(n);
            D.dy = VectorXd::Zero(p);
            D.dz = VectorXd::Zero(m);
            D.ds = VectorXd::Zero(m);
            VectorXd r1 = R1, r3 = R3, dsr = dsrhs;
            VectorXd r2 = R2;
            double r4 = R4, dkr = dkrhs;
            for (int pass = 0; pass < 3; ++pass) {
                const VectorXd S0 = apply(L, W, Op::Wt, jdiv_lambda(L, W, dsr));
                const VectorXd Rt3 = r3 - S0;
                const VectorXd DinvRt3 = apply(L, W, Op::Dinv, Rt3);
                VectorXd rhs(n + p + 1);
                rhs.head(n) = r1 + G.transpose() * DinvRt3;
                if (p > 0) rhs.segment(n, p) = r2;
                rhs[n + p] = r4 - dkr / tau + h.dot(DinvRt3);
                const VectorXd sln = lu.solve(rhs);
                const VectorXd ddx = sln.head(n);
                const VectorXd ddy = p > 0 ? VectorXd(sln.segment(n, p)) : VectorXd();
                const double ddtau = sln[n + p];
                const VectorXd ddz = apply(L, W, Op::Dinv, G * ddx - h * ddtau - Rt3);
                const VectorXd dds = S0 - apply(L, W, Op::D, ddz);
                const double ddkap = (dkr - kappa * ddtau) / tau;
                D.dx += ddx;
                if (p > 0) D.dy += ddy;
                D.dz += ddz;
                D.ds += dds;
                D.dtau += ddtau;
                D.dkap += ddkap;
                if (pass == 2) break;
                // residuals of the full Newton system; refine if needed
                r1 = R1 - (G.transpose() * D.dz + c * D.dtau + (p > 0 ? VectorXd(A.transpose() * D.dy) : VectorXd::Zero(n)));
                if (p > 0) r2 = R2 - (A * D.dx - b * D.dtau);
                r3 = R3 - (G * D.dx + D.ds - h * D.dtau);
                r4 = R4 - (c.dot(D.dx) + (p > 0 ? b.dot(D.dy) : 0.0) + h.dot(D.dz) + D.dkap);
                dsr = dsrhs - jprod(L, W.lambda,
                                    apply(L, W, Op::W, D.dz) + apply(L, W, Op::WinvT, D.ds));
                dkr = dkrhs - (kappa * D.dtau + tau * D.dkap);
                const double rn = std::max({r1.norm(), p > 0 ? r2.norm() : 0.0, r3.norm(),
                                            std::abs(r4), dsr.norm(), std::abs(dkr)});
                if (rn < 1e-11 * std::max(1.0, mu)) break;
            }
            return D;
        };

        // ---- affine (predictor) direction ----
        const VectorXd lam_sq = jprod(L, W.lambda, W.lambda);
        Dirs aff = solve_dirs(-rx, p > 0 ? VectorXd(-ry) : VectorXd(), -rz, -rt, -lam_sq,
                              -tau * kappa);

        VectorXd ds_sc = apply(L, W, Op::WinvT, aff.ds);
        VectorXd dz_sc = apply(L, W, Op::W, aff.dz);
        double alpha = std::min(max_step(L, W, ds_sc), max_step(L, W, dz_sc));
        if (aff.dtau < 0) alpha = std::min(alpha, -tau / aff.dtau);
        if (aff.dkap < 0) alpha = std::min(alpha, -kappa / aff.dkap);
        const double alpha_aff = std::min(1.0, alpha);
        const double sigma = std::pow(1.0 - alpha_aff, 3);

        // ---- combined (corrector) direction ----
        const VectorXd e = cone_identity(L);
        VectorXd ds_rhs = -lam_sq - jprod(L, ds_sc, dz_sc) + sigma * mu * e;
        const double dk_rhs = -tau * kappa - aff.dtau * aff.dkap + sigma * mu;
        const double f = 1.0 - sigma;
        Dirs dir = solve_dirs(-f * rx, p > 0 ? VectorXd(-f * ry) : VectorXd(), -f * rz, -f * rt,
                              ds_rhs, dk_rhs);

        ds_sc = apply(L, W, Op::WinvT, dir.ds);
        dz_sc = apply(L, W, Op::W, dir.dz);
        alpha = std::min(max_step(L, W, ds_sc), max_step(L, W, dz_sc));
        if (dir.dtau < 0) alpha = std::min(alpha, -tau / dir.dtau);
        if (dir.dkap < 0) alpha = std::min(alpha, -kappa / dir.dkap);
        const double step = std::min(1.0, opt.step_fraction * alpha);
        if (!std::isfinite(step) || step <= 0) {
            sol = best;
            return finalize(Status::Failed, "step computation failed", iter);
        }

        x += step * dir.dx;
        if (p > 0) y += step * dir.dy;
        z += step * dir.dz;
        s += step * dir.ds;
        tau += step * dir.dtau;
        kappa += step * dir.dkap;
        if (tau <= 0 || kappa < 0 || !x.allFinite() || !s.allFinite() || !z.allFinite()) {
            sol = best;
            return finalize(Status::Failed, "iterate diverged", iter);
        }
    }

    // max iterations: classify the best iterate
    sol = best;
    if (best_score <= opt.feastol_inacc)
        return finalize(Status::Inaccurate, "max iterations; reduced accuracy met",
                        opt.max_iterations);
    return finalize(Status::Failed, "max iterations without convergence", opt.max_iterations);
}

}  // namespace rqp::conelp

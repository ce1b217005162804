// SPDX-License-Identifier: Apache-2.0
//
// Solver-agnostic conic program representation: named scalar variables, a
// linear objective, and affine cone blocks (zero, nonnegative, second-order,
// PSD). PSD blocks are stored in packed symmetric form keyed by (row >= col),
// so symmetry is structural rather than numerical.
//
// solve() lowers the program to the standard dense cone-LP form and runs the
// primal-dual interior-point method in conelp.hpp. check_solution() recomputes
// every cone membership from scratch, independently of the solver.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rqp/conelp.hpp"
#include "rqp/embedding.hpp"

namespace rqp {

struct LinearTerm {
    int var = -1;
    double coeff = 0.0;
};

/// Sparse affine functional  sum_i coeff_i * x_{var_i} + constant.
struct LinearExpr {
    std::vector<LinearTerm> terms;
    double constant = 0.0;

    LinearExpr() = default;
    explicit LinearExpr(double c) : constant(c) {}

    static LinearExpr variable(int var, double coeff = 1.0) {
        LinearExpr e;
        e.terms.push_back({var, coeff});
        return e;
    }

    LinearExpr& add(int var, double coeff) {
        if (coeff != 0.0) terms.push_back({var, coeff});
        return *this;
    }
    LinearExpr& operator+=(const LinearExpr& o) {
        terms.insert(terms.end(), o.terms.begin(), o.terms.end());
        constant += o.constant;
        return *this;
    }
    LinearExpr& operator*=(double a) {
        for (auto& t : terms) t.coeff *= a;
        constant *= a;
        return *this;
    }
    friend LinearExpr operator*(double a, LinearExpr e) {
        e *= a;
        return e;
    }
    friend LinearExpr operator+(LinearExpr a, const LinearExpr& b) {
        a += b;
        return a;
    }
    friend LinearExpr operator+(LinearExpr a, double c) {
        a.constant += c;
        return a;
    }
    friend LinearExpr operator-(LinearExpr a, double c) {
        a.constant -= c;
        return a;
    }
    friend LinearExpr operator-(LinearExpr a, const LinearExpr& b) {
        a += -1.0 * b;
        return a;
    }

    double eval(const RVector& x) const {
        double v = constant;
        for (const auto& t : terms) v += t.coeff * x[t.var];
        return v;
    }
};

enum class ConeKind { Zero, NonNeg, Soc, Psd };

inline const char* cone_name(ConeKind k) {
    switch (k) {
        case ConeKind::Zero: return "zero";
        case ConeKind::NonNeg: return "nonneg";
        case ConeKind::Soc: return "soc";
        case ConeKind::Psd: return "psd";
    }
    return "?";
}

/// One affine cone membership constraint.
///  Zero   : rows(x) == 0, `dim` rows
///  NonNeg : rows(x) >= 0, `dim` rows
///  Soc    : rows[0](x) >= || rows[1..](x) ||, dim = total rows
///  Psd    : symmetric order-`dim` matrix, rows holds the packed lower
///           triangle, index(i,j) = i(i+1)/2 + j for i >= j
struct ConeBlock {
    ConeKind kind;
    int dim = 0;
    std::vector<LinearExpr> rows;

    static int psd_index(int i, int j) {
        if (j > i) std::swap(i, j);
        return i * (i + 1) / 2 + j;
    }
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, Inaccurate, Failed };

inline const char* status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Unbounded: return "unbounded";
        case SolveStatus::Inaccurate: return "inaccurate";
        case SolveStatus::Failed: return "failed";
    }
    return "?";
}

struct ResidualReport {
    double primal = 0.0;   // worst primal feasibility residual
    double dual = 0.0;     // worst dual feasibility residual
    double gap = 0.0;      // absolute duality gap
    int iterations = 0;
    std::string message;
};

struct SolveResult {
    SolveStatus status = SolveStatus::Failed;
    RVector point;    // variable assignment (valid when status is optimal/inaccurate)
    double objective = 0.0;
    ResidualReport residuals;

    bool is_optimal() const { return status == SolveStatus::Optimal; }
};

struct SolveOptions {
    double feastol = 1e-8;
    double abstol = 1e-8;
    double reltol = 1e-8;
    int max_iterations = 100;
    bool verbose = false;
};

/// Per-block worst violation, recomputed without consulting the solver.
struct SolutionCheck {
    std::vector<double> block_violation;
    double max_violation = 0.0;
    double objective = 0.0;

    bool ok(double tol) const { return max_violation <= tol; }
};

class ConicProgram {
public:
    int add_variable(std::string name) {
        names_.push_back(std::move(name));
        return static_cast<int>(names_.size()) - 1;
    }
    int num_variables() const { return static_cast<int>(names_.size()); }
    const std::string& variable_name(int v) const { return names_.at(v); }

    void add_objective_term(int var, double coeff) {
        check_var(var);
        objective_.add(var, coeff);
    }
    const LinearExpr& objective() const { return objective_; }

    int add_zero(std::vector<LinearExpr> rows) { return add_block(ConeKind::Zero, std::move(rows)); }
    int add_nonneg(std::vector<LinearExpr> rows) { return add_block(ConeKind::NonNeg, std::move(rows)); }
    /// rows[0] >= ||rows[1..]||
    int add_soc(std::vector<LinearExpr> rows) {
        if (rows.size() < 2) throw std::invalid_argument("add_soc: need at least 2 rows");
        return add_block(ConeKind::Soc, std::move(rows));
    }
    /// Adds an order-m PSD block with all entries zero; fill via psd_entry().
    int add_psd(int order) {
        if (order < 1) throw std::invalid_argument("add_psd: order must be positive");
        ConeBlock b;
        b.kind = ConeKind::Psd;
        b.dim = order;
        b.rows.assign(order * (order + 1) / 2, LinearExpr{});
        blocks_.push_back(std::move(b));
        return static_cast<int>(blocks_.size()) - 1;
    }
    LinearExpr& psd_entry(int block, int i, int j) {
        ConeBlock& b = blocks_.at(block);
        if (b.kind != ConeKind::Psd) throw std::invalid_argument("psd_entry: not a PSD block");
        if (i < 0 || i >= b.dim || j < 0 || j >= b.dim)
            throw std::invalid_argument("psd_entry: index out of range");
        return b.rows[ConeBlock::psd_index(i, j)];
    }

    const std::vector<ConeBlock>& blocks() const { return blocks_; }

    /// Dense symmetric matrix of a PSD block at point x.
    RMatrix psd_matrix(int block, const RVector& x) const {
        const ConeBlock& b = blocks_.at(block);
        if (b.kind != ConeKind::Psd) throw std::invalid_argument("psd_matrix: not a PSD block");
        RMatrix M(b.dim, b.dim);
        for (int i = 0; i < b.dim; ++i)
            for (int j = 0; j <= i; ++j) {
                const double v = b.rows[ConeBlock::psd_index(i, j)].eval(x);
                M(i, j) = v;
                M(j, i) = v;
            }
        return M;
    }

    /// Plain-text sparse dump for cross-solver differential testing.
    /// One line per affine entry: block id, cone type, row, col, variable id,
    /// coefficient. Variable id 0 denotes the constant term; real variables
    /// are numbered from 1. For non-PSD cones col is always 0.
    void dump(std::ostream& os) const {
        os << "conicprogram v1\n";
        os << "vars " << num_variables() << "\n";
        for (int v = 0; v < num_variables(); ++v) os << "var " << (v + 1) << " " << names_[v] << "\n";
        for (const auto& t : objective_.terms)
            if (t.coeff != 0.0) os << "obj " << (t.var + 1) << " " << fmt(t.coeff) << "\n";
        if (objective_.constant != 0.0) os << "obj 0 " << fmt(objective_.constant) << "\n";
        for (size_t bi = 0; bi < blocks_.size(); ++bi) {
            const ConeBlock& b = blocks_[bi];
            os << "block " << bi << " " << cone_name(b.kind) << " " << b.dim << "\n";
            for (size_t r = 0; r < b.rows.size(); ++r) {
                int row = static_cast<int>(r), col = 0;
                if (b.kind == ConeKind::Psd) {
                    // invert the packed index
                    row = 0;
                    while (ConeBlock::psd_index(row + 1, 0) <= static_cast<int>(r)) ++row;
                    col = static_cast<int>(r) - row * (row + 1) / 2;
                }
                const LinearExpr& e = b.rows[r];
                for (const auto& t : e.terms)
                    if (t.coeff != 0.0)
                        os << "entry " << bi << " " << cone_name(b.kind) << " " << row << " " << col
                           << " " << (t.var + 1) << " " << fmt(t.coeff) << "\n";
                if (e.constant != 0.0)
                    os << "entry " << bi << " " << cone_name(b.kind) << " " << row << " " << col
                       << " 0 " << fmt(e.constant) << "\n";
            }
        }
    }
    std::string dump_string() const {
        std::ostringstream os;
        dump(os);
        return os.str();
    }

private:
    int add_block(ConeKind kind, std::vector<LinearExpr> rows) {
        if (rows.empty()) throw std::invalid_argument("add_block: empty block");
        for (const auto& e : rows)
            for (const auto& t : e.terms) check_var(t.var);
        ConeBlock b;
        b.kind = kind;
        b.dim = static_cast<int>(rows.size());
        b.rows = std::move(rows);
        blocks_.push_back(std::move(b));
        return static_cast<int>(blocks_.size()) - 1;
    }
    void check_var(int var) const {
        if (var < 0 || var >= num_variables())
            throw std::invalid_argument("reference to undeclared variable");
    }
    static std::string fmt(double v) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        return os.str();
    }

    std::vector<std::string> names_;
    LinearExpr objective_;
    std::vector<ConeBlock> blocks_;
};

/// Recomputes every cone membership from scratch: PSD via an eigenvalue
/// floor, SOC via the norm inequality. Positive entries mean violation.
inline SolutionCheck check_solution(const ConicProgram& prog, const RVector& x) {
    if (x.size() != prog.num_variables())
        throw std::invalid_argument("check_solution: point does not assign all variables");
    SolutionCheck out;
    out.objective = prog.objective().eval(x);
    out.block_violation.reserve(prog.blocks().size());
    for (size_t bi = 0; bi < prog.blocks().size(); ++bi) {
        const ConeBlock& b = prog.blocks()[bi];
        double viol = 0.0;
        switch (b.kind) {
            case ConeKind::Zero:
                for (const auto& e : b.rows) viol = std::max(viol, std::abs(e.eval(x)));
                break;
            case ConeKind::NonNeg:
                for (const auto& e : b.rows) viol = std::max(viol, -e.eval(x));
                break;
            case ConeKind::Soc: {
                const double t = b.rows[0].eval(x);
                double nsq = 0.0;
                for (size_t r = 1; r < b.rows.size(); ++r) {
                    const double v = b.rows[r].eval(x);
                    nsq += v * v;
                }
                viol = std::sqrt(nsq) - t;
                break;
            }
            case ConeKind::Psd: {
                const RMatrix M = prog.psd_matrix(static_cast<int>(bi), x);
                Eigen::SelfAdjointEigenSolver<RMatrix> es(M, Eigen::EigenvaluesOnly);
                viol = -es.eigenvalues().minCoeff();
                break;
            }
        }
        viol = std::max(viol, 0.0);
        out.block_violation.push_back(viol);
        out.max_violation = std::max(out.max_violation, viol);
    }
    return out;
}

namespace detail {

/// Lowers the block IR to the dense standard form used by the IPM:
/// min c'x  s.t.  A x = b,  h - G x in K.
struct LoweredProgram {
    RMatrix G, A;
    RVector h, b, c;
    conelp::ConeSpec cone;
    // row ranges of each IR block in G (or A for zero blocks)
    std::vector<std::pair<int, int>> block_rows;
    std::vector<bool> block_is_eq;
};

inline LoweredProgram lower(const ConicProgram& prog) {
    static const double kSqrt2 = std::sqrt(2.0);
    const int n = prog.num_variables();
    int p = 0, m = 0;
    for (const auto& b : prog.blocks()) {
        if (b.kind == ConeKind::Zero)
            p += b.dim;
        else if (b.kind == ConeKind::Psd)
            m += b.dim * (b.dim + 1) / 2;
        else
            m += b.dim;
    }
    LoweredProgram lp;
    lp.G = RMatrix::Zero(m, n);
    lp.h = RVector::Zero(m);
    lp.A = RMatrix::Zero(p, n);
    lp.b = RVector::Zero(p);
    lp.c = RVector::Zero(n);
    for (const auto& t : prog.objective().terms) lp.c[t.var] += t.coeff;

    // cone ordering in the lowered form: nonneg first, then SOC, then PSD
    int l = 0;
    for (const auto& b : prog.blocks())
        if (b.kind == ConeKind::NonNeg) l += b.dim;
    lp.cone.l = l;

    int eq_row = 0;
    int nn_row = 0;
    int soc_row = l;
    for (const auto& b : prog.blocks())
        if (b.kind == ConeKind::Soc) {
            lp.cone.q.push_back(b.dim);
            soc_row += 0;  // computed below
        }
    int psd_row_start = l;
    for (const auto& q : lp.cone.q) psd_row_start += q;

    // expr(x) = E x + e must satisfy  s := expr(x) in K, i.e. G = -E, h = e.
    auto emit_row = [&](int row, const LinearExpr& e, double scale) {
        for (const auto& t : e.terms) lp.G(row, t.var) -= scale * t.coeff;
        lp.h[row] += scale * e.constant;
    };

    soc_row = l;
    int psd_row = psd_row_start;
    lp.block_rows.reserve(prog.blocks().size());
    lp.block_is_eq.reserve(prog.blocks().size());
    for (const auto& b : prog.blocks()) {
        switch (b.kind) {
            case ConeKind::Zero: {
                lp.block_rows.emplace_back(eq_row, b.dim);
                lp.block_is_eq.push_back(true);
                for (const auto& e : b.rows) {
                    for (const auto& t : e.terms) lp.A(eq_row, t.var) += t.coeff;
                    lp.b[eq_row] = -e.constant;
                    ++eq_row;
                }
                break;
            }
            case ConeKind::NonNeg: {
                lp.block_rows.emplace_back(nn_row, b.dim);
                lp.block_is_eq.push_back(false);
                for (const auto& e : b.rows) emit_row(nn_row++, e, 1.0);
                break;
            }
            case ConeKind::Soc: {
                lp.block_rows.emplace_back(soc_row, b.dim);
                lp.block_is_eq.push_back(false);
                for (const auto& e : b.rows) emit_row(soc_row++, e, 1.0);
                break;
            }
            case ConeKind::Psd: {
                const int sdim = b.dim * (b.dim + 1) / 2;
                lp.block_rows.emplace_back(psd_row, sdim);
                lp.block_is_eq.push_back(false);
                lp.cone.s.push_back(b.dim);
                // svec layout: columns of the lower triangle stacked,
                // off-diagonal entries scaled by sqrt(2)
                for (int j = 0; j < b.dim; ++j)
                    for (int i = j; i < b.dim; ++i) {
                        const LinearExpr& e = b.rows[ConeBlock::psd_index(i, j)];
                        emit_row(psd_row++, e, i == j ? 1.0 : kSqrt2);
                    }
                break;
            }
        }
    }
    return lp;
}

}  // namespace detail

/// Solves the program with the built-in interior-point method.
/// Status semantics: `Optimal` solutions satisfy the reported residuals;
/// `Infeasible`/`Unbounded` carry solver certificates; `Inaccurate` met only
/// relaxed tolerances; `Failed` carries diagnostics in residuals.message.
/// An infeasible point is never silently reported as optimal.
inline SolveResult solve(const ConicProgram& prog, const SolveOptions& options = {}) {
    detail::LoweredProgram lp = detail::lower(prog);
    conelp::Options copt;
    copt.feastol = options.feastol;
    copt.abstol = options.abstol;
    copt.reltol = options.reltol;
    copt.max_iterations = options.max_iterations;
    copt.verbose = options.verbose;
    conelp::Solution sol = conelp::solve(lp.G, lp.h, lp.A, lp.b, lp.c, lp.cone, copt);

    SolveResult out;
    out.residuals.primal = sol.pres;
    out.residuals.dual = sol.dres;
    out.residuals.gap = sol.gap;
    out.residuals.iterations = sol.iterations;
    out.residuals.message = sol.message;
    switch (sol.status) {
        case conelp::Status::Optimal: out.status = SolveStatus::Optimal; break;
        case conelp::Status::PrimalInfeasible: out.status = SolveStatus::Infeasible; break;
        case conelp::Status::DualInfeasible: out.status = SolveStatus::Unbounded; break;
        case conelp::Status::Inaccurate: out.status = SolveStatus::Inaccurate; break;
        case conelp::Status::Failed: out.status = SolveStatus::Failed; break;
    }
    if (out.status == SolveStatus::Optimal || out.status == SolveStatus::Inaccurate) {
        out.point = sol.x;
        out.objective = prog.objective().eval(sol.x);
    }
    return out;
}

}  // namespace rqp

// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>
#include <random>
#include <sstream>

#include "rqp/conic.hpp"

using namespace rqp;

TEST_CASE("LP: bounds and equalities", "[conic]") {
    ConicProgram prog;
    const int x = prog.add_variable("x");
    const int y = prog.add_variable("y");
    prog.add_objective_term(x, 1.0);
    prog.add_objective_term(y, 1.0);
    prog.add_nonneg({LinearExpr::variable(x) - 1.0, LinearExpr::variable(y) - 2.0});
    SolveResult r = solve(prog);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.objective == Catch::Approx(3.0).margin(1e-7));
    CHECK(r.point[x] == Catch::Approx(1.0).margin(1e-7));
    CHECK(r.point[y] == Catch::Approx(2.0).margin(1e-7));
}

TEST_CASE("SOC: t >= ||(3,4)|| gives 5", "[conic]") {
    ConicProgram prog;
    const int t = prog.add_variable("t");
    prog.add_objective_term(t, 1.0);
    prog.add_soc({LinearExpr::variable(t), LinearExpr(3.0), LinearExpr(4.0)});
    SolveResult r = solve(prog);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.objective == Catch::Approx(5.0).margin(1e-7));

    SolutionCheck chk = check_solution(prog, r.point);
    CHECK(chk.max_violation <= 1e-7);
}

TEST_CASE("SOC with equality-pinned vector part", "[conic]") {
    ConicProgram prog;
    const int t = prog.add_variable("t");
    const int x = prog.add_variable("x");
    const int y = prog.add_variable("y");
    prog.add_objective_term(t, 1.0);
    prog.add_zero({LinearExpr::variable(x) - 1.0, LinearExpr::variable(y) - 2.0});
    prog.add_soc({LinearExpr::variable(t), LinearExpr::variable(x) - 3.0,
                  LinearExpr::variable(y) - 4.0});
    SolveResult r = solve(prog);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.objective == Catch::Approx(std::sqrt(8.0)).margin(1e-7));
}

TEST_CASE("PSD: 2x2 eigenvalue condition", "[conic]") {
    ConicProgram prog;
    const int t = prog.add_variable("t");
    prog.add_objective_term(t, 1.0);
    const int blk = prog.add_psd(2);
    prog.psd_entry(blk, 0, 0) = LinearExpr::variable(t);
    prog.psd_entry(blk, 1, 1) = LinearExpr::variable(t);
    prog.psd_entry(blk, 1, 0) = LinearExpr(1.0);
    SolveResult r = solve(prog);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.objective == Catch::Approx(1.0).margin(1e-7));
    CHECK(check_solution(prog, r.point).max_violation <= 1e-7);
}

TEST_CASE("PSD: min trace with unit off-diagonal", "[conic]") {
    ConicProgram prog;
    const int a = prog.add_variable("a");
    const int b = prog.add_variable("b");
    prog.add_objective_term(a, 1.0);
    prog.add_objective_term(b, 1.0);
    const int blk = prog.add_psd(2);
    prog.psd_entry(blk, 0, 0) = LinearExpr::variable(a);
    prog.psd_entry(blk, 1, 1) = LinearExpr::variable(b);
    prog.psd_entry(blk, 1, 0) = LinearExpr(1.0);
    SolveResult r = solve(prog);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.objective == Catch::Approx(2.0).margin(1e-6));
}

TEST_CASE("mixed SOC and PSD", "[conic]") {
    ConicProgram prog;
    const int t = prog.add_variable("t");
    prog.add_objective_term(t, 1.0);
    const int blk = prog.add_psd(2);
    prog.psd_entry(blk, 0, 0) = LinearExpr::variable(t);
    prog.psd_entry(blk, 1, 1) = LinearExpr::variable(t);
    prog.psd_entry(blk, 1, 0) = LinearExpr(3.0);
    prog.add_soc({LinearExpr::variable(t), LinearExpr(1.0), LinearExpr(1.0)});
    SolveResult r = solve(prog);
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(r.objective == Catch::Approx(3.0).margin(1e-6));
}

TEST_CASE("infeasible toy detected", "[conic]") {
    ConicProgram prog;
    const int x = prog.add_variable("x");
    prog.add_nonneg({LinearExpr::variable(x) - 1.0,      // x >= 1
                     LinearExpr::variable(x, -1.0)});  // -x >= 0
    SolveResult r = solve(prog);
    CHECK(r.status == SolveStatus::Infeasible);
}

TEST_CASE("unbounded toy detected", "[conic]") {
    ConicProgram prog;
    const int x = prog.add_variable("x");
    prog.add_objective_term(x, -1.0);
    prog.add_nonneg({LinearExpr::variable(x)});
    SolveResult r = solve(prog);
    CHECK(r.status == SolveStatus::Unbounded);
}

TEST_CASE("check_solution flags perturbed points", "[conic]") {
    ConicProgram prog;
    const int t = prog.add_variable("t");
    prog.add_objective_term(t, 1.0);
    prog.add_soc({LinearExpr::variable(t), LinearExpr(3.0), LinearExpr(4.0)});
    SolveResult r = solve(prog);
    REQUIRE(r.status == SolveStatus::Optimal);
    RVector pt = r.point;
    pt[t] -= 1e-3;
    SolutionCheck chk = check_solution(prog, pt);
    CHECK(chk.max_violation >= 0.9e-3);
    CHECK_FALSE(chk.ok(1e-6));
}

TEST_CASE("zero-objective feasibility probes are decided crisply", "[conic]") {
    // feasible probe
    {
        ConicProgram prog;
        const int x = prog.add_variable("x");
        const int blk = prog.add_psd(2);
        prog.psd_entry(blk, 0, 0) = LinearExpr::variable(x);
        prog.psd_entry(blk, 1, 1) = LinearExpr(2.0);
        prog.psd_entry(blk, 1, 0) = LinearExpr(1.0);
        prog.add_nonneg({LinearExpr::variable(x, -1.0) + 10.0});
        SolveResult r = solve(prog);
        CHECK(r.status == SolveStatus::Optimal);
    }
    // infeasible probe: x >= 0 while diagonal forces x <= -1
    {
        ConicProgram prog;
        const int x = prog.add_variable("x");
        prog.add_nonneg({LinearExpr::variable(x)});
        prog.add_nonneg({LinearExpr::variable(x, -1.0) - 1.0});
        SolveResult r = solve(prog);
        CHECK(r.status == SolveStatus::Infeasible);
    }
}

TEST_CASE("solver and checker agree on residuals", "[conic]") {
    std::mt19937_64 rng(123);
    std::normal_distribution<double> nd;
    for (int rep = 0; rep < 20; ++rep) {
        // random feasible SDP: C + sum x_i A_i with C = I (strictly feasible at x=0)
        ConicProgram prog;
        const int nvar = 3;
        std::vector<int> xs;
        for (int i = 0; i < nvar; ++i) xs.push_back(prog.add_variable("x" + std::to_string(i)));
        const int order = 3;
        const int blk = prog.add_psd(order);
        for (int i = 0; i < order; ++i)
            for (int j = 0; j <= i; ++j) {
                LinearExpr e(i == j ? 1.0 : 0.0);
                for (int v = 0; v < nvar; ++v) e.add(xs[v], nd(rng) * 0.3);
                prog.psd_entry(blk, i, j) = e;
            }
        for (int v = 0; v < nvar; ++v) {
            prog.add_objective_term(xs[v], nd(rng));
            // box to keep it bounded
            prog.add_nonneg({LinearExpr::variable(xs[v]) + 2.0,
                             LinearExpr::variable(xs[v], -1.0) + 2.0});
        }
        SolveResult r = solve(prog);
        REQUIRE(r.status == SolveStatus::Optimal);
        SolutionCheck chk = check_solution(prog, r.point);
        CHECK(chk.max_violation <= 10 * 1e-8 + 1e-9);
    }
}

TEST_CASE("debug dump format", "[conic]") {
    ConicProgram prog;
    const int t = prog.add_variable("t");
    prog.add_objective_term(t, 1.0);
    prog.add_soc({LinearExpr::variable(t), LinearExpr(3.0)});
    const int blk = prog.add_psd(2);
    prog.psd_entry(blk, 0, 0) = LinearExpr::variable(t);
    prog.psd_entry(blk, 1, 0) = LinearExpr(1.0);
    prog.psd_entry(blk, 1, 1) = LinearExpr::variable(t, 2.0) + 0.5;

    const std::string d = prog.dump_string();
    CHECK(d.find("conicprogram v1\n") == 0);
    CHECK(d.find("vars 1") != std::string::npos);
    CHECK(d.find("var 1 t") != std::string::npos);
    CHECK(d.find("obj 1 1") != std::string::npos);
    // block 0: soc; row 1 constant entry uses variable id 0
    CHECK(d.find("entry 0 soc 1 0 0 3") != std::string::npos);
    // block 1: psd; entry (1,1) has both a variable and a constant line
    CHECK(d.find("entry 1 psd 1 1 1 2") != std::string::npos);
    CHECK(d.find("entry 1 psd 1 1 0 0.5") != std::string::npos);
    CHECK(d.find("entry 1 psd 1 0 0 1") != std::string::npos);
}

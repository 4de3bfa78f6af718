#include "doctest.h"

#include <cmath>
#include <random>

#include "sig/dense_solve.hpp"
#include "sig/impulse_solver.hpp"
#include "support/test_support.hpp"

using namespace sig;
using namespace sig::testing;

namespace {

GameSpec linear_game() {
    GameSpec s;
    s.drift_kappa = 0.0;
    s.sigma0 = 0.15;
    s.rho = 0.02;
    s.running_payoff.poly_coeffs = {3.0, 1.0};
    s.cost = CostFamily{100.0, 15.0, 0.0, 0.0};
    s.gain = GainFamily{0.0, 15.0};
    return s;
}

double max_gap_on(const Grid& grid, std::span<const int> d_nodes, std::span<const double> a,
                  std::span<const double> b) {
    double worst = 0.0;
    for (int i : d_nodes) {
        worst = std::max(worst, std::abs(a[grid.array_index(i)] - b[grid.array_index(i)]));
    }
    return worst;
}

}  // namespace

TEST_SUITE("impulse_solver") {

TEST_CASE("tridiagonal_solve basics") {
    // identity system returns the right-hand side
    std::vector<double> ones{1.0, 1.0, 1.0};
    std::vector<double> zeros{0.0, 0.0, 0.0};
    std::vector<double> rhs{3.0, -1.0, 2.5};
    CHECK(tridiagonal_solve(zeros, ones, zeros, rhs) == rhs);

    // random SDD tridiagonal against the dense solver
    std::mt19937_64 rng(53);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        const int n = std::uniform_int_distribution<int>(2, 40)(rng);
        std::vector<double> lo(n, 0.0), di(n, 0.0), up(n, 0.0), b(n, 0.0);
        std::vector<double> dense(static_cast<size_t>(n) * n, 0.0);
        for (int i = 0; i < n; ++i) {
            if (i > 0) lo[i] = u(rng);
            if (i + 1 < n) up[i] = u(rng);
            di[i] = (std::abs(lo[i]) + std::abs(up[i]) + 0.5 + std::abs(u(rng))) *
                    (u(rng) > 0 ? 1.0 : -1.0);
            b[i] = 3.0 * u(rng);
            if (i > 0) dense[static_cast<size_t>(i) * n + i - 1] = lo[i];
            dense[static_cast<size_t>(i) * n + i] = di[i];
            if (i + 1 < n) dense[static_cast<size_t>(i) * n + i + 1] = up[i];
        }
        std::vector<double> x = tridiagonal_solve(lo, di, up, b);
        auto ref = dense_solve(dense, b, n);
        REQUIRE(ref.has_value());
        for (int i = 0; i < n; ++i) {
            CHECK(x[i] == doctest::Approx((*ref)[i]).epsilon(1e-12));
        }
    }

    // zero pivot signals an assumption violation
    std::vector<double> sing{0.0};
    std::vector<double> one{1.0};
    std::vector<double> zero1{0.0};
    CHECK_THROWS_AS(tridiagonal_solve(zero1, sing, zero1, one), std::runtime_error);
}

TEST_CASE("constant payoff with zero Neumann data solves to f / rho") {
    GameSpec s;
    s.sigma0 = 1.0;
    s.rho = 0.5;
    s.running_payoff.poly_coeffs = {1.0};  // f constant one
    s.cost = CostFamily{1.0, 0.0, 0.0, 0.0};
    Grid g = build_grid(2.0, 0.5);
    Discretization disc = build_discretization(s, g, ImpulseMode::Constrained,
                                               BoundaryData{0.0, 0.0, false});
    // -L v = f with L rows summing to -rho: v = 1/rho everywhere
    std::vector<double> neg_lo(g.node_count()), neg_di(g.node_count()), neg_up(g.node_count());
    for (int a = 0; a < g.node_count(); ++a) {
        neg_lo[a] = -disc.gen.lower[a];
        neg_di[a] = -disc.gen.diag[a];
        neg_up[a] = -disc.gen.upper[a];
    }
    std::vector<double> v = tridiagonal_solve(neg_lo, neg_di, neg_up, disc.gen.f_adjusted);
    for (double x : v) CHECK(x == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("restrict_problem") {
    GameSpec s = linear_game();
    Grid g = build_grid(2.0, 1.0);
    Discretization disc = build_discretization(s, g, ImpulseMode::Constrained);
    const int count = g.node_count();

    std::mt19937_64 rng(59);
    std::vector<double> w = random_vector(rng, count, -2.0, 2.0);

    SUBCASE("full grid is the identity restriction") {
        std::vector<int> d = full_solvency(g);
        RestrictedProblem p = restrict_problem(disc, w, d);
        CHECK(p.restricted_size() == count);
        for (int r = 0; r < count; ++r) {
            CHECK(p.lt_lower[r] == disc.gen.lower[r]);
            CHECK(p.lt_diag[r] == disc.gen.diag[r]);
            CHECK(p.lt_upper[r] == disc.gen.upper[r]);
            CHECK(p.f_t[r] == disc.gen.f_adjusted[r]);
        }
    }

    SUBCASE("zero exterior leaves f unchanged") {
        std::vector<double> zero(count, 0.0);
        std::vector<int> d;
        for (int i = -g.n; i <= 1; ++i) d.push_back(i);  // drop node +2
        RestrictedProblem p = restrict_problem(disc, zero, d);
        for (int r = 0; r < p.restricted_size(); ++r) {
            CHECK(p.f_t[r] == disc.gen.f_adjusted[g.array_index(p.d_nodes[r])]);
        }
    }

    SUBCASE("dropped neighbour moves into f") {
        std::vector<int> d;
        for (int i = -g.n; i <= 1; ++i) d.push_back(i);  // D misses +2
        RestrictedProblem p = restrict_problem(disc, w, d);
        const int r1 = p.comp_of_array[g.array_index(1)];
        CHECK(p.f_t[r1] == doctest::Approx(disc.gen.f_adjusted[g.array_index(1)] +
                                           disc.gen.upper[g.array_index(1)] * w[g.array_index(2)])
                               .epsilon(1e-15));
        CHECK(p.lt_upper[r1] == 0.0);
    }

    SUBCASE("D must contain the nonpositive nodes") {
        std::vector<int> d{-2, 0, 1, 2};  // missing -1
        CHECK_THROWS_AS(restrict_problem(disc, w, d), std::invalid_argument);
    }
}

TEST_CASE("fppi solves the never-profitable game in one pass") {
    GameSpec s = linear_game();
    s.cost.c0 = 1e9;
    Grid g = build_grid(4.0, 0.5);
    Discretization disc = build_discretization(s, g, ImpulseMode::Constrained);
    const int count = g.node_count();
    std::vector<double> w(count, 0.0);
    RestrictedProblem p = restrict_problem(disc, w, full_solvency(g));

    InnerSolveResult res = solve_fppi(p, SolverParams{});
    CHECK(res.exact);
    CHECK(res.iterations <= 2);
    CHECK(res.strategy.intervention_nodes(g).empty());

    // matches the direct continuation solve
    std::vector<double> neg_lo(count), neg_di(count), neg_up(count);
    for (int a = 0; a < count; ++a) {
        neg_lo[a] = -disc.gen.lower[a];
        neg_di[a] = -disc.gen.diag[a];
        neg_up[a] = -disc.gen.upper[a];
    }
    std::vector<double> direct = tridiagonal_solve(neg_lo, neg_di, neg_up, disc.gen.f_adjusted);
    for (int a = 0; a < count; ++a) {
        CHECK(res.v[a] == doctest::Approx(direct[a]).epsilon(1e-12));
    }
}

TEST_CASE("howard solves the never-profitable game in one evaluation") {
    GameSpec s = linear_game();
    s.cost.c0 = 1e9;
    Grid g = build_grid(3.0, 0.5);
    Discretization disc = build_discretization(s, g, ImpulseMode::Constrained);
    std::vector<double> w(g.node_count(), 0.0);
    RestrictedProblem p = restrict_problem(disc, w, full_solvency(g));

    SolverParams params;
    params.variant = InnerVariant::Howard;
    InnerSolveResult res = solve_howard(p, params);
    CHECK(res.exact);
    CHECK(res.iterations == 1);
    CHECK(res.strategy.intervention_nodes(g).empty());
}

TEST_CASE("fppi and howard agree on the linear game") {
    GameSpec s = linear_game();
    Grid g = build_grid(4.0, 0.25);
    Discretization disc = build_discretization(s, g, ImpulseMode::Constrained);
    std::vector<double> w(g.node_count(), 0.0);
    std::vector<int> d = full_solvency(g);
    RestrictedProblem p = restrict_problem(disc, w, d);

    SolverParams params;
    InnerSolveResult fppi = solve_fppi(p, params);
    params.variant = InnerVariant::Howard;
    InnerSolveResult howard = solve_howard(p, params);
    CHECK(max_gap_on(g, d, fppi.v, howard.v) <= 1e-12 * 350.0);  // payoffs are O(100)
    CHECK(fppi.strategy.intervene == howard.strategy.intervene);
}

TEST_CASE("fppi, howard and brute force agree on random games") {
    std::mt19937_64 rng(61);
    for (int t = 0; t < 12; ++t) {
        GameSpec s = random_game(rng);
        Grid g = build_grid(1.5, 0.5);  // N = 3
        const ImpulseMode mode = (t % 2 == 0) ? ImpulseMode::Constrained : ImpulseMode::Unconstrained;
        Discretization disc = build_discretization(s, g, mode);
        std::vector<double> w = random_vector(rng, g.node_count(), -2.0, 2.0);
        std::vector<int> d = random_solvency(rng, g);
        RestrictedProblem p = restrict_problem(disc, w, d);

        SolverParams params;
        InnerSolveResult fppi = solve_fppi(p, params);
        params.variant = InnerVariant::Howard;
        InnerSolveResult howard = solve_howard(p, params);
        std::vector<double> brute = solve_brute_force(p);

        CHECK(max_gap_on(g, d, fppi.v, howard.v) <= 1e-12);
        CHECK(max_gap_on(g, d, fppi.v, brute) <= 1e-12);
        CHECK(fppi.strategy.intervene == howard.strategy.intervene);
    }
}

TEST_CASE("fppi iterates are monotone from the first step") {
    std::mt19937_64 rng(67);
    for (int t = 0; t < 10; ++t) {
        GameSpec s = random_game(rng);
        Grid g = build_grid(2.0, 0.25);
        Discretization disc = build_discretization(s, g, ImpulseMode::Constrained);
        std::vector<double> w = random_vector(rng, g.node_count(), -2.0, 2.0);
        RestrictedProblem p = restrict_problem(disc, w, random_solvency(rng, g));

        SolverParams params;
        params.record_history = true;
        InnerSolveResult res = solve_fppi(p, params);
        REQUIRE(res.history.size() >= 2);
        // v^{k+1} >= v^k elementwise for k >= 1 (history[0] holds v^0)
        for (size_t k = 2; k < res.history.size(); ++k) {
            for (int i : p.d_nodes) {
                const int a = g.array_index(i);
                CHECK(res.history[k].v[a] >= res.history[k - 1].v[a]);
            }
        }
        for (int i : p.d_nodes) {
            const int a = g.array_index(i);
            CHECK(res.v[a] >= res.history.back().v[a]);
        }
    }
}

TEST_CASE("fppi satisfies its fixed-point relation at every iteration") {
    std::mt19937_64 rng(71);
    GameSpec s = random_game(rng);
    Grid g = build_grid(2.0, 0.25);
    Discretization disc = build_discretization(s, g, ImpulseMode::Constrained);
    std::vector<double> w = random_vector(rng, g.node_count(), -1.0, 1.0);
    RestrictedProblem p = restrict_problem(disc, w, full_solvency(g));

    SolverParams params;
    params.record_history = true;
    InnerSolveResult res = solve_fppi(p, params);
    REQUIRE(res.history.size() >= 2);

    for (size_t k = 0; k + 1 < res.history.size(); ++k) {
        const auto& prev = res.history[k];
        const auto& next = res.history[k + 1];
        LossResult obstacle = loss_operator(disc, prev.v);
        for (int i : p.d_nodes) {
            const int a = g.array_index(i);
            if (prev.policy.intervene[a]) {
                // obstacle row: v^{k+1} = B(delta^k) v^k - c(delta^k) exactly
                CHECK(next.v[a] == obstacle.m[a]);
            } else {
                // generator row: L v^{k+1} + f = 0 up to solver roundoff
                CHECK(std::abs(disc.gen.residual_row(next.v, a)) <= 1e-12 * 100.0);
            }
        }
    }
}

TEST_CASE("howard policy systems are WCDD at every iteration") {
    std::mt19937_64 rng(73);
    GameSpec s = random_game(rng);
    Grid g = build_grid(1.5, 0.5);
    Discretization disc = build_discretization(s, g, ImpulseMode::Constrained);
    std::vector<double> w = random_vector(rng, g.node_count(), -1.0, 1.0);
    RestrictedProblem p = restrict_problem(disc, w, full_solvency(g));

    SolverParams params;
    params.variant = InnerVariant::Howard;
    params.record_history = true;
    InnerSolveResult res = solve_howard(p, params);

    for (const auto& it : res.history) {
        // assemble the policy matrix rows as the evaluation does
        const int m = p.restricted_size();
        SparseMatrix a_mat(m);
        for (int r = 0; r < m; ++r) {
            const int i = p.d_nodes[r];
            const int a = g.array_index(i);
            if (it.policy.intervene[a]) {
                a_mat.add(r, r, 1.0);
                const int tc = p.comp_of_array[g.array_index(i + it.policy.steps[a])];
                if (tc >= 0) a_mat.add(r, tc, -1.0);
            } else {
                if (p.lt_lower[r] != 0.0) a_mat.set(r, r - 1, -p.lt_lower[r]);
                a_mat.set(r, r, -p.lt_diag[r]);
                if (p.lt_upper[r] != 0.0) a_mat.set(r, r + 1, -p.lt_upper[r]);
            }
        }
        CHECK(is_wcdd(a_mat));
    }
}

TEST_CASE("brute force rejects oversized enumerations") {
    GameSpec s = linear_game();
    Grid g = build_grid(8.0, 0.25);  // far beyond the policy budget
    Discretization disc = build_discretization(s, g, ImpulseMode::Constrained);
    std::vector<double> w(g.node_count(), 0.0);
    RestrictedProblem p = restrict_problem(disc, w, full_solvency(g));
    CHECK_THROWS_AS(solve_brute_force(p), std::runtime_error);
}

}  // TEST_SUITE

#include "doctest.h"

#include <cmath>
#include <random>

#include "sig/dense_solve.hpp"
#include "sig/diagnostics.hpp"
#include "sig/game_driver.hpp"
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

Strategy empty_strategy(const Grid& g) {
    Strategy phi;
    phi.intervene.assign(g.node_count(), 0);
    phi.steps.assign(g.node_count(), 0);
    return phi;
}

Strategy random_strategy(std::mt19937_64& rng, const Discretization& disc) {
    const Grid& g = disc.grid;
    Strategy phi = empty_strategy(g);
    for (int i = -g.n; i < 0; ++i) {
        if (rng() & 1u) {
            const int a = g.array_index(i);
            phi.intervene[a] = 1;
            phi.steps[a] = std::uniform_int_distribution<int>(1, disc.zsets.max_steps(i))(rng);
        }
    }
    return phi;
}

}  // namespace

TEST_SUITE("diagnostics") {

TEST_CASE("coefficients of the empty strategy pair") {
    GameSpec s = linear_game();
    Grid g = build_grid(3.0, 0.5);
    Discretization disc = build_discretization(s, g, ImpulseMode::Constrained);
    Strategy phi = empty_strategy(g);

    CoefficientTriple t = assemble_coefficients(disc, phi, phi);
    SparseMatrix neg = disc.gen.negated_sparse();
    for (int r = 0; r < g.node_count(); ++r) {
        auto row_a = t.a_mat.row(r);
        auto row_l = neg.row(r);
        REQUIRE(row_a.size() == row_l.size());
        for (size_t e = 0; e < row_a.size(); ++e) {
            CHECK(row_a[e].col == row_l[e].col);
            CHECK(row_a[e].value == row_l[e].value);
        }
        CHECK(t.b_mat.row(r).empty());
        CHECK(t.c_vec[r] == disc.gen.f_adjusted[r]);
    }
}

TEST_CASE("coefficient properties for random constrained pairs") {
    std::mt19937_64 rng(79);
    GameSpec s = linear_game();
    Grid g = build_grid(4.0, 0.25);
    Discretization disc = build_discretization(s, g, ImpulseMode::Constrained);

    for (int t = 0; t < 40; ++t) {
        Strategy phi = random_strategy(rng, disc);
        Strategy phi_bar = random_strategy(rng, disc);
        CoefficientTriple c = assemble_coefficients(disc, phi, phi_bar);

        CHECK(is_wcdd(c.a_mat));
        CHECK(is_substochastic(c.b_mat, 0.0));

        SparseMatrix diff = c.a_mat - c.b_mat;
        RowClassification rc = classify_rows(diff);
        CHECK(rc.all_wdd);  // (A - B) is a WDD L0-matrix
        ConnectivityReport con = index_of_connectivity(diff);
        CHECK(con.con <= g.n);  // the structural bound m = N for constrained sets
    }
}

TEST_CASE("contraction of A^{-1}B is bounded by the connectivity of A - B") {
    std::mt19937_64 rng(83);
    GameSpec s = linear_game();
    Grid g = build_grid(2.0, 0.25);  // N = 8, dense inverse is fine
    Discretization disc = build_discretization(s, g, ImpulseMode::Constrained);
    const int count = g.node_count();

    for (int t = 0; t < 20; ++t) {
        Strategy phi = random_strategy(rng, disc);
        Strategy phi_bar = random_strategy(rng, disc);
        CoefficientTriple c = assemble_coefficients(disc, phi, phi_bar);

        auto inv = dense_inverse(c.a_mat.to_dense(), count);
        REQUIRE(inv.has_value());
        std::vector<double> bd = c.b_mat.to_dense();
        std::vector<double> prod(static_cast<size_t>(count) * count, 0.0);
        for (int i = 0; i < count; ++i) {
            for (int k = 0; k < count; ++k) {
                const double left = (*inv)[static_cast<size_t>(i) * count + k];
                if (left == 0.0) continue;
                for (int j = 0; j < count; ++j) {
                    prod[static_cast<size_t>(i) * count + j] += left * bd[static_cast<size_t>(k) * count + j];
                }
            }
        }
        // A^{-1}B is substochastic up to roundoff
        for (double x : prod) CHECK(x >= -1e-12);
        SparseMatrix ab = SparseMatrix::from_dense(prod, count, 1e-12);
        CHECK(is_substochastic(ab, 1e-9));
        const int chat = index_of_contraction(ab, 1e-9).con;
        const int con = index_of_connectivity(c.a_mat - c.b_mat).con;
        const bool bounded = chat <= con || con == kInfiniteIndex;
        CHECK(bounded);
    }
}

TEST_CASE("diff metric") {
    CHECK(diff_metric(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0, 2.0}, 1.0) == 0.0);
    CHECK(diff_metric(std::vector<double>{2.0, 0.0}, std::vector<double>{1.0, 0.0}, 1.0) == 0.5);
    CHECK(diff_metric(std::vector<double>{0.1}, std::vector<double>{0.0}, 1.0) ==
          doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("qvi residual on the exactly solved linear game") {
    GameSpec s = linear_game();
    Grid g = build_grid(4.0, 1.0);
    Discretization disc = build_discretization(s, g, ImpulseMode::Constrained);
    DriverParams params;
    params.stop_mode = StopMode::ToStagnation;
    params.max_outer_iters = 100;
    Outcome outcome = run(disc, params);
    REQUIRE(outcome.kind == OutcomeKind::ConvergedExact);

    ResidualReport report = qvi_residual(disc, outcome.v);
    CHECK(report.max_res_qvis <= 1e-10);  // everywhere, spikes included
    for (double r : report.residual) CHECK(std::abs(r) <= 1e-10);
}

TEST_CASE("uip holds on the linear game solution and fails on a flat tie") {
    GameSpec s = linear_game();
    Grid g = build_grid(4.0, 0.25);
    Discretization disc = build_discretization(s, g, ImpulseMode::Constrained);
    DriverParams params;
    params.stop_mode = StopMode::ToStagnation;
    params.max_outer_iters = 200;
    Outcome outcome = run(disc, params);
    REQUIRE(outcome.nash.has_intervention);
    UipReport uip = uip_check(disc, outcome.v, 1e-9);
    CHECK(uip.holds);
    CHECK(uip.nodes_checked > 0);

    // flat cost + constant payoff: every impulse ties, UIP must fail
    GameSpec flat;
    flat.sigma0 = 1.0;
    flat.rho = 1.0;
    flat.cost = CostFamily{1.0, 0.0, 0.0, 0.0};
    flat.running_payoff.poly_coeffs = {-2.0};  // f = -2 <= -c0 - rho*v
    Discretization fd = build_discretization(flat, build_grid(3.0, 1.0), ImpulseMode::Constrained);
    std::vector<double> v(fd.grid.node_count(), 0.0);
    UipReport bad = uip_check(fd, v, 1e-9);
    CHECK(bad.nodes_checked > 0);
    CHECK_FALSE(bad.holds);
}

TEST_CASE("solution characterization") {
    GameSpec s = linear_game();
    Grid g = build_grid(4.0, 0.5);  // converges exactly at this step
    Discretization disc = build_discretization(s, g, ImpulseMode::Constrained);
    DriverParams params;
    params.stop_mode = StopMode::ToStagnation;
    params.max_outer_iters = 200;
    Outcome outcome = run(disc, params);
    REQUIRE(outcome.kind == OutcomeKind::ConvergedExact);

    CharacterizationReport rep = verify_solution_characterization(disc, outcome.v);
    CHECK(rep.gap <= 1e-8);

    // a perturbed payoff is not a solution: strictly positive gap
    std::vector<double> off = outcome.v;
    off[g.array_index(0)] += 0.5;
    CharacterizationReport bad = verify_solution_characterization(disc, off);
    CHECK(bad.gap > 1e-3);

    // never-intervene game: u = (-L)^{-1} f = v
    GameSpec huge = linear_game();
    huge.cost.c0 = 1e9;
    Discretization hd = build_discretization(huge, g, ImpulseMode::Constrained);
    Outcome ho = run(hd, params);
    CHECK_FALSE(ho.nash.has_intervention);
    CharacterizationReport hrep = verify_solution_characterization(hd, ho.v);
    CHECK(hrep.gap <= 1e-10 * 400.0);
}

TEST_CASE("symmetry report") {
    std::mt19937_64 rng(89);
    GameSpec s = random_game(rng);
    Grid g = build_grid(2.0, 0.25);
    Discretization disc = build_discretization(s, g, ImpulseMode::Constrained);
    std::vector<double> v = random_vector(rng, g.node_count(), -2.0, 2.0);
    Strategy phi = random_strategy(rng, disc);

    SymmetryReport rep = symmetry_report(disc, v, phi);
    CHECK(rep.mirrored_operator_exact);
    for (int a = 0; a < g.node_count(); ++a) {
        CHECK(rep.opponent_payoff[a] == v[g.node_count() - 1 - a]);
    }
    for (int i : phi.intervention_nodes(g)) {
        CHECK(std::find(rep.opponent_intervention.begin(), rep.opponent_intervention.end(), -i) !=
              rep.opponent_intervention.end());
    }
}

TEST_CASE("check_a0") {
    GameSpec s = linear_game();
    Grid g = build_grid(3.0, 0.5);
    Discretization disc = build_discretization(s, g, ImpulseMode::Constrained);

    // positive impulses always walk towards the continuation region
    std::mt19937_64 rng(97);
    for (int t = 0; t < 20; ++t) {
        Strategy phi = random_strategy(rng, disc);
        CHECK(check_a0(disc, phi));
    }

    // a zero impulse on an intervention node is a self-loop: (A0) fails
    Strategy stuck = empty_strategy(g);
    stuck.intervene[g.array_index(-2)] = 1;
    stuck.steps[g.array_index(-2)] = 0;
    CHECK_FALSE(check_a0(disc, stuck));
}

TEST_CASE("check_a0_prime accepts constrained pairs and rejects the symmetric swap") {
    GameSpec s = linear_game();
    Grid g = build_grid(2.0, 0.5);  // 4 negative nodes

    Discretization constrained = build_discretization(s, g, ImpulseMode::Constrained);
    std::mt19937_64 rng(101);
    for (int t = 0; t < 20; ++t) {
        Strategy phi = random_strategy(rng, constrained);
        Strategy phi_bar = random_strategy(rng, constrained);
        CHECK(check_a0_prime(constrained, phi, phi_bar));
    }

    // unconstrained mode: delta(x) = -2x swaps every node with its mirror
    Discretization unconstrained = build_discretization(s, g, ImpulseMode::Unconstrained);
    Strategy swap = empty_strategy(g);
    for (int i = -g.n; i < 0; ++i) {
        swap.intervene[g.array_index(i)] = 1;
        swap.steps[g.array_index(i)] = -2 * i;
        REQUIRE(unconstrained.zsets.admissible(i, -2 * i));
    }
    CHECK_FALSE(check_a0_prime(unconstrained, swap, swap));
}

TEST_CASE("sampled (A0'') validator") {
    GameSpec s = linear_game();
    Grid g = build_grid(4.0, 0.25);
    Discretization disc = build_discretization(s, g, ImpulseMode::Constrained);

    A0DoublePrimeReport rep = check_a0_doubleprime_sampled(disc, 50, 12345);
    CHECK(rep.ok);
    CHECK(rep.trials == 50);
    CHECK(rep.max_con_observed <= g.n);

    // the never-intervene pair gives A - B = -L with every row SDD
    Strategy phi = empty_strategy(g);
    CoefficientTriple t = assemble_coefficients(disc, phi, phi);
    CHECK(index_of_connectivity(t.a_mat - t.b_mat).con == 0);

    Discretization unconstrained = build_discretization(s, g, ImpulseMode::Unconstrained);
    CHECK_THROWS_AS(check_a0_doubleprime_sampled(unconstrained, 5, 1), std::invalid_argument);
}

}  // TEST_SUITE

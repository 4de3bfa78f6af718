#include "sig/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "sig/dense_solve.hpp"

namespace sig {

namespace {

int reflect_array(const Grid& grid, int a) { return 2 * grid.n - a; }

std::vector<std::uint8_t> intervention_mask_of(const Discretization& disc,
                                               std::span<const double> v, const LossResult& loss) {
    const Grid& grid = disc.grid;
    std::vector<std::uint8_t> mask(static_cast<size_t>(grid.node_count()), 0);
    for (int i = -grid.n; i < 0; ++i) {
        const int a = grid.array_index(i);
        const double cont = disc.gen.residual_row(v, a);
        if (cont <= loss.m[static_cast<size_t>(a)] - v[static_cast<size_t>(a)]) {
            mask[static_cast<size_t>(a)] = 1;
        }
    }
    return mask;
}

}  // namespace

CoefficientTriple assemble_coefficients(const Discretization& disc, const Strategy& phi,
                                        const Strategy& phi_bar) {
    const Grid& grid = disc.grid;
    const int count = grid.node_count();
    CoefficientTriple t{SparseMatrix(count), SparseMatrix(count), std::vector<double>(static_cast<size_t>(count), 0.0)};

    for (int i = -grid.n; i <= grid.n; ++i) {
        const int a = grid.array_index(i);
        const int ma = reflect_array(grid, a);  // array index of -x
        const bool player_intervenes = phi_bar.intervene[static_cast<size_t>(a)] != 0;
        const bool opponent_intervenes = phi.intervene[static_cast<size_t>(ma)] != 0;

        if (player_intervenes) {
            const int steps = phi_bar.steps[static_cast<size_t>(a)];
            const int target = std::clamp(i + steps, -grid.n, grid.n);
            t.a_mat.add(a, a, 1.0);
            t.a_mat.add(a, grid.array_index(target), -1.0);
            t.c_vec[static_cast<size_t>(a)] = -disc.cost_at(i, steps);
        } else if (opponent_intervenes) {
            const int steps = phi.steps[static_cast<size_t>(ma)];
            const int target = std::clamp(-i + steps, -grid.n, grid.n);  // B(delta) row at -x
            t.a_mat.add(a, a, 1.0);
            t.b_mat.add(a, grid.array_index(-target), 1.0);  // reflected column
            t.c_vec[static_cast<size_t>(a)] = disc.gain_at(i, steps);
        } else {
            if (a > 0 && disc.gen.lower[static_cast<size_t>(a)] != 0.0) {
                t.a_mat.add(a, a - 1, -disc.gen.lower[static_cast<size_t>(a)]);
            }
            t.a_mat.add(a, a, -disc.gen.diag[static_cast<size_t>(a)]);
            if (a + 1 < count && disc.gen.upper[static_cast<size_t>(a)] != 0.0) {
                t.a_mat.add(a, a + 1, -disc.gen.upper[static_cast<size_t>(a)]);
            }
            t.c_vec[static_cast<size_t>(a)] = disc.gen.f_adjusted[static_cast<size_t>(a)];
        }
    }
    return t;
}

double diff_metric(std::span<const double> v_new, std::span<const double> v_old, double scale) {
    double worst = 0.0;
    for (size_t a = 0; a < v_new.size(); ++a) {
        const double den = std::max(std::abs(v_new[a]), scale);
        worst = std::max(worst, std::abs(v_new[a] - v_old[a]) / den);
    }
    return worst;
}

ResidualReport qvi_residual(const Discretization& disc, std::span<const double> v) {
    const Grid& grid = disc.grid;
    const int count = grid.node_count();
    LossResult loss = loss_operator(disc, v);

    ResidualReport report;
    report.intervention_mask = intervention_mask_of(disc, v, loss);
    report.residual.assign(static_cast<size_t>(count), 0.0);

    std::vector<double> hv = gain_operator(disc, v, loss.steps);

    int border = grid.n + 1;  // innermost intervention node, if any
    for (int i = -grid.n; i < 0; ++i) {
        if (report.intervention_mask[static_cast<size_t>(grid.array_index(i))]) border = i;
    }
    const bool has_intervention = border <= grid.n;

    for (int j = -grid.n; j <= grid.n; ++j) {
        const int a = grid.array_index(j);
        const bool opponent_side = report.intervention_mask[static_cast<size_t>(reflect_array(grid, a))] != 0;
        double r;
        if (opponent_side) {
            r = hv[static_cast<size_t>(a)] - v[static_cast<size_t>(a)];
        } else {
            r = std::max(disc.gen.residual_row(v, a), loss.m[static_cast<size_t>(a)] - v[static_cast<size_t>(a)]);
        }
        report.residual[static_cast<size_t>(a)] = r;
    }

    if (has_intervention) {
        for (int j = -border - 2; j <= -border + 2; ++j) {
            if (j >= -grid.n && j <= grid.n) report.spike_nodes.push_back(j);
        }
    }

    double full = 0.0, excl = 0.0;
    for (int j = -grid.n; j <= grid.n; ++j) {
        const double r = std::abs(report.residual[static_cast<size_t>(grid.array_index(j))]);
        full = std::max(full, r);
        const bool spike = has_intervention && std::abs(j + border) <= 2;
        if (!spike) excl = std::max(excl, r);
    }
    report.max_res_qvis = full;
    report.max_res_excluding_spikes = excl;
    return report;
}

UipReport uip_check(const Discretization& disc, std::span<const double> v, double rel_tol) {
    const Grid& grid = disc.grid;
    LossResult loss = loss_operator(disc, v);
    std::vector<std::uint8_t> mask = intervention_mask_of(disc, v, loss);

    UipReport report;
    for (int i = -grid.n; i < 0; ++i) {
        const int a = grid.array_index(i);
        if (!mask[static_cast<size_t>(a)]) continue;
        ++report.nodes_checked;
        const double m = loss.m[static_cast<size_t>(a)];
        const double threshold = m - rel_tol * std::max(1.0, std::abs(m));
        int achievers = 0;
        for (int s = 0; s <= disc.zsets.max_steps(i); ++s) {
            const double value = v[static_cast<size_t>(a + s)] - disc.cost_at(i, s);
            if (value >= threshold) ++achievers;
        }
        if (achievers != 1) {
            report.holds = false;
            report.violating_nodes.push_back(i);
        }
    }
    return report;
}

CharacterizationReport verify_solution_characterization(const Discretization& disc,
                                                        std::span<const double> v) {
    const Grid& grid = disc.grid;
    LossResult loss = loss_operator(disc, v);
    Strategy phi_star;
    phi_star.intervene = intervention_mask_of(disc, v, loss);
    phi_star.steps = loss.steps;

    CoefficientTriple t = assemble_coefficients(disc, phi_star, phi_star);
    SparseMatrix system = t.a_mat - t.b_mat;
    auto u = dense_solve(system.to_dense(), t.c_vec, grid.node_count());
    if (!u) {
        throw std::runtime_error(
            "verify_solution_characterization: singular A - B (signals (A0') violation)");
    }
    CharacterizationReport report;
    report.u = std::move(*u);
    for (size_t a = 0; a < report.u.size(); ++a) {
        report.gap = std::max(report.gap, std::abs(report.u[a] - v[a]));
    }
    return report;
}

SymmetryReport symmetry_report(const Discretization& disc, std::span<const double> v,
                               const Strategy& strategy) {
    const Grid& grid = disc.grid;
    const int count = grid.node_count();
    SymmetryReport report;
    report.opponent_payoff.resize(static_cast<size_t>(count));
    for (int a = 0; a < count; ++a) {
        report.opponent_payoff[static_cast<size_t>(a)] = v[static_cast<size_t>(reflect_array(grid, a))];
    }
    for (int i = -grid.n; i <= grid.n; ++i) {
        if (strategy.intervene[static_cast<size_t>(grid.array_index(i))]) {
            report.opponent_intervention.push_back(-i);
        }
    }
    std::sort(report.opponent_intervention.begin(), report.opponent_intervention.end());

    // Opponent-side loss operator built by reflection; it must agree with the
    // reflected player-side values bitwise, node by node.
    LossResult loss = loss_operator(disc, v);
    std::vector<double> sv = report.opponent_payoff;
    bool exact = true;
    for (int y = -grid.n; y <= grid.n; ++y) {
        const int a = grid.array_index(y);
        double best = sv[static_cast<size_t>(a)] - disc.cost_at(-y, 0);
        for (int d = 1; d <= disc.zsets.max_steps(-y); ++d) {
            const double value = sv[static_cast<size_t>(a - d)] - disc.cost_at(-y, d);
            if (value >= best) best = value;
        }
        exact = exact && best == loss.m[static_cast<size_t>(reflect_array(grid, a))];
    }
    report.mirrored_operator_exact = exact;
    return report;
}

bool check_a0(const Discretization& disc, const Strategy& phi) {
    ImpulseOperator b = build_impulse_operator(disc.grid, std::span<const int>(phi.steps));
    return walks_leave_set(b.to_sparse(), phi.intervene);
}

SparseMatrix combined_intervention_graph(const Discretization& disc, const Strategy& phi,
                                         const Strategy& phi_bar) {
    const Grid& grid = disc.grid;
    const int count = grid.node_count();
    SparseMatrix g(count);
    for (int i = -grid.n; i <= grid.n; ++i) {
        const int a = grid.array_index(i);
        const int ma = reflect_array(grid, a);
        if (phi_bar.intervene[static_cast<size_t>(a)]) {
            const int target = std::clamp(i + phi_bar.steps[static_cast<size_t>(a)], -grid.n, grid.n);
            g.add(a, grid.array_index(target), 1.0);
        }
        if (phi.intervene[static_cast<size_t>(ma)]) {
            const int target = std::clamp(-i + phi.steps[static_cast<size_t>(ma)], -grid.n, grid.n);
            g.add(a, grid.array_index(-target), 1.0);
        }
    }
    return g;
}

bool check_a0_prime(const Discretization& disc, const Strategy& phi, const Strategy& phi_bar) {
    const Grid& grid = disc.grid;
    const int count = grid.node_count();
    SparseMatrix g = combined_intervention_graph(disc, phi, phi_bar);
    std::vector<std::uint8_t> sources(static_cast<size_t>(count), 0);
    std::vector<std::uint8_t> targets(static_cast<size_t>(count), 0);
    for (int a = 0; a < count; ++a) {
        const bool in_player = phi_bar.intervene[static_cast<size_t>(a)] != 0;
        const bool in_opponent = phi.intervene[static_cast<size_t>(reflect_array(grid, a))] != 0;
        sources[static_cast<size_t>(a)] = in_player || in_opponent;
        targets[static_cast<size_t>(a)] = !(in_player || in_opponent);
    }
    return walks_reach_set(g, sources, targets);
}

A0DoublePrimeReport check_a0_doubleprime_sampled(const Discretization& disc, int trials,
                                                 std::uint64_t rng_seed) {
    if (disc.zsets.mode != ImpulseMode::Constrained) {
        throw std::invalid_argument("check_a0_doubleprime_sampled: requires constrained impulse sets");
    }
    const Grid& grid = disc.grid;
    const int count = grid.node_count();
    std::mt19937_64 rng(rng_seed);

    auto random_strategy = [&]() {
        Strategy phi;
        phi.intervene.assign(static_cast<size_t>(count), 0);
        phi.steps.assign(static_cast<size_t>(count), 0);
        for (int i = -grid.n; i < 0; ++i) {
            const int a = grid.array_index(i);
            if (rng() & 1u) {
                phi.intervene[static_cast<size_t>(a)] = 1;
                std::uniform_int_distribution<int> impulse(1, disc.zsets.max_steps(i));
                phi.steps[static_cast<size_t>(a)] = impulse(rng);
            }
        }
        return phi;
    };

    A0DoublePrimeReport report;
    report.trials = trials;
    for (int t = 0; t < trials; ++t) {
        Strategy phi = random_strategy();
        Strategy phi_bar = random_strategy();
        CoefficientTriple triple = assemble_coefficients(disc, phi, phi_bar);
        ConnectivityReport con = index_of_connectivity(triple.a_mat - triple.b_mat);
        const int value = con.con;
        if (value == kInfiniteIndex || value > grid.n || !con.wdd) {
            report.ok = false;
            report.counterexample = std::make_pair(std::move(phi), std::move(phi_bar));
            report.max_con_observed = kInfiniteIndex;
            return report;
        }
        report.max_con_observed = std::max(report.max_con_observed, value);
    }
    return report;
}

}  // namespace sig

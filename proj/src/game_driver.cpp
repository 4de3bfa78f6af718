#include "sig/game_driver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace sig {

void DriverParams::validate() const {
    if (!(tol > 0.0)) throw std::invalid_argument("DriverParams: tol must be > 0");
    if (!(scale > 0.0)) throw std::invalid_argument("DriverParams: scale must be > 0");
    if (max_outer_iters < 1) throw std::invalid_argument("DriverParams: max_outer_iters must be >= 1");
    if (cycle_window < 2) throw std::invalid_argument("DriverParams: cycle_window must be >= 2");
}

std::string to_string(OutcomeKind kind) {
    switch (kind) {
        case OutcomeKind::ConvergedExact: return "ConvergedExact";
        case OutcomeKind::ConvergedTol: return "ConvergedTol";
        case OutcomeKind::Cycled: return "Cycled";
        case OutcomeKind::Stagnated: return "Stagnated";
        case OutcomeKind::MaxIters: return "MaxIters";
    }
    return "?";
}

IterationState init_state(const Discretization& disc, const DriverParams& params) {
    const Grid& grid = disc.grid;
    const int count = grid.node_count();
    IterationState state;
    state.v = params.v0.empty() ? std::vector<double>(static_cast<size_t>(count), 0.0) : params.v0;
    if (static_cast<int>(state.v.size()) != count) {
        throw std::invalid_argument("init_state: v0 size mismatch");
    }

    LossResult loss = loss_operator(disc, state.v);
    state.phi.intervene.assign(static_cast<size_t>(count), 0);
    state.phi.steps = loss.steps;
    for (int i = -grid.n; i < 0; ++i) {
        const int a = grid.array_index(i);
        const double cont = disc.gen.residual_row(state.v, a);
        if (cont <= loss.m[static_cast<size_t>(a)] - state.v[static_cast<size_t>(a)]) {
            state.phi.intervene[static_cast<size_t>(a)] = 1;
        }
    }
    return state;
}

void step(const Discretization& disc, const DriverParams& params, IterationState& state,
          OuterStepRecord* record) {
    const Grid& grid = disc.grid;
    const int count = grid.node_count();

    // Half step: the opponent responds symmetrically on -I^k, everything else
    // keeps the current payoff.
    std::vector<double> v_half = state.v;
    std::vector<double> hv = gain_operator(disc, state.v, state.phi.steps);
    std::vector<int> d_nodes;
    d_nodes.reserve(static_cast<size_t>(count));
    for (int j = -grid.n; j <= grid.n; ++j) {
        const int a = grid.array_index(j);
        const bool mirrored = state.phi.intervene[static_cast<size_t>(grid.array_index(-j))] != 0;
        if (mirrored) {
            v_half[static_cast<size_t>(a)] = hv[static_cast<size_t>(a)];
        } else {
            d_nodes.push_back(j);
        }
    }

    RestrictedProblem p = restrict_problem(disc, v_half, d_nodes);
    InnerSolveResult inner = params.inner.variant == InnerVariant::Fppi
                                 ? solve_fppi(p, params.inner)
                                 : solve_howard(p, params.inner);
    if (record) {
        record->v_before = state.v;
        record->phi_before = state.phi;
        record->v_after = inner.v;
        record->phi_after = inner.strategy;
    }
    state.v = std::move(inner.v);
    state.phi = std::move(inner.strategy);
    state.inner_flagged = state.inner_flagged || !inner.converged;
    ++state.k;
}

namespace {

double max_abs(const std::vector<double>& v) {
    double worst = 0.0;
    for (double x : v) worst = std::max(worst, std::abs(x));
    return worst;
}

// Payoff fingerprint: FNV-1a over the payoff rounded to 12 significant digits
// plus the intervention mask. Rounding tolerates last-ulp jitter between
// genuinely cyclic iterates; bitwise equality is detected separately.
std::uint64_t fingerprint(const std::vector<double>& v, const Strategy& phi) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const char* data, size_t len) {
        for (size_t i = 0; i < len; ++i) {
            h ^= static_cast<unsigned char>(data[i]);
            h *= 1099511628211ull;
        }
    };
    char buf[32];
    for (double x : v) {
        const int len = std::snprintf(buf, sizeof buf, "%.11e", x);
        mix(buf, static_cast<size_t>(len));
    }
    for (std::uint8_t b : phi.intervene) {
        const char c = b ? '1' : '0';
        mix(&c, 1);
    }
    return h;
}

NashSummary nash_summary(const Discretization& disc, const Strategy& phi) {
    const Grid& grid = disc.grid;
    NashSummary nash;
    for (int i = -grid.n; i < 0; ++i) {
        if (phi.intervene[static_cast<size_t>(grid.array_index(i))]) {
            nash.has_intervention = true;
            nash.boundary_node = i;
        }
    }
    if (nash.has_intervention) {
        nash.boundary = grid.x(nash.boundary_node);
        const int steps = phi.steps[static_cast<size_t>(grid.array_index(nash.boundary_node))];
        nash.target = grid.x(nash.boundary_node + steps);
    }
    return nash;
}

}  // namespace

Outcome run(const Discretization& disc, const DriverParams& params) {
    params.validate();
    IterationState state = init_state(disc, params);

    Outcome outcome;
    outcome.max_payoff_magnitude = max_abs(state.v);

    std::deque<std::pair<std::uint64_t, int>> recent;  // fingerprint, step index
    recent.emplace_back(fingerprint(state.v, state.phi), 0);

    // Best iterate seen, by the full QVI residual. Non-converged runs return
    // it rather than an arbitrary cycle phase.
    std::vector<double> best_v = state.v;
    Strategy best_phi = state.phi;
    double best_res = std::numeric_limits<double>::infinity();
    double best_step_diff = std::numeric_limits<double>::infinity();
    int best_k = 0;

    double best_diff = std::numeric_limits<double>::infinity();
    double last_diff = std::numeric_limits<double>::infinity();
    int stalled = 0;
    bool done = false;

    for (int k = 0; k < params.max_outer_iters && !done; ++k) {
        std::vector<double> v_prev = state.v;
        Strategy phi_prev = state.phi;

        OuterStepRecord record;
        step(disc, params, state, params.record_history ? &record : nullptr);

        const double diff = diff_metric(state.v, v_prev, params.scale);
        last_diff = diff;
        outcome.max_payoff_magnitude = std::max(outcome.max_payoff_magnitude, max_abs(state.v));
        if (params.record_history) {
            record.diff = diff;
            outcome.history.push_back(std::move(record));
        }

        const double res = qvi_residual(disc, state.v).max_res_qvis;
        if (res < best_res) {
            best_res = res;
            best_v = state.v;
            best_phi = state.phi;
            best_step_diff = diff;
            best_k = state.k;
        }

        if (state.v == v_prev && state.phi.intervene == phi_prev.intervene) {
            outcome.kind = OutcomeKind::ConvergedExact;
            done = true;
            break;
        }

        // Smallest fingerprint-match distance within the window. Distance one
        // is a convergence plateau (consecutive iterates rounding alike), not
        // a cycle; a genuine cycle keeps consecutive iterates distinct.
        const std::uint64_t fp = fingerprint(state.v, state.phi);
        int period = 0;
        for (const auto& [old_fp, old_k] : recent) {
            if (old_fp == fp) period = state.k - old_k;  // recent is oldest-first
        }
        if (period >= 2) {
            outcome.kind = OutcomeKind::Cycled;
            outcome.cycle_period = period;
            done = true;
            break;
        }
        recent.emplace_back(fp, state.k);
        while (static_cast<int>(recent.size()) > params.cycle_window) recent.pop_front();

        if (params.stop_mode == StopMode::ToTolerance && diff < params.tol) {
            outcome.kind = OutcomeKind::ConvergedTol;
            done = true;
            break;
        }

        if (diff < best_diff) {
            best_diff = diff;
            stalled = 0;
        } else if (++stalled >= params.cycle_window) {
            outcome.kind = OutcomeKind::Stagnated;
            done = true;
            break;
        }
    }
    if (!done) outcome.kind = OutcomeKind::MaxIters;

    outcome.total_steps = state.k;
    const bool converged =
        outcome.kind == OutcomeKind::ConvergedExact || outcome.kind == OutcomeKind::ConvergedTol;
    if (converged) {
        outcome.v = state.v;
        outcome.strategy = state.phi;
        outcome.iterations = state.k;
        outcome.final_diff = last_diff;
    } else {
        outcome.v = std::move(best_v);
        outcome.strategy = std::move(best_phi);
        outcome.iterations = best_k;
        outcome.final_diff = best_step_diff;
    }
    outcome.inner_flagged = state.inner_flagged;
    outcome.nash = nash_summary(disc, outcome.strategy);
    outcome.degenerate = detect_degenerate_equilibrium(disc, outcome.v, outcome.strategy);
    outcome.residual = qvi_residual(disc, outcome.v);
    return outcome;
}

DegenerateReport detect_degenerate_equilibrium(const Discretization& disc,
                                               const std::vector<double>&, const Strategy& phi) {
    const Grid& grid = disc.grid;
    DegenerateReport report;
    for (int i = -grid.n; i < 0; ++i) {
        const int a = grid.array_index(i);
        if (!phi.intervene[static_cast<size_t>(a)]) continue;
        const int steps = phi.steps[static_cast<size_t>(a)];
        const int target = std::clamp(i + steps, -grid.n, grid.n);
        // Alternated pattern: the impulse lands inside the opponent's region,
        // triggering an immediate mirrored response.
        if (target > 0 && phi.intervene[static_cast<size_t>(grid.array_index(-target))]) {
            report.alternated_nodes.push_back(i);
        }
        // One-sided pattern: a single-node shift onto another intervention
        // node, chained towards the continuation region.
        if (steps == 1 && i + 1 < 0 && phi.intervene[static_cast<size_t>(grid.array_index(i + 1))]) {
            report.one_sided_nodes.push_back(i);
        }
    }
    return report;
}

}  // namespace sig

#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "sig/diagnostics.hpp"
#include "sig/discretization.hpp"
#include "sig/impulse_solver.hpp"

namespace sig {

enum class StopMode {
    ToTolerance,   // stop once Diff < tol (or earlier on exact convergence)
    ToStagnation,  // run until exact convergence, a cycle or stagnation
};

struct DriverParams {
    double tol = 1e-10;
    double scale = 1.0;
    int max_outer_iters = 500;
    int cycle_window = 8;
    StopMode stop_mode = StopMode::ToTolerance;
    std::vector<double> v0;  // empty selects the all-zero initial guess
    SolverParams inner;
    bool record_history = false;

    void validate() const;
};

enum class OutcomeKind { ConvergedExact, ConvergedTol, Cycled, Stagnated, MaxIters };

std::string to_string(OutcomeKind kind);

struct IterationState {
    int k = 0;
    std::vector<double> v;
    Strategy phi;
    bool inner_flagged = false;  // some inner solve hit its iteration cap
};

struct OuterStepRecord {
    std::vector<double> v_before, v_after;
    Strategy phi_before, phi_after;
    double diff = 0.0;
};

struct NashSummary {
    bool has_intervention = false;
    int boundary_node = 0;     // grid index of max(I)
    double boundary = 0.0;     // x value of the region border (-inf, boundary]
    double target = 0.0;       // boundary + delta*(boundary)
};

struct DegenerateReport {
    std::vector<int> alternated_nodes;  // impulse lands in the opponent's region
    std::vector<int> one_sided_nodes;   // single-step shifts chained inside I
    bool any() const { return !alternated_nodes.empty() || !one_sided_nodes.empty(); }
};

struct Outcome {
    OutcomeKind kind = OutcomeKind::MaxIters;
    int cycle_period = 0;
    /// Returned payoff. On exact or tolerance convergence this is the
    /// terminal iterate; on a cycle or stagnation it is the iterate with the
    /// smallest QVI residual seen (the accuracy a run report quotes), whose
    /// step index is `iterations`.
    std::vector<double> v;
    Strategy strategy;
    int iterations = 0;   // step index of the returned payoff
    int total_steps = 0;  // outer steps actually performed
    double final_diff = 0.0;
    double max_payoff_magnitude = 0.0;  // max over k of ||v^k||_inf
    bool inner_flagged = false;
    NashSummary nash;           // player side; the opponent side is its mirror
    DegenerateReport degenerate;
    ResidualReport residual;
    std::vector<OuterStepRecord> history;  // populated when record_history is set
};

/// I^0 = {Lv0 + f <= Mv0 - v0} on the negative nodes, delta^0 = delta*(v0).
IterationState init_state(const Discretization& disc, const DriverParams& params);

/// One outer step: apply the gain operator on the mirrored intervention set,
/// then solve the single-player problem on its complement.
void step(const Discretization& disc, const DriverParams& params, IterationState& state,
          OuterStepRecord* record = nullptr);

Outcome run(const Discretization& disc, const DriverParams& params);

/// Flags intervention nodes whose impulse would trigger the opponent at once
/// (alternated) or that shift mass one node at a time through the region
/// (one-sided) -- the two degenerate infinite-intervention patterns.
DegenerateReport detect_degenerate_equilibrium(const Discretization& disc,
                                               const std::vector<double>& v, const Strategy& phi);

}  // namespace sig

#pragma once

#include <span>
#include <vector>

#include "sig/discretization.hpp"

namespace sig {

/// Constrained single-player problem restricted to a solvency region D
/// containing every nonpositive node, with the payoff frozen to w outside D.
/// The restricted generator stays tridiagonal in compressed indexing; the
/// dropped neighbour columns move into f via L_{DD^c} w.
struct RestrictedProblem {
    const Discretization* disc = nullptr;
    std::vector<int> d_nodes;          // grid indices, ascending
    std::vector<int> comp_of_array;    // array index -> compressed index, -1 outside D
    std::vector<double> w;             // full-grid frozen values

    std::vector<double> lt_lower, lt_diag, lt_upper;  // restricted L rows
    std::vector<double> f_t;                          // f_D + L_{DD^c} w_{D^c}

    int restricted_size() const { return static_cast<int>(d_nodes.size()); }
    bool in_d(int array_idx) const { return comp_of_array[static_cast<size_t>(array_idx)] >= 0; }
};

RestrictedProblem restrict_problem(const Discretization& disc, std::span<const double> w,
                                   std::span<const int> d_grid_nodes);

enum class InnerVariant { Fppi, Howard };

struct SolverParams {
    double lambda = 1.0;       // obstacle scaling factor, > 0
    double inner_tol = 1e-15;
    int max_inner_iters = 5000;
    InnerVariant variant = InnerVariant::Fppi;
    double scale = 1.0;
    /// Use |v| in the stopping denominator max{|v|, scale}. The signed
    /// variant is kept selectable for reproduction studies.
    bool abs_denominator = true;
    bool record_history = false;
};

struct InnerIterate {
    std::vector<double> v;  // full grid, w outside D
    Strategy policy;        // intervention set and obstacle impulses of this step
};

struct InnerSolveResult {
    std::vector<double> v;  // full grid, w outside D
    Strategy strategy;      // I from the final improvement step, delta = delta*(v)
    int iterations = 0;     // linear solves performed
    bool exact = false;     // iterate and intervention set repeated bitwise
    bool converged = true;  // false when max_inner_iters was exhausted
    std::vector<InnerIterate> history;  // populated when record_history is set
};

/// Fixed-point policy iteration (the obstacle is frozen at the previous
/// iterate, so every linear solve stays tridiagonal). Starts from I^0 = {}
/// and converges monotonically from the first iterate on.
InnerSolveResult solve_fppi(const RestrictedProblem& p, const SolverParams& params);

/// Classic policy iteration on the equivalent Bellman form. Each evaluation
/// solves the full policy system (dense, since the impulse rows break the
/// band); terminates on policy repetition or the Diff criterion.
InnerSolveResult solve_howard(const RestrictedProblem& p, const SolverParams& params);

/// Enumeration oracle: solves every restricted policy system and returns the
/// payoff whose QVI residual is below `residual_tol`. Independent of both
/// iterative solvers; intended for tiny grids.
std::vector<double> solve_brute_force(const RestrictedProblem& p, double residual_tol = 1e-10,
                                      long long policy_budget = 1'000'000);

/// Thomas elimination for diagonally dominant tridiagonal systems.
/// lower[0] and upper[n-1] are ignored. Throws on a vanishing pivot.
std::vector<double> tridiagonal_solve(std::span<const double> lower, std::span<const double> diag,
                                      std::span<const double> upper, std::span<const double> rhs);

/// Intervention set {L v + f <= lambda (M v - v)} over D's negative nodes,
/// evaluated on the extended payoff u. Shared by both solver variants so
/// their outputs are directly comparable.
std::vector<std::uint8_t> improvement_set(const RestrictedProblem& p, std::span<const double> u,
                                          std::span<const double> m, double lambda);

}  // namespace sig

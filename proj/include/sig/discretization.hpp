#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sig/game_model.hpp"
#include "sig/matrix_analysis.hpp"

namespace sig {

/// Symmetric equispaced grid x_i = i*h for i = -n..n. Grid indices i run over
/// [-n, n]; array indices a = i + n address vectors of length 2n+1.
struct Grid {
    int n = 0;
    double h = 0.0;

    int node_count() const { return 2 * n + 1; }
    double x(int i) const { return static_cast<double>(i) * h; }
    int array_index(int i) const { return i + n; }
    int grid_index(int a) const { return a - n; }
};

/// Builds the symmetric grid with N = x_max / h nodes per side. Throws when
/// h <= 0 or x_max is not an integer multiple of h (N >= 1).
Grid build_grid(double x_max, double h);

/// Neumann derivative data at the two ghost nodes.
struct BoundaryData {
    double lbc = 0.0;
    double rbc = 0.0;
    /// Set when the affine LBC = c1 derivation does not apply to the cost
    /// family and (0, 0) was used as a fallback guess.
    bool heuristic = false;
};

/// LBC = c1, RBC = g1 for affine costs; (0, g1 stays valid) otherwise the
/// left value is a heuristic zero and the result is flagged.
BoundaryData default_boundary(const GameSpec& spec);

/// Tridiagonal discretization of A - rho*Id via the upwind
/// (positive-coefficients) scheme, with the Neumann ghost values folded into
/// the boundary diagonals and into f. -L is an SDD L0-matrix with dominance
/// margin rho on every row.
struct GeneratorMatrix {
    // Array-indexed bands: lower[a] multiplies v[a-1], upper[a] multiplies
    // v[a+1]; lower[0] and upper[2n] are zero after folding.
    std::vector<double> lower, diag, upper;
    std::vector<double> f_adjusted;

    int size() const { return static_cast<int>(diag.size()); }
    std::vector<double> apply(std::span<const double> v) const;
    /// (Lv + f_adjusted)(a) for a single array index.
    double residual_row(std::span<const double> v, int a) const;
    SparseMatrix to_sparse() const;
    SparseMatrix negated_sparse() const;
};

GeneratorMatrix build_generator(const GameSpec& spec, const Grid& grid, const BoundaryData& bc);

enum class ImpulseMode { Constrained, Unconstrained };

/// Per-node admissible impulse sets Z(x_i) = {0, h, ..., max_steps(i)*h},
/// with Z(x_i) = {0} for i >= 0. Constrained mode caps the impulse below the
/// mirrored node (2|i|-1 steps); unconstrained mode allows reaching x_N.
struct ImpulseSets {
    ImpulseMode mode = ImpulseMode::Constrained;
    int n = 0;

    int max_steps(int i) const {
        if (i >= 0) return 0;
        return mode == ImpulseMode::Constrained ? -2 * i - 1 : n - i;
    }
    int set_size(int i) const { return max_steps(i) + 1; }
    bool admissible(int i, int steps) const { return steps >= 0 && steps <= max_steps(i); }
};

ImpulseSets make_impulse_sets(const Grid& grid, ImpulseMode mode);

/// Sparse impulse interpolation operator: row i carries the linear
/// interpolation weights of x_i + delta(x_i) onto its neighbouring nodes,
/// clamped to x_{+-N} beyond the grid. Rows are stochastic by construction.
struct ImpulseOperator {
    struct Row {
        int col0 = 0;        // array index
        double w0 = 1.0;
        int col1 = -1;       // second node, -1 when the target is on-node
        double w1 = 0.0;
    };
    std::vector<Row> rows;   // array-indexed

    int size() const { return static_cast<int>(rows.size()); }
    std::vector<double> apply(std::span<const double> v) const;
    double apply_row(std::span<const double> v, int a) const;
    SparseMatrix to_sparse() const;
};

/// General real impulse vector (grid-index order, length 2n+1, nonnegative).
/// Targets within 1e-9 of a node are snapped onto it.
ImpulseOperator build_impulse_operator(const Grid& grid, std::span<const double> delta);
/// On-node impulse vector given as step counts.
ImpulseOperator build_impulse_operator(const Grid& grid, std::span<const int> steps);
/// Validating overload: throws when steps[.] is not admissible under `sets`.
ImpulseOperator build_impulse_operator(const Grid& grid, const ImpulseSets& sets,
                                       std::span<const int> steps);

/// Interpolated value v[[y]] with clamping to the extreme nodes.
double interpolate(const Grid& grid, std::span<const double> v, double y);

/// Strategy phi = (I, delta): intervention mask over the grid (negative nodes
/// only) and per-node impulse step counts.
struct Strategy {
    std::vector<std::uint8_t> intervene;  // array-indexed
    std::vector<int> steps;               // array-indexed

    bool operator==(const Strategy&) const = default;
    std::vector<int> intervention_nodes(const Grid& grid) const;  // grid indices, ascending
};

/// Discrete problem bundle: everything the solvers need about one game on one
/// grid.
struct Discretization {
    GameSpec spec;
    Grid grid;
    BoundaryData bc;
    GeneratorMatrix gen;
    ImpulseSets zsets;

    /// Minimum of c(x_i, delta) over all nodes and admissible impulses.
    /// A nonpositive value does not abort the build; it flags degenerate-game
    /// risk and is surfaced in run reports.
    double min_cost = 0.0;
    bool cost_positive() const { return min_cost > 0.0; }

    double cost_at(int i, int steps) const {
        return spec.cost_shifted(grid.x(i), static_cast<double>(steps) * grid.h);
    }
    double gain_at(int i, int steps) const {
        return spec.gain_shifted(grid.x(i), static_cast<double>(steps) * grid.h);
    }
};

Discretization build_discretization(const GameSpec& spec, const Grid& grid, ImpulseMode mode,
                                    std::optional<BoundaryData> bc_override = std::nullopt);

struct LossResult {
    std::vector<double> m;    // Mv, array-indexed
    std::vector<int> steps;   // delta*(v): the largest maximizing impulse
};

/// Loss operator Mv(x) = max over delta in Z(x) of v[[x+delta]] - c(x, delta),
/// with exact-equality ties broken towards the larger impulse. For x >= 0 the
/// admissible set is {0}, so Mv(x) = v(x) - c(x, 0).
LossResult loss_operator(const Discretization& disc, std::span<const double> v);

/// Gain operator Hv(x) = v[[x - delta*(-x)]] + g(x, delta*(-x)); the gain
/// family receives the magnitude of the opponent's mirrored impulse.
std::vector<double> gain_operator(const Discretization& disc, std::span<const double> v,
                                  std::span<const int> delta_star_steps);

}  // namespace sig

#include "sig/discretization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sig {

Grid build_grid(double x_max, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("build_grid: h must be > 0");
    if (!(x_max > 0.0)) throw std::invalid_argument("build_grid: x_max must be > 0");
    const double ratio = x_max / h;
    const double rounded = std::nearbyint(ratio);
    if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, std::abs(ratio)) || rounded < 1.0) {
        throw std::invalid_argument("build_grid: x_max / h = " + std::to_string(ratio) +
                                    " is not a positive integer");
    }
    return Grid{static_cast<int>(rounded), h};
}

BoundaryData default_boundary(const GameSpec& spec) {
    BoundaryData bc;
    bc.rbc = spec.gain.g1;
    if (spec.cost.affine()) {
        bc.lbc = spec.cost.c1;
    } else {
        bc.lbc = 0.0;
        bc.heuristic = true;
    }
    return bc;
}

std::vector<double> GeneratorMatrix::apply(std::span<const double> v) const {
    const int n = size();
    std::vector<double> y(static_cast<size_t>(n));
    for (int a = 0; a < n; ++a) {
        double acc = diag[static_cast<size_t>(a)] * v[static_cast<size_t>(a)];
        if (a > 0) acc += lower[static_cast<size_t>(a)] * v[static_cast<size_t>(a - 1)];
        if (a + 1 < n) acc += upper[static_cast<size_t>(a)] * v[static_cast<size_t>(a + 1)];
        y[static_cast<size_t>(a)] = acc;
    }
    return y;
}

double GeneratorMatrix::residual_row(std::span<const double> v, int a) const {
    const int n = size();
    double acc = diag[static_cast<size_t>(a)] * v[static_cast<size_t>(a)] + f_adjusted[static_cast<size_t>(a)];
    if (a > 0) acc += lower[static_cast<size_t>(a)] * v[static_cast<size_t>(a - 1)];
    if (a + 1 < n) acc += upper[static_cast<size_t>(a)] * v[static_cast<size_t>(a + 1)];
    return acc;
}

SparseMatrix GeneratorMatrix::to_sparse() const {
    const int n = size();
    SparseMatrix m(n);
    for (int a = 0; a < n; ++a) {
        if (a > 0 && lower[static_cast<size_t>(a)] != 0.0) m.set(a, a - 1, lower[static_cast<size_t>(a)]);
        m.set(a, a, diag[static_cast<size_t>(a)]);
        if (a + 1 < n && upper[static_cast<size_t>(a)] != 0.0) m.set(a, a + 1, upper[static_cast<size_t>(a)]);
    }
    return m;
}

SparseMatrix GeneratorMatrix::negated_sparse() const {
    const int n = size();
    SparseMatrix m(n);
    for (int a = 0; a < n; ++a) {
        if (a > 0 && lower[static_cast<size_t>(a)] != 0.0) m.set(a, a - 1, -lower[static_cast<size_t>(a)]);
        m.set(a, a, -diag[static_cast<size_t>(a)]);
        if (a + 1 < n && upper[static_cast<size_t>(a)] != 0.0) m.set(a, a + 1, -upper[static_cast<size_t>(a)]);
    }
    return m;
}

GeneratorMatrix build_generator(const GameSpec& spec, const Grid& grid, const BoundaryData& bc) {
    const int count = grid.node_count();
    const double h = grid.h;
    const double q = spec.sigma0 * spec.sigma0 / (2.0 * h * h);

    GeneratorMatrix gen;
    gen.lower.assign(static_cast<size_t>(count), 0.0);
    gen.diag.assign(static_cast<size_t>(count), 0.0);
    gen.upper.assign(static_cast<size_t>(count), 0.0);
    gen.f_adjusted.assign(static_cast<size_t>(count), 0.0);

    for (int i = -grid.n; i <= grid.n; ++i) {
        const int a = grid.array_index(i);
        const double mu = spec.drift_shifted(grid.x(i));
        // Upwind first difference: the drift weight joins the neighbour the
        // drift points to, keeping all off-diagonal coefficients nonnegative.
        double lo = q + (mu < 0.0 ? -mu / h : 0.0);
        double up = q + (mu >= 0.0 ? mu / h : 0.0);
        // Assembling the diagonal from the final off-diagonals makes the row
        // sum to exactly -rho up to one rounding.
        double di = -(lo + up + spec.rho);
        double fa = spec.f_shifted(grid.x(i));

        if (i == -grid.n) {
            // Ghost value v(x_{-N} - h) ~ v(x_{-N}) - LBC*h folds the lower
            // weight into the diagonal and the Neumann data into f.
            di += lo;
            fa -= lo * bc.lbc * h;
            lo = 0.0;
        }
        if (i == grid.n) {
            // Ghost value v(x_N + h) ~ v(x_N) + RBC*h.
            di += up;
            fa += up * bc.rbc * h;
            up = 0.0;
        }
        gen.lower[static_cast<size_t>(a)] = lo;
        gen.diag[static_cast<size_t>(a)] = di;
        gen.upper[static_cast<size_t>(a)] = up;
        gen.f_adjusted[static_cast<size_t>(a)] = fa;
    }

    // (A1) must hold by construction for rho > 0; a failure here is an
    // assembly bug, not a data error.
    RowClassification rc = classify_rows(gen.negated_sparse());
    bool positive_coefficients = true;
    for (int a = 0; a < count; ++a) {
        positive_coefficients = positive_coefficients && gen.lower[static_cast<size_t>(a)] >= 0.0 &&
                                gen.upper[static_cast<size_t>(a)] >= 0.0;
    }
    if (!rc.all_sdd() || !positive_coefficients) {
        throw std::logic_error("build_generator: -L is not an SDD L0-matrix");
    }
    return gen;
}

ImpulseSets make_impulse_sets(const Grid& grid, ImpulseMode mode) {
    return ImpulseSets{mode, grid.n};
}

std::vector<double> ImpulseOperator::apply(std::span<const double> v) const {
    std::vector<double> y(rows.size());
    for (size_t a = 0; a < rows.size(); ++a) y[a] = apply_row(v, static_cast<int>(a));
    return y;
}

double ImpulseOperator::apply_row(std::span<const double> v, int a) const {
    const Row& r = rows[static_cast<size_t>(a)];
    double acc = r.w0 * v[static_cast<size_t>(r.col0)];
    if (r.col1 >= 0) acc += r.w1 * v[static_cast<size_t>(r.col1)];
    return acc;
}

SparseMatrix ImpulseOperator::to_sparse() const {
    SparseMatrix m(size());
    for (int a = 0; a < size(); ++a) {
        const Row& r = rows[static_cast<size_t>(a)];
        m.add(a, r.col0, r.w0);
        if (r.col1 >= 0) m.add(a, r.col1, r.w1);
    }
    return m;
}

namespace {

ImpulseOperator::Row interpolation_row(const Grid& grid, int i, double delta) {
    const int count = grid.node_count();
    ImpulseOperator::Row row;
    // Position of the target in grid-index units.
    const double p = static_cast<double>(i) + delta / grid.h;
    const double snapped = std::nearbyint(p);
    if (std::abs(p - snapped) <= 1e-9 * std::max(1.0, std::abs(p))) {
        int k = static_cast<int>(snapped);
        k = std::clamp(k, -grid.n, grid.n);  // no extrapolation
        row.col0 = grid.array_index(k);
        row.w0 = 1.0;
        return row;
    }
    if (p >= static_cast<double>(grid.n)) {
        row.col0 = count - 1;
        row.w0 = 1.0;
        return row;
    }
    if (p <= static_cast<double>(-grid.n)) {
        row.col0 = 0;
        row.w0 = 1.0;
        return row;
    }
    const int k = static_cast<int>(std::floor(p));
    const double beta = p - static_cast<double>(k);
    row.col0 = grid.array_index(k);
    row.w1 = beta;
    row.w0 = 1.0 - beta;  // the pair (1-beta, beta) sums to exactly one
    row.col1 = row.col0 + 1;
    return row;
}

}  // namespace

ImpulseOperator build_impulse_operator(const Grid& grid, std::span<const double> delta) {
    const int count = grid.node_count();
    if (static_cast<int>(delta.size()) != count) {
        throw std::invalid_argument("build_impulse_operator: impulse vector size mismatch");
    }
    ImpulseOperator op;
    op.rows.resize(static_cast<size_t>(count));
    for (int i = -grid.n; i <= grid.n; ++i) {
        const int a = grid.array_index(i);
        op.rows[static_cast<size_t>(a)] = interpolation_row(grid, i, delta[static_cast<size_t>(a)]);
    }
    return op;
}

ImpulseOperator build_impulse_operator(const Grid& grid, std::span<const int> steps) {
    const int count = grid.node_count();
    if (static_cast<int>(steps.size()) != count) {
        throw std::invalid_argument("build_impulse_operator: impulse vector size mismatch");
    }
    ImpulseOperator op;
    op.rows.resize(static_cast<size_t>(count));
    for (int a = 0; a < count; ++a) {
        int target = std::clamp(grid.grid_index(a) + steps[static_cast<size_t>(a)], -grid.n, grid.n);
        op.rows[static_cast<size_t>(a)] = ImpulseOperator::Row{grid.array_index(target), 1.0, -1, 0.0};
    }
    return op;
}

ImpulseOperator build_impulse_operator(const Grid& grid, const ImpulseSets& sets,
                                       std::span<const int> steps) {
    for (int i = -grid.n; i <= grid.n; ++i) {
        const int s = steps[static_cast<size_t>(grid.array_index(i))];
        if (!sets.admissible(i, s)) {
            throw std::invalid_argument("build_impulse_operator: impulse " + std::to_string(s) +
                                        "*h not admissible at node " + std::to_string(i));
        }
    }
    return build_impulse_operator(grid, steps);
}

double interpolate(const Grid& grid, std::span<const double> v, double y) {
    ImpulseOperator::Row row = interpolation_row(grid, 0, y);
    double acc = row.w0 * v[static_cast<size_t>(row.col0)];
    if (row.col1 >= 0) acc += row.w1 * v[static_cast<size_t>(row.col1)];
    return acc;
}

std::vector<int> Strategy::intervention_nodes(const Grid& grid) const {
    std::vector<int> nodes;
    for (int i = -grid.n; i <= grid.n; ++i) {
        if (intervene[static_cast<size_t>(grid.array_index(i))]) nodes.push_back(i);
    }
    return nodes;
}

Discretization build_discretization(const GameSpec& spec, const Grid& grid, ImpulseMode mode,
                                    std::optional<BoundaryData> bc_override) {
    spec.validate();
    Discretization disc;
    disc.spec = spec;
    disc.grid = grid;
    disc.bc = bc_override.value_or(default_boundary(spec));
    disc.gen = build_generator(spec, grid, disc.bc);
    disc.zsets = make_impulse_sets(grid, mode);

    double min_cost = std::numeric_limits<double>::infinity();
    for (int i = -grid.n; i <= grid.n; ++i) {
        for (int s = 0; s <= disc.zsets.max_steps(i); ++s) {
            min_cost = std::min(min_cost, disc.cost_at(i, s));
        }
    }
    disc.min_cost = min_cost;
    return disc;
}

LossResult loss_operator(const Discretization& disc, std::span<const double> v) {
    const Grid& grid = disc.grid;
    const int count = grid.node_count();
    LossResult out;
    out.m.resize(static_cast<size_t>(count));
    out.steps.assign(static_cast<size_t>(count), 0);

    for (int i = -grid.n; i <= grid.n; ++i) {
        const int a = grid.array_index(i);
        const int z_max = disc.zsets.max_steps(i);
        double best = v[static_cast<size_t>(a)] - disc.cost_at(i, 0);
        int best_steps = 0;
        for (int s = 1; s <= z_max; ++s) {
            // Constrained and unconstrained sets never leave the grid, so the
            // target is plain index arithmetic.
            const double value = v[static_cast<size_t>(a + s)] - disc.cost_at(i, s);
            if (value >= best) {  // ties break towards the larger impulse
                best = value;
                best_steps = s;
            }
        }
        out.m[static_cast<size_t>(a)] = best;
        out.steps[static_cast<size_t>(a)] = best_steps;
    }
    return out;
}

std::vector<double> gain_operator(const Discretization& disc, std::span<const double> v,
                                  std::span<const int> delta_star_steps) {
    const Grid& grid = disc.grid;
    const int count = grid.node_count();
    std::vector<double> h(static_cast<size_t>(count));
    for (int i = -grid.n; i <= grid.n; ++i) {
        const int a = grid.array_index(i);
        const int d = delta_star_steps[static_cast<size_t>(grid.array_index(-i))];
        const int target = std::clamp(i - d, -grid.n, grid.n);
        h[static_cast<size_t>(a)] =
            v[static_cast<size_t>(grid.array_index(target))] + disc.gain_at(i, d);
    }
    return h;
}

}  // namespace sig

#include "sig/impulse_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "sig/dense_solve.hpp"

namespace sig {

RestrictedProblem restrict_problem(const Discretization& disc, std::span<const double> w,
                                   std::span<const int> d_grid_nodes) {
    const Grid& grid = disc.grid;
    const int count = grid.node_count();
    if (static_cast<int>(w.size()) != count) {
        throw std::invalid_argument("restrict_problem: w size mismatch");
    }

    RestrictedProblem p;
    p.disc = &disc;
    p.d_nodes.assign(d_grid_nodes.begin(), d_grid_nodes.end());
    std::sort(p.d_nodes.begin(), p.d_nodes.end());
    p.d_nodes.erase(std::unique(p.d_nodes.begin(), p.d_nodes.end()), p.d_nodes.end());
    p.comp_of_array.assign(static_cast<size_t>(count), -1);
    for (size_t r = 0; r < p.d_nodes.size(); ++r) {
        int i = p.d_nodes[r];
        if (i < -grid.n || i > grid.n) {
            throw std::invalid_argument("restrict_problem: node outside grid");
        }
        p.comp_of_array[static_cast<size_t>(grid.array_index(i))] = static_cast<int>(r);
    }
    for (int i = -grid.n; i <= 0; ++i) {
        if (!p.in_d(grid.array_index(i))) {
            throw std::invalid_argument("restrict_problem: D must contain every nonpositive node, missing " +
                                        std::to_string(i));
        }
    }
    p.w.assign(w.begin(), w.end());

    const int m = p.restricted_size();
    p.lt_lower.assign(static_cast<size_t>(m), 0.0);
    p.lt_diag.assign(static_cast<size_t>(m), 0.0);
    p.lt_upper.assign(static_cast<size_t>(m), 0.0);
    p.f_t.assign(static_cast<size_t>(m), 0.0);

    for (int r = 0; r < m; ++r) {
        const int i = p.d_nodes[static_cast<size_t>(r)];
        const int a = grid.array_index(i);
        p.lt_diag[static_cast<size_t>(r)] = disc.gen.diag[static_cast<size_t>(a)];
        p.f_t[static_cast<size_t>(r)] = disc.gen.f_adjusted[static_cast<size_t>(a)];
        const double lo = disc.gen.lower[static_cast<size_t>(a)];
        if (lo != 0.0) {
            if (r > 0 && p.d_nodes[static_cast<size_t>(r - 1)] == i - 1) {
                p.lt_lower[static_cast<size_t>(r)] = lo;
            } else {
                p.f_t[static_cast<size_t>(r)] += lo * w[static_cast<size_t>(a - 1)];
            }
        }
        const double up = disc.gen.upper[static_cast<size_t>(a)];
        if (up != 0.0) {
            if (r + 1 < m && p.d_nodes[static_cast<size_t>(r + 1)] == i + 1) {
                p.lt_upper[static_cast<size_t>(r)] = up;
            } else {
                p.f_t[static_cast<size_t>(r)] += up * w[static_cast<size_t>(a + 1)];
            }
        }
    }
    return p;
}

std::vector<double> tridiagonal_solve(std::span<const double> lower, std::span<const double> diag,
                                      std::span<const double> upper, std::span<const double> rhs) {
    const int n = static_cast<int>(diag.size());
    std::vector<double> c(static_cast<size_t>(n), 0.0);
    std::vector<double> d(static_cast<size_t>(n), 0.0);
    double pivot = diag[0];
    if (pivot == 0.0) throw std::runtime_error("tridiagonal_solve: zero pivot (assumption violation)");
    if (n > 1) c[0] = upper[0] / pivot;
    d[0] = rhs[0] / pivot;
    for (int i = 1; i < n; ++i) {
        pivot = diag[static_cast<size_t>(i)] - lower[static_cast<size_t>(i)] * c[static_cast<size_t>(i - 1)];
        if (pivot == 0.0) throw std::runtime_error("tridiagonal_solve: zero pivot (assumption violation)");
        if (i + 1 < n) c[static_cast<size_t>(i)] = upper[static_cast<size_t>(i)] / pivot;
        d[static_cast<size_t>(i)] =
            (rhs[static_cast<size_t>(i)] - lower[static_cast<size_t>(i)] * d[static_cast<size_t>(i - 1)]) / pivot;
    }
    for (int i = n - 2; i >= 0; --i) {
        d[static_cast<size_t>(i)] -= c[static_cast<size_t>(i)] * d[static_cast<size_t>(i + 1)];
    }
    return d;
}

namespace {

// Loss values and largest arg-max over the restricted domain, evaluated on
// the extended payoff u (= v on D, w outside).
struct RestrictedLoss {
    std::vector<double> m;      // full-grid Mv values (valid on D rows)
    std::vector<int> steps;     // full-grid arg-max steps
};

RestrictedLoss restricted_loss(const RestrictedProblem& p, std::span<const double> u) {
    LossResult full = loss_operator(*p.disc, u);
    return RestrictedLoss{std::move(full.m), std::move(full.steps)};
}

double stop_metric(const RestrictedProblem& p, std::span<const double> v_new,
                   std::span<const double> v_old, const SolverParams& params) {
    const Grid& grid = p.disc->grid;
    double worst = 0.0;
    for (int i : p.d_nodes) {
        const size_t a = static_cast<size_t>(grid.array_index(i));
        const double vn = v_new[a];
        const double den = std::max(params.abs_denominator ? std::abs(vn) : vn, params.scale);
        worst = std::max(worst, std::abs(vn - v_old[a]) / den);
    }
    return worst;
}

Strategy make_policy(const std::vector<std::uint8_t>& intervene, const std::vector<int>& steps) {
    Strategy phi;
    phi.intervene = intervene;
    phi.steps.assign(steps.size(), 0);
    // Only impulses on intervention nodes are part of the policy.
    for (size_t a = 0; a < steps.size(); ++a) {
        if (intervene[a]) phi.steps[a] = steps[a];
    }
    return phi;
}

bool bitwise_equal_on_d(const RestrictedProblem& p, std::span<const double> a,
                        std::span<const double> b) {
    const Grid& grid = p.disc->grid;
    for (int i : p.d_nodes) {
        const size_t idx = static_cast<size_t>(grid.array_index(i));
        if (a[idx] != b[idx]) return false;
    }
    return true;
}

}  // namespace

std::vector<std::uint8_t> improvement_set(const RestrictedProblem& p, std::span<const double> u,
                                          std::span<const double> m, double lambda) {
    const Grid& grid = p.disc->grid;
    std::vector<std::uint8_t> mask(static_cast<size_t>(grid.node_count()), 0);
    for (int i : p.d_nodes) {
        if (i >= 0) continue;  // strategies only intervene below the symmetric point
        const size_t a = static_cast<size_t>(grid.array_index(i));
        const double cont = p.disc->gen.residual_row(u, static_cast<int>(a));
        const double obstacle = lambda * (m[a] - u[a]);
        if (cont <= obstacle) mask[a] = 1;
    }
    return mask;
}

InnerSolveResult solve_fppi(const RestrictedProblem& p, const SolverParams& params) {
    if (!(params.lambda > 0.0)) throw std::invalid_argument("solve_fppi: lambda must be > 0");
    const Grid& grid = p.disc->grid;
    const int m = p.restricted_size();
    const int count = grid.node_count();

    std::vector<double> u = p.w;  // extended iterate; only D entries change
    std::vector<std::uint8_t> intervene(static_cast<size_t>(count), 0);  // I^0 = {}

    std::vector<double> sys_lower(static_cast<size_t>(m)), sys_diag(static_cast<size_t>(m)),
        sys_upper(static_cast<size_t>(m)), sys_rhs(static_cast<size_t>(m));

    InnerSolveResult result;
    std::vector<double> u_prev = u;

    for (int k = 0; k < params.max_inner_iters; ++k) {
        RestrictedLoss loss = restricted_loss(p, u);
        if (params.record_history) {
            result.history.push_back(InnerIterate{u, make_policy(intervene, loss.steps)});
        }

        // Assemble -L^k v = f^k: generator rows outside I^k, identity rows
        // with the frozen obstacle M v^k on I^k. The scaling factor cancels
        // inside the obstacle rows, so it only enters the improvement step.
        for (int r = 0; r < m; ++r) {
            const int i = p.d_nodes[static_cast<size_t>(r)];
            const size_t a = static_cast<size_t>(grid.array_index(i));
            if (intervene[a]) {
                sys_lower[static_cast<size_t>(r)] = 0.0;
                sys_diag[static_cast<size_t>(r)] = 1.0;
                sys_upper[static_cast<size_t>(r)] = 0.0;
                sys_rhs[static_cast<size_t>(r)] = loss.m[a];
            } else {
                sys_lower[static_cast<size_t>(r)] = -p.lt_lower[static_cast<size_t>(r)];
                sys_diag[static_cast<size_t>(r)] = -p.lt_diag[static_cast<size_t>(r)];
                sys_upper[static_cast<size_t>(r)] = -p.lt_upper[static_cast<size_t>(r)];
                sys_rhs[static_cast<size_t>(r)] = p.f_t[static_cast<size_t>(r)];
            }
        }
        std::vector<double> v_comp = tridiagonal_solve(sys_lower, sys_diag, sys_upper, sys_rhs);
        u_prev = u;
        for (int r = 0; r < m; ++r) {
            u[static_cast<size_t>(grid.array_index(p.d_nodes[static_cast<size_t>(r)]))] =
                v_comp[static_cast<size_t>(r)];
        }
        result.iterations = k + 1;

        RestrictedLoss loss_new = restricted_loss(p, u);
        std::vector<std::uint8_t> next = improvement_set(p, u, loss_new.m, params.lambda);

        const bool same_set = next == intervene;
        if (same_set && bitwise_equal_on_d(p, u, u_prev)) {
            result.exact = true;
            intervene = std::move(next);
            break;
        }
        const double diff = stop_metric(p, u, u_prev, params);
        intervene = std::move(next);
        if (k >= 1 && diff < params.inner_tol) break;
        if (k + 1 == params.max_inner_iters) result.converged = false;
    }

    RestrictedLoss final_loss = restricted_loss(p, u);
    result.v = std::move(u);
    result.strategy.intervene = intervene;
    result.strategy.steps = final_loss.steps;
    return result;
}

namespace {

// Dense policy evaluation for Howard and the brute-force oracle: rows of -L
// outside I, rows of Id - B(delta) with cost right-hand side on I. Returns
// nullopt when the policy matrix is singular.
std::optional<std::vector<double>> evaluate_policy(const RestrictedProblem& p,
                                                   const std::vector<std::uint8_t>& intervene,
                                                   const std::vector<int>& steps) {
    const Grid& grid = p.disc->grid;
    const int m = p.restricted_size();
    std::vector<double> mat(static_cast<size_t>(m) * static_cast<size_t>(m), 0.0);
    std::vector<double> rhs(static_cast<size_t>(m), 0.0);
    auto at = [&](int r, int c) -> double& {
        return mat[static_cast<size_t>(r) * static_cast<size_t>(m) + static_cast<size_t>(c)];
    };
    for (int r = 0; r < m; ++r) {
        const int i = p.d_nodes[static_cast<size_t>(r)];
        const size_t a = static_cast<size_t>(grid.array_index(i));
        if (intervene[a]) {
            at(r, r) += 1.0;
            const int target = i + steps[a];
            const int tc = p.comp_of_array[static_cast<size_t>(grid.array_index(target))];
            double cost = p.disc->cost_at(i, steps[a]);
            if (tc >= 0) {
                at(r, tc) -= 1.0;
            } else {
                rhs[static_cast<size_t>(r)] += p.w[static_cast<size_t>(grid.array_index(target))];
            }
            rhs[static_cast<size_t>(r)] -= cost;
        } else {
            if (p.lt_lower[static_cast<size_t>(r)] != 0.0) at(r, r - 1) = -p.lt_lower[static_cast<size_t>(r)];
            at(r, r) = -p.lt_diag[static_cast<size_t>(r)];
            if (p.lt_upper[static_cast<size_t>(r)] != 0.0) at(r, r + 1) = -p.lt_upper[static_cast<size_t>(r)];
            rhs[static_cast<size_t>(r)] = p.f_t[static_cast<size_t>(r)];
        }
    }
    return dense_solve(std::move(mat), std::move(rhs), m);
}

std::vector<double> extend(const RestrictedProblem& p, const std::vector<double>& v_comp) {
    std::vector<double> u = p.w;
    const Grid& grid = p.disc->grid;
    for (int r = 0; r < p.restricted_size(); ++r) {
        u[static_cast<size_t>(grid.array_index(p.d_nodes[static_cast<size_t>(r)]))] =
            v_comp[static_cast<size_t>(r)];
    }
    return u;
}

}  // namespace

InnerSolveResult solve_howard(const RestrictedProblem& p, const SolverParams& params) {
    if (!(params.lambda > 0.0)) throw std::invalid_argument("solve_howard: lambda must be > 0");
    const Grid& grid = p.disc->grid;
    const int count = grid.node_count();

    std::vector<std::uint8_t> intervene(static_cast<size_t>(count), 0);
    std::vector<int> steps(static_cast<size_t>(count), 0);
    std::vector<double> u = p.w;
    InnerSolveResult result;

    for (int k = 0; k < params.max_inner_iters; ++k) {
        if (params.record_history) {
            result.history.push_back(InnerIterate{u, make_policy(intervene, steps)});
        }
        auto solved = evaluate_policy(p, intervene, steps);
        if (!solved) {
            throw std::runtime_error("solve_howard: singular policy matrix (assumption violation)");
        }
        std::vector<double> u_new = extend(p, *solved);
        result.iterations = k + 1;

        // Policy improvement. The zero impulse is excluded from the
        // intervention branch: with positive costs it is dominated by waiting
        // and would produce a null policy row.
        std::vector<std::uint8_t> next_intervene(static_cast<size_t>(count), 0);
        std::vector<int> next_steps(static_cast<size_t>(count), 0);
        for (int i : p.d_nodes) {
            if (i >= 0) continue;
            const size_t a = static_cast<size_t>(grid.array_index(i));
            const double cont = p.disc->gen.residual_row(u_new, static_cast<int>(a));
            double best = -std::numeric_limits<double>::infinity();
            int best_steps = 0;
            for (int s = 1; s <= p.disc->zsets.max_steps(i); ++s) {
                const double value =
                    u_new[static_cast<size_t>(a) + static_cast<size_t>(s)] - p.disc->cost_at(i, s);
                if (value >= best) {
                    best = value;
                    best_steps = s;
                }
            }
            if (best_steps == 0) continue;  // no admissible positive impulse
            const double obstacle = params.lambda * (best - u_new[a]);
            if (cont <= obstacle) {
                next_intervene[a] = 1;
                next_steps[a] = best_steps;
            }
        }

        const bool policy_repeat =
            next_intervene == intervene && make_policy(next_intervene, next_steps).steps ==
                                               make_policy(intervene, steps).steps;
        const double diff = stop_metric(p, u_new, u, params);
        u = std::move(u_new);
        intervene = std::move(next_intervene);
        steps = std::move(next_steps);
        if (policy_repeat) {
            result.exact = true;
            break;
        }
        if (k >= 1 && diff < params.inner_tol) break;
        if (k + 1 == params.max_inner_iters) result.converged = false;
    }

    RestrictedLoss final_loss = restricted_loss(p, u);
    result.strategy.intervene = improvement_set(p, u, final_loss.m, params.lambda);
    result.strategy.steps = final_loss.steps;
    result.v = std::move(u);
    return result;
}

std::vector<double> solve_brute_force(const RestrictedProblem& p, double residual_tol,
                                      long long policy_budget) {
    const Grid& grid = p.disc->grid;

    std::vector<int> choice_nodes;  // nodes that may intervene
    long long combinations = 1;
    for (int i : p.d_nodes) {
        if (i >= 0) continue;
        choice_nodes.push_back(i);
        const long long options = 2 + p.disc->zsets.max_steps(i);  // continuation or any impulse
        if (combinations > policy_budget / options) {
            throw std::runtime_error("solve_brute_force: enumeration budget exceeded");
        }
        combinations *= options;
    }

    const int count = grid.node_count();
    std::vector<int> odometer(choice_nodes.size(), 0);  // 0 = continue, 1+s = intervene with s steps
    std::vector<std::uint8_t> intervene(static_cast<size_t>(count), 0);
    std::vector<int> steps(static_cast<size_t>(count), 0);

    while (true) {
        for (size_t c = 0; c < choice_nodes.size(); ++c) {
            const size_t a = static_cast<size_t>(grid.array_index(choice_nodes[c]));
            if (odometer[c] == 0) {
                intervene[a] = 0;
                steps[a] = 0;
            } else {
                intervene[a] = 1;
                steps[a] = odometer[c] - 1;
            }
        }
        // A policy with a zero impulse on an intervention node yields a null
        // row; evaluate_policy reports it singular and the policy is skipped.
        if (auto solved = evaluate_policy(p, intervene, steps)) {
            std::vector<double> u = extend(p, *solved);
            LossResult loss = loss_operator(*p.disc, u);
            double residual = 0.0;
            for (int i : p.d_nodes) {
                const size_t a = static_cast<size_t>(grid.array_index(i));
                const double row = std::max(p.disc->gen.residual_row(u, static_cast<int>(a)),
                                            loss.m[a] - u[a]);
                residual = std::max(residual, std::abs(row));
            }
            if (residual <= residual_tol) return u;
        }
        // Advance the odometer.
        size_t c = 0;
        for (; c < choice_nodes.size(); ++c) {
            const int limit = 1 + p.disc->zsets.max_steps(choice_nodes[c]);
            if (odometer[c] < limit) {
                ++odometer[c];
                break;
            }
            odometer[c] = 0;
        }
        if (c == choice_nodes.size()) break;
    }
    throw std::runtime_error("solve_brute_force: no policy satisfied the QVI residual");
}

}  // namespace sig

#include "sig/matrix_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace sig {

SparseMatrix SparseMatrix::identity(int n) {
    SparseMatrix m(n);
    for (int i = 0; i < n; ++i) m.set(i, i, 1.0);
    return m;
}

void SparseMatrix::set(int row, int col, double value) {
    auto& r = rows_[static_cast<size_t>(row)];
    auto it = std::lower_bound(r.begin(), r.end(), col,
                               [](const SparseEntry& e, int c) { return e.col < c; });
    if (it != r.end() && it->col == col) {
        it->value = value;
    } else {
        r.insert(it, SparseEntry{col, value});
    }
}

void SparseMatrix::add(int row, int col, double value) {
    auto& r = rows_[static_cast<size_t>(row)];
    auto it = std::lower_bound(r.begin(), r.end(), col,
                               [](const SparseEntry& e, int c) { return e.col < c; });
    if (it != r.end() && it->col == col) {
        it->value += value;
    } else {
        r.insert(it, SparseEntry{col, value});
    }
}

double SparseMatrix::get(int row, int col) const {
    const auto& r = rows_[static_cast<size_t>(row)];
    auto it = std::lower_bound(r.begin(), r.end(), col,
                               [](const SparseEntry& e, int c) { return e.col < c; });
    if (it != r.end() && it->col == col) return it->value;
    return 0.0;
}

long long SparseMatrix::nonzeros() const {
    long long n = 0;
    for (const auto& r : rows_) n += static_cast<long long>(r.size());
    return n;
}

std::vector<double> SparseMatrix::apply(std::span<const double> x) const {
    std::vector<double> y(static_cast<size_t>(n_), 0.0);
    for (int i = 0; i < n_; ++i) {
        double acc = 0.0;
        for (const auto& e : rows_[static_cast<size_t>(i)]) acc += e.value * x[static_cast<size_t>(e.col)];
        y[static_cast<size_t>(i)] = acc;
    }
    return y;
}

void SparseMatrix::row_dominance(int i, double& abs_diag, double& off_sum) const {
    abs_diag = 0.0;
    off_sum = 0.0;
    for (const auto& e : rows_[static_cast<size_t>(i)]) {
        if (e.col == i) {
            abs_diag = std::abs(e.value);
        } else {
            off_sum += std::abs(e.value);
        }
    }
}

double SparseMatrix::row_sum(int i) const {
    double s = 0.0;
    for (const auto& e : rows_[static_cast<size_t>(i)]) s += e.value;
    return s;
}

std::vector<double> SparseMatrix::to_dense() const {
    std::vector<double> d(static_cast<size_t>(n_) * static_cast<size_t>(n_), 0.0);
    for (int i = 0; i < n_; ++i) {
        for (const auto& e : rows_[static_cast<size_t>(i)]) {
            d[static_cast<size_t>(i) * static_cast<size_t>(n_) + static_cast<size_t>(e.col)] = e.value;
        }
    }
    return d;
}

SparseMatrix SparseMatrix::from_dense(std::span<const double> dense, int n, double drop_below) {
    SparseMatrix m(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double v = dense[static_cast<size_t>(i) * static_cast<size_t>(n) + static_cast<size_t>(j)];
            if (std::abs(v) > drop_below) m.set(i, j, v);
        }
    }
    return m;
}

SparseMatrix operator-(const SparseMatrix& a, const SparseMatrix& b) {
    SparseMatrix m = a;
    for (int i = 0; i < b.size(); ++i) {
        for (const auto& e : b.row(i)) m.add(i, e.col, -e.value);
    }
    return m;
}

bool RowClassification::all_sdd() const {
    return std::all_of(rows.begin(), rows.end(),
                       [](RowDominance d) { return d == RowDominance::SDD; });
}

RowClassification classify_rows(const SparseMatrix& a, double tolerance) {
    RowClassification rc;
    rc.rows.resize(static_cast<size_t>(a.size()));
    for (int i = 0; i < a.size(); ++i) {
        double diag = 0.0, off = 0.0;
        a.row_dominance(i, diag, off);
        RowDominance d;
        if (diag > off + tolerance) {
            d = RowDominance::SDD;
        } else if (diag >= off - tolerance) {
            d = RowDominance::WDDOnly;
        } else {
            d = RowDominance::NotWDD;
        }
        rc.rows[static_cast<size_t>(i)] = d;
        rc.all_wdd = rc.all_wdd && d != RowDominance::NotWDD;
        rc.any_sdd = rc.any_sdd || d == RowDominance::SDD;
    }
    return rc;
}

ConnectivityReport index_of_connectivity(const SparseMatrix& a, double tolerance) {
    const int n = a.size();
    RowClassification rc = classify_rows(a, tolerance);

    ConnectivityReport report;
    report.wdd = rc.all_wdd;
    report.distance.assign(static_cast<size_t>(n), kInfiniteIndex);

    // Reverse adjacency over graph edges (i, j), ignoring self-loops.
    std::vector<std::vector<int>> rev(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (const auto& e : a.row(i)) {
            if (e.col != i && e.value != 0.0) rev[static_cast<size_t>(e.col)].push_back(i);
        }
    }

    std::deque<int> queue;
    for (int i = 0; i < n; ++i) {
        if (rc.rows[static_cast<size_t>(i)] == RowDominance::SDD) {
            report.distance[static_cast<size_t>(i)] = 0;
            queue.push_back(i);
        }
    }
    while (!queue.empty()) {
        int u = queue.front();
        queue.pop_front();
        for (int p : rev[static_cast<size_t>(u)]) {
            if (report.distance[static_cast<size_t>(p)] == kInfiniteIndex) {
                report.distance[static_cast<size_t>(p)] = report.distance[static_cast<size_t>(u)] + 1;
                queue.push_back(p);
            }
        }
    }

    // sup over non-SDD rows, with sup(empty) = -inf and positive part = 0.
    int worst = 0;
    for (int i = 0; i < n; ++i) {
        if (rc.rows[static_cast<size_t>(i)] == RowDominance::SDD) continue;
        int d = report.distance[static_cast<size_t>(i)];
        worst = (d == kInfiniteIndex) ? kInfiniteIndex : std::max(worst, d);
        if (worst == kInfiniteIndex) break;
    }
    report.con = worst;
    return report;
}

bool is_wcdd(const SparseMatrix& a, double tolerance) {
    ConnectivityReport r = index_of_connectivity(a, tolerance);
    return r.wcdd();
}

bool is_substochastic(const SparseMatrix& a, double tolerance) {
    for (int i = 0; i < a.size(); ++i) {
        for (const auto& e : a.row(i)) {
            if (e.value < 0.0) return false;
        }
        if (a.row_sum(i) > 1.0 + tolerance) return false;
    }
    return true;
}

ConnectivityReport index_of_contraction(const SparseMatrix& a, double tolerance) {
    for (int i = 0; i < a.size(); ++i) {
        for (const auto& e : a.row(i)) {
            if (e.value < 0.0) throw std::invalid_argument("index_of_contraction: negative entry");
        }
    }
    SparseMatrix m = SparseMatrix::identity(a.size()) - a;
    return index_of_connectivity(m, tolerance);
}

namespace {

// Shared layered walk for the sequential indices. `target(t, i)` says whether
// row i resolves a walk of length t; `edge_graph(t)` is the matrix whose graph
// (self-loops included) provides the edges of step t+1.
template <typename TargetFn>
int sequential_index(std::span<const SparseMatrix> seq, TargetFn target) {
    if (seq.empty()) throw std::invalid_argument("sequential index: empty sequence");
    const int n = seq[0].size();
    const int len = static_cast<int>(seq.size());
    for (const auto& m : seq) {
        if (m.size() != n) throw std::invalid_argument("sequential index: dimension mismatch");
    }

    // reach[i] = extra steps needed from (i, t); backward induction over t.
    std::vector<int> reach(static_cast<size_t>(n), kInfiniteIndex);
    for (int t = len - 1; t >= 0; --t) {
        std::vector<int> next(static_cast<size_t>(n), kInfiniteIndex);
        for (int i = 0; i < n; ++i) {
            if (target(t, i)) {
                next[static_cast<size_t>(i)] = 0;
                continue;
            }
            if (t == len - 1) continue;  // no further matrices to walk along
            int best = kInfiniteIndex;
            for (const auto& e : seq[static_cast<size_t>(t)].row(i)) {
                if (e.value == 0.0) continue;
                int r = reach[static_cast<size_t>(e.col)];
                if (r != kInfiniteIndex) best = std::min(best, r + 1);
            }
            next[static_cast<size_t>(i)] = best;
        }
        reach = std::move(next);
    }

    int worst = 0;
    for (int i = 0; i < n; ++i) {
        if (target(0, i)) continue;
        int r = reach[static_cast<size_t>(i)];
        if (r == kInfiniteIndex) return kInfiniteIndex;
        worst = std::max(worst, r);
    }
    return worst;
}

}  // namespace

int sequential_index_of_connectivity(std::span<const SparseMatrix> ms, double tolerance) {
    std::vector<RowClassification> cls;
    cls.reserve(ms.size());
    for (const auto& m : ms) cls.push_back(classify_rows(m, tolerance));
    return sequential_index(ms, [&](int t, int i) {
        return cls[static_cast<size_t>(t)].rows[static_cast<size_t>(i)] == RowDominance::SDD;
    });
}

int sequential_index_of_contraction(std::span<const SparseMatrix> as, double tolerance) {
    for (const auto& a : as) {
        if (!is_substochastic(a)) {
            throw std::invalid_argument("sequential_index_of_contraction: input not substochastic");
        }
    }
    std::vector<std::vector<std::uint8_t>> deficit;
    deficit.reserve(as.size());
    for (const auto& a : as) {
        std::vector<std::uint8_t> d(static_cast<size_t>(a.size()), 0);
        for (int i = 0; i < a.size(); ++i) {
            d[static_cast<size_t>(i)] = a.row_sum(i) < 1.0 - tolerance ? 1 : 0;
        }
        deficit.push_back(std::move(d));
    }
    return sequential_index(as, [&](int t, int i) {
        return deficit[static_cast<size_t>(t)][static_cast<size_t>(i)] != 0;
    });
}

bool walks_leave_set(const SparseMatrix& a, const std::vector<std::uint8_t>& sources) {
    std::vector<std::uint8_t> targets(sources.size());
    for (size_t i = 0; i < sources.size(); ++i) targets[i] = sources[i] ? 0 : 1;
    return walks_reach_set(a, sources, targets);
}

bool walks_reach_set(const SparseMatrix& a, const std::vector<std::uint8_t>& sources,
                     const std::vector<std::uint8_t>& targets) {
    const int n = a.size();
    // Reverse BFS from the targets; every source must be marked reachable.
    std::vector<std::vector<int>> rev(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (const auto& e : a.row(i)) {
            if (e.value != 0.0 && e.col != i) rev[static_cast<size_t>(e.col)].push_back(i);
        }
    }
    std::vector<std::uint8_t> seen(static_cast<size_t>(n), 0);
    std::deque<int> queue;
    for (int i = 0; i < n; ++i) {
        if (targets[static_cast<size_t>(i)]) {
            seen[static_cast<size_t>(i)] = 1;
            queue.push_back(i);
        }
    }
    while (!queue.empty()) {
        int u = queue.front();
        queue.pop_front();
        for (int p : rev[static_cast<size_t>(u)]) {
            if (!seen[static_cast<size_t>(p)]) {
                seen[static_cast<size_t>(p)] = 1;
                queue.push_back(p);
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        if (sources[static_cast<size_t>(i)] && !seen[static_cast<size_t>(i)]) return false;
    }
    return true;
}

}  // namespace sig

#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace sig {

struct SparseEntry {
    int col;
    double value;
};

/// Row-oriented sparse matrix. Column indices are kept sorted and unique per
/// row; explicit zeros are allowed (they carry no graph edge).
class SparseMatrix {
public:
    SparseMatrix() = default;
    explicit SparseMatrix(int n) : n_(n), rows_(static_cast<size_t>(n)) {}

    static SparseMatrix identity(int n);

    int size() const { return n_; }

    /// Insert or overwrite a single entry.
    void set(int row, int col, double value);
    /// Add to an entry, inserting it if absent.
    void add(int row, int col, double value);
    double get(int row, int col) const;

    std::span<const SparseEntry> row(int i) const { return rows_[static_cast<size_t>(i)]; }

    /// Number of stored entries.
    long long nonzeros() const;

    std::vector<double> apply(std::span<const double> x) const;

    /// Row sum of absolute off-diagonal values and the absolute diagonal.
    void row_dominance(int i, double& abs_diag, double& off_sum) const;
    /// Plain row sum (for substochastic checks).
    double row_sum(int i) const;

    /// Dense copy, row-major.
    std::vector<double> to_dense() const;
    static SparseMatrix from_dense(std::span<const double> dense, int n, double drop_below = 0.0);

    friend SparseMatrix operator-(const SparseMatrix& a, const SparseMatrix& b);

private:
    int n_ = 0;
    std::vector<std::vector<SparseEntry>> rows_;
};

enum class RowDominance : std::uint8_t { SDD, WDDOnly, NotWDD };

struct RowClassification {
    std::vector<RowDominance> rows;
    bool all_wdd = true;
    bool any_sdd = false;

    bool all_sdd() const;
};

/// Exact |diag| vs off-diagonal absolute row sum comparison. A nonzero
/// tolerance relaxes both comparisons by `tolerance` in absolute terms.
RowClassification classify_rows(const SparseMatrix& a, double tolerance = 0.0);

inline constexpr int kInfiniteIndex = std::numeric_limits<int>::max();

struct ConnectivityReport {
    /// Index of connectivity; kInfiniteIndex when some non-SDD row cannot
    /// reach an SDD row, 0 when every row is SDD (positive part convention).
    int con = 0;
    /// Per-row walk distance to the nearest SDD row (0 for SDD rows).
    std::vector<int> distance;
    bool wdd = true;
    bool wcdd() const { return wdd && con != kInfiniteIndex; }
};

/// Multi-source BFS from the SDD rows along reversed graph edges. Runs in
/// time linear in the number of stored entries. Self-loops are skipped; they
/// never shorten a walk to another row.
ConnectivityReport index_of_connectivity(const SparseMatrix& a, double tolerance = 0.0);

bool is_wcdd(const SparseMatrix& a, double tolerance = 0.0);

/// Default slack for floating row sums of stochastic rows: 4 ulps at 1.
inline constexpr double kSubstochasticSlack = 4.0 * 2.220446049250313e-16;

/// A >= 0 and row sums <= 1 + tolerance.
bool is_substochastic(const SparseMatrix& a, double tolerance = kSubstochasticSlack);

/// Index of contraction of a substochastic matrix, computed as the index of
/// connectivity of Id - A. Throws on negative entries.
ConnectivityReport index_of_contraction(const SparseMatrix& a, double tolerance = 0.0);

/// Sequential index of connectivity of (M_1, M_2, ...): the worst over rows
/// of the shortest walk i -> i_1 -> ... -> i_l where step t uses an edge of
/// graph(M_t) (self-loops included) and i_l is an SDD row of M_{l+1}; rows
/// SDD in M_1 count as resolved at length 0. Returns kInfiniteIndex when some
/// row stays unresolved within the given finite sequence.
int sequential_index_of_connectivity(std::span<const SparseMatrix> ms, double tolerance = 0.0);

/// Substochastic counterpart: targets are rows with sum < 1 - tolerance and
/// edges come from graph(A_t) itself. For substochastic inputs this equals
/// inf{ k : ||A_1 ... A_{k+1}||_inf < 1 } within the sequence length.
int sequential_index_of_contraction(std::span<const SparseMatrix> as, double tolerance = 0.0);

/// (A0)-style reachability: from every row flagged in `sources` there is a
/// walk in graph(a) to some row outside `sources`.
bool walks_leave_set(const SparseMatrix& a, const std::vector<std::uint8_t>& sources);

/// (A0')-style reachability: from every row flagged in `sources` there is a
/// walk in graph(a) to some row flagged in `targets`.
bool walks_reach_set(const SparseMatrix& a, const std::vector<std::uint8_t>& sources,
                     const std::vector<std::uint8_t>& targets);

}  // namespace sig

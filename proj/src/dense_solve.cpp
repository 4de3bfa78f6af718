#include "sig/dense_solve.hpp"

#include <cmath>
#include <numeric>

namespace sig {

namespace {

struct Lu {
    std::vector<double> a;  // packed LU factors
    std::vector<int> perm;
    int n;
};

std::optional<Lu> factor(std::vector<double> a, int n) {
    Lu lu{std::move(a), std::vector<int>(static_cast<size_t>(n)), n};
    std::iota(lu.perm.begin(), lu.perm.end(), 0);
    auto at = [&](int i, int j) -> double& {
        return lu.a[static_cast<size_t>(i) * static_cast<size_t>(n) + static_cast<size_t>(j)];
    };
    for (int k = 0; k < n; ++k) {
        int piv = k;
        double best = std::abs(at(k, k));
        for (int i = k + 1; i < n; ++i) {
            double v = std::abs(at(i, k));
            if (v > best) {
                best = v;
                piv = i;
            }
        }
        if (best == 0.0) return std::nullopt;
        if (piv != k) {
            for (int j = 0; j < n; ++j) std::swap(at(k, j), at(piv, j));
            std::swap(lu.perm[static_cast<size_t>(k)], lu.perm[static_cast<size_t>(piv)]);
        }
        for (int i = k + 1; i < n; ++i) {
            double m = at(i, k) / at(k, k);
            at(i, k) = m;
            if (m == 0.0) continue;
            for (int j = k + 1; j < n; ++j) at(i, j) -= m * at(k, j);
        }
    }
    return lu;
}

std::vector<double> lu_solve(const Lu& lu, std::span<const double> rhs) {
    const int n = lu.n;
    auto at = [&](int i, int j) {
        return lu.a[static_cast<size_t>(i) * static_cast<size_t>(n) + static_cast<size_t>(j)];
    };
    std::vector<double> x(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) x[static_cast<size_t>(i)] = rhs[static_cast<size_t>(lu.perm[static_cast<size_t>(i)])];
    for (int i = 1; i < n; ++i) {
        double acc = x[static_cast<size_t>(i)];
        for (int j = 0; j < i; ++j) acc -= at(i, j) * x[static_cast<size_t>(j)];
        x[static_cast<size_t>(i)] = acc;
    }
    for (int i = n - 1; i >= 0; --i) {
        double acc = x[static_cast<size_t>(i)];
        for (int j = i + 1; j < n; ++j) acc -= at(i, j) * x[static_cast<size_t>(j)];
        x[static_cast<size_t>(i)] = acc / at(i, i);
    }
    return x;
}

}  // namespace

std::optional<std::vector<double>> dense_solve(std::vector<double> a, std::vector<double> rhs, int n) {
    auto lu = factor(std::move(a), n);
    if (!lu) return std::nullopt;
    return lu_solve(*lu, rhs);
}

std::optional<std::vector<double>> dense_inverse(std::span<const double> a, int n) {
    auto lu = factor(std::vector<double>(a.begin(), a.end()), n);
    if (!lu) return std::nullopt;
    std::vector<double> inv(static_cast<size_t>(n) * static_cast<size_t>(n));
    std::vector<double> e(static_cast<size_t>(n), 0.0);
    for (int j = 0; j < n; ++j) {
        e[static_cast<size_t>(j)] = 1.0;
        std::vector<double> col = lu_solve(*lu, e);
        e[static_cast<size_t>(j)] = 0.0;
        for (int i = 0; i < n; ++i) {
            inv[static_cast<size_t>(i) * static_cast<size_t>(n) + static_cast<size_t>(j)] = col[static_cast<size_t>(i)];
        }
    }
    return inv;
}

}  // namespace sig

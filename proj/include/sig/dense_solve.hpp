#pragma once

#include <optional>
#include <span>
#include <vector>

namespace sig {

/// Dense n-by-n solver with partial pivoting, for the small policy-evaluation
/// and verification systems (hundreds of unknowns at most). Returns nullopt
/// when a pivot vanishes (singular system).
std::optional<std::vector<double>> dense_solve(std::vector<double> a, std::vector<double> rhs, int n);

/// Dense inverse via repeated solves; nullopt on singular input.
std::optional<std::vector<double>> dense_inverse(std::span<const double> a, int n);

}  // namespace sig

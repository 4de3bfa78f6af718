#pragma once

#include <vector>

namespace sig {

/// Running payoff family: f(x) = sum_k poly[k] * (x-s)^k + abs_coeff * |x-s|.
struct PayoffFamily {
    std::vector<double> poly_coeffs;
    double abs_coeff = 0.0;

    /// Evaluate at the shifted coordinate xs = x - s.
    double eval_shifted(double xs) const;
};

/// Intervention cost: c(x, d) = c0 + c1*d + c2*d^2 + c_sqrt*sqrt(d), d >= 0.
struct CostFamily {
    double c0 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    double c_sqrt = 0.0;

    double eval(double delta) const;

    /// True when the family is affine in the impulse (c2 = c_sqrt = 0), in
    /// which case the Neumann boundary value LBC = c1 is exact.
    bool affine() const { return c2 == 0.0 && c_sqrt == 0.0; }

    /// Sufficient positivity shortcut: c >= c0 > 0 whenever all slopes are
    /// nonnegative. Otherwise positivity has to be checked per grid.
    bool trivially_positive() const {
        return c0 > 0.0 && c1 >= 0.0 && c2 >= 0.0 && c_sqrt >= 0.0;
    }
};

/// Gain caused by the opponent's impulse of magnitude d >= 0: g(x, d) = g0 + g1*d.
struct GainFamily {
    double g0 = 0.0;
    double g1 = 0.0;

    double eval(double d) const { return g0 + g1 * d; }
};

/// Parametric description of a symmetric two-player impulse game.
///
/// The state follows dX = mu(X) dt + sigma0 dW between interventions, with
/// mu(x) = -kappa * (x - s). All families are expressed in the coordinate
/// shifted by the symmetry line s, so the numerical core always works on a
/// game symmetric about zero and results are shifted back on output.
struct GameSpec {
    double drift_kappa = 0.0;
    double sigma0 = 1.0;
    double rho = 1.0;
    PayoffFamily running_payoff;
    CostFamily cost;
    GainFamily gain;
    double symmetry_line = 0.0;

    /// Throws std::invalid_argument on rho <= 0, sigma0 <= 0, kappa < 0 or
    /// non-finite parameters.
    void validate() const;

    // Shifted-coordinate evaluations (xs = x - s). The cost and gain families
    // are state-independent; the coordinate is kept in the signature so the
    // call sites read like the operators they implement.
    double drift_shifted(double xs) const { return -drift_kappa * xs; }
    double f_shifted(double xs) const { return running_payoff.eval_shifted(xs); }
    double cost_shifted(double, double delta) const { return cost.eval(delta); }
    double gain_shifted(double, double d) const { return gain.eval(d); }
};

// Unshifted evaluations at a real-world point x.
double eval_drift(const GameSpec& spec, double x);
double eval_f(const GameSpec& spec, double x);
double eval_cost(const GameSpec& spec, double x, double delta);
double eval_gain(const GameSpec& spec, double x, double d);

}  // namespace sig

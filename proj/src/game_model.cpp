#include "sig/game_model.hpp"

#include <cmath>
#include <stdexcept>

namespace sig {

double PayoffFamily::eval_shifted(double xs) const {
    // Horner evaluation, highest degree first.
    double p = 0.0;
    for (auto it = poly_coeffs.rbegin(); it != poly_coeffs.rend(); ++it) {
        p = p * xs + *it;
    }
    return p + abs_coeff * std::abs(xs);
}

double CostFamily::eval(double delta) const {
    return c0 + c1 * delta + c2 * delta * delta + c_sqrt * std::sqrt(delta);
}

void GameSpec::validate() const {
    if (!(rho > 0.0)) {
        throw std::invalid_argument("GameSpec: discount rate rho must be > 0");
    }
    if (!(sigma0 > 0.0)) {
        throw std::invalid_argument("GameSpec: volatility sigma0 must be > 0");
    }
    if (!(drift_kappa >= 0.0)) {
        throw std::invalid_argument("GameSpec: drift_kappa must be >= 0");
    }
    if (!std::isfinite(symmetry_line)) {
        throw std::invalid_argument("GameSpec: symmetry_line must be finite");
    }
    for (double c : running_payoff.poly_coeffs) {
        if (!std::isfinite(c)) {
            throw std::invalid_argument("GameSpec: non-finite payoff coefficient");
        }
    }
    for (double c : {running_payoff.abs_coeff, cost.c0, cost.c1, cost.c2,
                     cost.c_sqrt, gain.g0, gain.g1}) {
        if (!std::isfinite(c)) {
            throw std::invalid_argument("GameSpec: non-finite family coefficient");
        }
    }
}

double eval_drift(const GameSpec& spec, double x) {
    return spec.drift_shifted(x - spec.symmetry_line);
}

double eval_f(const GameSpec& spec, double x) {
    return spec.f_shifted(x - spec.symmetry_line);
}

double eval_cost(const GameSpec& spec, double x, double delta) {
    return spec.cost_shifted(x - spec.symmetry_line, delta);
}

double eval_gain(const GameSpec& spec, double x, double d) {
    return spec.gain_shifted(x - spec.symmetry_line, d);
}

}  // namespace sig

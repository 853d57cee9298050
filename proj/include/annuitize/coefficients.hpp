#ifndef ANNUITIZE_COEFFICIENTS_HPP
#define ANNUITIZE_COEFFICIENTS_HPP

#include <cmath>
#include <tuple>
#include <utility>

#include "annuitize/params.hpp"

namespace annuitize {

/// Health-state index.
enum class HealthState { low, high };

/**
 * Scalar coefficients of one health state.
 *
 *   r          effective discount rate rho + mu + lambda
 *   delta      money's worth of the annuity (subjective value / market price)
 *   beta       fund index: (alpha + nu*mu) / (r + alpha - theta)
 *   gamma_plus/minus  characteristic exponents, roots of
 *                     (sigma^2/2) g (g-1) + (theta-alpha) g = r
 */
struct StateCoefficients {
    double mu = 0;
    double lambda = 0;
    double r = 0;
    double delta = 0;
    double beta = 0;
    double gamma_plus = 0;
    double gamma_minus = 0;
};

/**
 * All derived scalars of the two-state model, computed eagerly so that the
 * solvers and the verification oracles share one value object.
 */
struct DerivedCoefficients {
    StateCoefficients low;   ///< pre-shock state
    StateCoefficients high;  ///< post-shock state (lambda = 0)

    double M_l = 0;       ///< annuity-vs-fund index, pre-shock
    double M_h = 0;       ///< annuity-vs-fund index, post-shock
    double M_delta_l = 0; ///< M_l gated on delta_h >= beta_h, else 0
    double M_beta_l = 0;  ///< M_l gated on delta_h <  beta_h, else 0

    /// M_l with the delta_h (resp. beta_h) branch substituted unconditionally.
    /// The gated indices above select between them; the piece formulas of the
    /// two-region solutions need both regardless of which branch is active.
    double M_delta_raw = 0;
    double M_beta_raw = 0;

    bool post_shock_annuity_dominates = false;  ///< delta_h >= beta_h

    const StateCoefficients& state(HealthState s) const noexcept {
        return s == HealthState::low ? low : high;
    }
};

/// Characteristic exponents for discount rate r (gamma_plus > 1, gamma_minus < 0).
inline std::pair<double, double> characteristic_exponents(const MarketParams& m, double r) {
    const double s2 = m.sigma * m.sigma;
    const double gbar = 0.5 - (m.theta - m.alpha) / s2;
    const double root = std::sqrt(gbar * gbar + 2.0 * r / s2);
    return {gbar + root, gbar - root};
}

/**
 * Populate DerivedCoefficients from validated parameters.
 *
 * The high state is absorbing, so lambda_h = 0 and r_h = rho + mu_h.
 */
inline DerivedCoefficients derive_coefficients(const ModelParams& p) {
    const double theta = p.market.theta, alpha = p.market.alpha;
    const double rho = p.prefs.rho, nu = p.prefs.nu;
    const double price = p.pricing.rho_hat + p.pricing.mu_hat;
    const double mu_l = p.mortality.mu_l, mu_h = p.mortality.mu_h();
    const double lam = p.mortality.lambda_l;

    DerivedCoefficients c;
    auto fill = [&](StateCoefficients& s, double mu, double lambda) {
        s.mu = mu;
        s.lambda = lambda;
        s.r = rho + mu + lambda;
        s.delta = (rho + lambda + mu_h) * price / ((rho + lambda + mu) * (rho + mu_h));
        s.beta = (alpha + nu * mu) / (s.r + alpha - theta);
        std::tie(s.gamma_plus, s.gamma_minus) = characteristic_exponents(p.market, s.r);
    };
    fill(c.low, mu_l, lam);
    fill(c.high, mu_h, 0.0);

    const double drift_gap_l = theta - alpha - c.low.r;  // < 0 by well-posedness
    c.M_delta_raw = (c.low.delta - c.low.beta) * drift_gap_l + lam * c.high.delta;
    c.M_beta_raw = (c.low.delta - c.low.beta) * drift_gap_l + lam * c.high.beta;
    c.post_shock_annuity_dominates = c.high.delta >= c.high.beta;
    c.M_l = c.post_shock_annuity_dominates ? c.M_delta_raw : c.M_beta_raw;
    c.M_h = (c.high.delta - c.high.beta) * (theta - alpha - c.high.r);
    c.M_delta_l = c.post_shock_annuity_dominates ? c.M_l : 0.0;
    c.M_beta_l = c.post_shock_annuity_dominates ? 0.0 : c.M_l;
    return c;
}

}  // namespace annuitize

#endif  // ANNUITIZE_COEFFICIENTS_HPP

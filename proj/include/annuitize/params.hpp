#ifndef ANNUITIZE_PARAMS_HPP
#define ANNUITIZE_PARAMS_HPP

#include <cmath>
#include <string>

#include "annuitize/errors.hpp"

namespace annuitize {

/**
 * Financial market parameters of the investment fund.
 *
 * All rates are annualized continuous rates; currency is abstract units.
 */
struct MarketParams {
    double theta;  ///< mean fund return (1/yr), > 0
    double alpha;  ///< dividend rate (1/yr), >= 0
    double sigma;  ///< volatility (1/sqrt(yr)), > 0
};

/// Subjective discounting and bequest preferences.
struct PreferenceParams {
    double rho;  ///< subjective discount rate (1/yr), > 0
    double nu;   ///< bequest weight, in [0, 1]
};

/// Insurer-side pricing inputs.
struct PricingParams {
    double rho_hat;  ///< guaranteed rate (1/yr), > 0
    double mu_hat;   ///< objective mortality force (1/yr), > 0
    double K;        ///< acquisition tax (K > 0) or incentive (K < 0)
};

/**
 * Two-state mortality: force mu_l until an exponential shock time with
 * intensity lambda_l, then mu_h = mu_l + delta forever. The high state is
 * absorbing (its shock intensity is hardwired to zero).
 */
struct MortalityParams {
    double mu_l;      ///< low-state force (1/yr), > 0
    double delta;     ///< shock severity (1/yr), >= 0
    double lambda_l;  ///< shock intensity (1/yr), > 0

    double mu_h() const noexcept { return mu_l + delta; }
};

/// Relative guard band around delta == lambda_l (degenerate log-term case).
inline constexpr double kDegenerateShockGuard = 1e-9;

struct ModelParams {
    MarketParams market;
    PreferenceParams prefs;
    PricingParams pricing;
    MortalityParams mortality;
};

/**
 * Validate all standing assumptions.  Returns the parameters unchanged on
 * success; throws AssumptionViolation (or NearDegenerateShock) naming the
 * first violated invariant otherwise.
 */
inline const ModelParams& validate(const ModelParams& p) {
    const auto bad = [](const std::string& name, const std::string& detail) {
        throw AssumptionViolation(name, detail);
    };
    if (!(p.market.theta > 0)) bad("market.theta", "must be > 0");
    if (!(p.market.alpha >= 0)) bad("market.alpha", "must be >= 0");
    if (!(p.market.sigma > 0)) bad("market.sigma", "must be > 0");
    if (!(p.prefs.rho > 0)) bad("prefs.rho", "must be > 0");
    if (!(p.prefs.nu >= 0 && p.prefs.nu <= 1)) bad("prefs.nu", "must be in [0, 1]");
    if (!(p.pricing.rho_hat > 0)) bad("pricing.rho_hat", "must be > 0");
    if (!(p.pricing.mu_hat > 0)) bad("pricing.mu_hat", "must be > 0");
    if (!std::isfinite(p.pricing.K)) bad("pricing.K", "must be finite");
    if (!(p.mortality.mu_l > 0)) bad("mortality.mu_l", "must be > 0");
    if (!(p.mortality.delta >= 0)) bad("mortality.delta", "must be >= 0");
    if (!(p.mortality.lambda_l > 0)) bad("mortality.lambda_l", "must be > 0");

    const double d = p.mortality.delta, l = p.mortality.lambda_l;
    if (std::abs(d - l) <= kDegenerateShockGuard * std::max(d, l))
        throw NearDegenerateShock("delta = " + std::to_string(d) +
                                  " too close to lambda_l = " + std::to_string(l));

    // Well-posedness of the stopping problem: theta - alpha - rho - mu_l < 0.
    const double gap = p.market.theta - p.market.alpha - p.prefs.rho - p.mortality.mu_l;
    if (!(gap < 0))
        bad("well-posedness",
            "theta - alpha - rho - mu_l = " + std::to_string(gap) + " must be < 0");
    return p;
}

/**
 * Annuity payment rate purchased with wealth x: (x - K) / a_hat, where
 * a_hat = 1 / (rho_hat + mu_hat) is the actuarial price of a unit annuity.
 */
inline double annuity_rate(double x, const PricingParams& pricing) noexcept {
    return (x - pricing.K) * (pricing.rho_hat + pricing.mu_hat);
}

}  // namespace annuitize

#endif  // ANNUITIZE_PARAMS_HPP

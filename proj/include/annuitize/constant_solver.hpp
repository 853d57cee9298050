#ifndef ANNUITIZE_CONSTANT_SOLVER_HPP
#define ANNUITIZE_CONSTANT_SOLVER_HPP

#include <cmath>
#include <limits>
#include <string>

#include "annuitize/coefficients.hpp"
#include "annuitize/params.hpp"
#include "annuitize/piecewise.hpp"

namespace annuitize {

/// Shape of a stopping region on [0, inf).
enum class RegionKind {
    stop_everywhere,    ///< S = [0, inf)
    stop_below,         ///< S = [0, b]
    stop_above,         ///< S = [b, inf)
    never_stop,         ///< S = empty
    stop_only_at_zero,  ///< S = {0}
};

inline const char* to_string(RegionKind k) {
    switch (k) {
        case RegionKind::stop_everywhere: return "stop-everywhere";
        case RegionKind::stop_below: return "stop-below";
        case RegionKind::stop_above: return "stop-above";
        case RegionKind::never_stop: return "never-stop";
        case RegionKind::stop_only_at_zero: return "stop-at-zero";
    }
    return "?";
}

struct StoppingRegion {
    RegionKind kind = RegionKind::never_stop;
    double threshold = std::numeric_limits<double>::quiet_NaN();

    bool has_threshold() const noexcept {
        return kind == RegionKind::stop_below || kind == RegionKind::stop_above;
    }
    bool contains(double x) const noexcept {
        switch (kind) {
            case RegionKind::stop_everywhere: return true;
            case RegionKind::stop_below: return x <= threshold;
            case RegionKind::stop_above: return x >= threshold;
            case RegionKind::never_stop: return false;
            case RegionKind::stop_only_at_zero: return x == 0.0;
        }
        return false;
    }
};

/// Scalars of the constant-mortality problem (the zero-intensity instance of
/// StateCoefficients).
struct ConstantCoefficients {
    double mu = 0;
    double r = 0;           ///< rho + mu
    double delta = 0;       ///< money's worth (rho_hat + mu_hat)/(rho + mu)
    double beta = 0;        ///< (alpha + nu mu)/(r + alpha - theta)
    double gamma_plus = 0;
    double gamma_minus = 0;
};

/**
 * Closed-form solution of the constant-mortality annuitization problem.
 *
 * The region layout is decided by the sign of K and the order of delta vs
 * beta; ties are routed to the threshold-free cases so the threshold
 * formulas never divide by delta - beta = 0:
 *
 *   K < 0:  delta >= beta -> stop everywhere          V = delta (x - K)
 *           delta <  beta -> stop below x2            V = beta x + zeta2 x^g-
 *   K > 0:  delta <= beta -> never stop               V = beta x
 *           delta >  beta -> stop above x4            V = beta x + zeta4 x^g+
 *   K = 0:  delta >= beta -> stop everywhere          V = delta x
 *           delta <  beta -> stop only at x = 0       V = beta x
 *
 * Stopping regions are closed; evaluation at a boundary returns the stopping
 * payoff (both pieces agree there by value matching).
 */
struct ConstantSolution {
    ConstantCoefficients coeffs;
    StoppingRegion region;
    double zeta = 0;  ///< coefficient of x^gamma in the continuation piece (0 if none)
    double K = 0;
    PiecewiseValueFunction vf;

    double payoff(double x) const noexcept { return coeffs.delta * (x - K); }
    /// Stopping regions are closed: at a boundary the stopping payoff is
    /// returned (both pieces agree there, the choice fixes determinism).
    double value(double x) const {
        return region.contains(x) ? payoff(x) : vf.value(x);
    }
    double derivative(double x) const {
        return region.contains(x) ? coeffs.delta : vf.derivative(x);
    }
    double second_derivative(double x) const {
        return region.contains(x) ? 0.0 : vf.second_derivative(x);
    }
    bool in_continuation(double x) const noexcept { return !region.contains(x); }
};

/**
 * Solve the constant-force problem for force mu (pre: theta-alpha-rho-mu < 0).
 * The post-shock problem is the instance mu = mu_h; callers pass mu explicitly.
 */
inline ConstantSolution solve_constant(const ModelParams& p, double mu) {
    const double theta = p.market.theta, alpha = p.market.alpha;
    const double rho = p.prefs.rho, nu = p.prefs.nu;
    if (!(theta - alpha - rho - mu < 0))
        throw AssumptionViolation("well-posedness",
                                  "theta - alpha - rho - mu must be < 0 for mu = " +
                                      std::to_string(mu));

    ConstantSolution sol;
    sol.K = p.pricing.K;
    auto& c = sol.coeffs;
    c.mu = mu;
    c.r = rho + mu;
    c.delta = (p.pricing.rho_hat + p.pricing.mu_hat) / (rho + mu);
    c.beta = (alpha + nu * mu) / (c.r + alpha - theta);
    std::tie(c.gamma_plus, c.gamma_minus) = characteristic_exponents(p.market, c.r);

    const double K = sol.K;
    const double d = c.delta, b = c.beta;

    auto payoff_piece = [&](double xref) {
        Piece pc;
        pc.xref = xref;
        pc.add(d * xref, 1.0).add(-d * K, 0.0);
        return pc;
    };

    if (K == 0.0) {
        if (d >= b) {
            sol.region = {RegionKind::stop_everywhere, std::numeric_limits<double>::quiet_NaN()};
            sol.vf.append(0.0, payoff_piece(1.0));
        } else {
            sol.region = {RegionKind::stop_only_at_zero, std::numeric_limits<double>::quiet_NaN()};
            Piece pc;
            pc.add(b, 1.0);
            sol.vf.append(0.0, pc);
        }
        return sol;
    }

    if (K < 0.0 && d >= b) {
        sol.region = {RegionKind::stop_everywhere, std::numeric_limits<double>::quiet_NaN()};
        sol.vf.append(0.0, payoff_piece(1.0));
        return sol;
    }
    if (K > 0.0 && d <= b) {
        sol.region = {RegionKind::never_stop, std::numeric_limits<double>::quiet_NaN()};
        Piece pc;
        pc.add(b, 1.0);
        sol.vf.append(0.0, pc);
        return sol;
    }

    // threshold regimes: smooth fit of beta x + zeta x^gamma against delta (x - K)
    const double gamma = (K < 0.0) ? c.gamma_minus : c.gamma_plus;
    const double x_star = d * K * gamma / ((gamma - 1.0) * (d - b));
    const double zeta_scaled = (d - b) * x_star / gamma;  // coef of (x/x*)^gamma

    Piece cont;
    cont.xref = x_star;
    cont.add(b * x_star, 1.0).add(zeta_scaled, gamma);

    if (K < 0.0) {
        sol.region = {RegionKind::stop_below, x_star};
        sol.vf.append(0.0, payoff_piece(x_star));
        sol.vf.append(x_star, cont);
    } else {
        sol.region = {RegionKind::stop_above, x_star};
        sol.vf.append(0.0, cont);
        sol.vf.append(x_star, payoff_piece(x_star));
    }
    sol.zeta = zeta_scaled * std::pow(x_star, -gamma);
    return sol;
}

}  // namespace annuitize

#endif  // ANNUITIZE_CONSTANT_SOLVER_HPP

#ifndef ANNUITIZE_ORACLES_HPP
#define ANNUITIZE_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "annuitize/coefficients.hpp"
#include "annuitize/constant_solver.hpp"
#include "annuitize/params.hpp"
#include "annuitize/piecewise.hpp"
#include "annuitize/quadrature.hpp"
#include "annuitize/rng.hpp"
#include "annuitize/shock_solver.hpp"

namespace annuitize {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

/**
 * E[exp(-int_0^u mu_s ds)] conditional on the current health state.
 * Closed form of the two-state survival expectation; requires delta away
 * from lambda_l (the degeneracy guard of validate()).
 */
inline double survival_expectation(const MortalityParams& m, double u, HealthState s) {
    if (s == HealthState::high) return std::exp(-m.mu_h() * u);
    const double d = m.delta, lam = m.lambda_l;
    if (d == 0.0) return std::exp(-m.mu_l * u);
    return d / (d - lam) * std::exp(-(m.mu_l + lam) * u) -
           lam / (d - lam) * std::exp(-m.mu_h() * u);
}

struct OracleQuadConfig {
    QuadratureConfig quad{};
    double horizon_cap = 2000.0;  ///< cap on the truncation horizon (years)
};

/**
 * Money's worth by quadrature: (rho_hat + mu_hat) * int_0^inf e^{-rho u} S(u) du
 * with S the survival expectation. Integrates to T_max and adds the analytic
 * exponential tail of the dominant mode.
 */
inline double moneys_worth_quadrature(const ModelParams& p, HealthState s,
                                      const OracleQuadConfig& cfg = {}) {
    const double rho = p.prefs.rho;
    const double mu_min = std::min(p.mortality.mu_l, p.mortality.mu_h());
    const double T = std::min(60.0 / (rho + mu_min), cfg.horizon_cap);
    const auto f = [&](double u) {
        return std::exp(-rho * u) * survival_expectation(p.mortality, u, s);
    };
    double integral = integrate(f, 0.0, T, cfg.quad);
    // exact tails of the exponential modes beyond T
    const double d = p.mortality.delta, lam = p.mortality.lambda_l;
    const double mu_l = p.mortality.mu_l, mu_h = p.mortality.mu_h();
    if (s == HealthState::high) {
        integral += std::exp(-(rho + mu_h) * T) / (rho + mu_h);
    } else if (d == 0.0) {
        integral += std::exp(-(rho + mu_l) * T) / (rho + mu_l);
    } else {
        integral += d / (d - lam) * std::exp(-(rho + mu_l + lam) * T) / (rho + mu_l + lam) -
                    lam / (d - lam) * std::exp(-(rho + mu_h) * T) / (rho + mu_h);
    }
    return (p.pricing.rho_hat + p.pricing.mu_hat) * integral;
}

/**
 * Time-integral definitions of the three blended-value kernels, evaluated by
 * adaptive quadrature with substitution t = s^2 to tame the sqrt(t) kink at 0.
 * This is the reference the closed forms are tested against.
 */
inline double alpha_quadrature(const ModelParams& p, const AlphaFunctions& a, double x,
                               int which, const OracleQuadConfig& cfg = {}) {
    const double theta = p.market.theta, al = p.market.alpha, sg = p.market.sigma;
    const double s2 = sg * sg;
    const double lx = std::log(x / a.x_h);
    const auto d1 = [&](double t) { return (lx + (theta - al + 0.5 * s2) * t) / (sg * std::sqrt(t)); };
    const auto d2 = [&](double t) { return (lx + (theta - al - 0.5 * s2) * t) / (sg * std::sqrt(t)); };

    double rate;               // decay rate of the integrand envelope
    std::function<double(double)> g;
    switch (which) {
        case 1:
            rate = a.rA;
            g = [&](double t) {
                return std::exp(-a.rA * t) *
                       (a.beta_h * normal_cdf(-d1(t)) + a.delta_h * normal_cdf(d1(t)));
            };
            break;
        case 2:
            rate = a.q2;
            g = [&](double t) {
                return std::exp(-a.q2 * t) * normal_cdf(-d2(t) - sg * a.gp_h * std::sqrt(t));
            };
            break;
        default:
            rate = a.r_l;
            g = [&](double t) { return std::exp(-a.r_l * t) * normal_cdf(d2(t)); };
            break;
    }
    // Even when the exponential rate is negative (which == 2 with a large
    // shock), the Gaussian tail of the cdf keeps the integrand integrable;
    // pick the horizon from the envelope that actually decays, and extend it
    // past the integrand's peak time when x sits far from the boundary.
    double drift = theta - al + 0.5 * s2;  // d1 drift
    double decay = rate;
    if (which == 2) {
        const double m = theta - al + s2 * (a.gp_h - 0.5);
        decay = rate + 0.5 * (m / sg) * (m / sg);
        drift = m;
    } else if (which == 3) {
        drift = theta - al - 0.5 * s2;
    }
    const double t_peak = std::abs(lx) / std::max(std::abs(drift), 1e-3);
    const double T =
        std::min(2.0 * t_peak + 80.0 / std::max(decay, 1e-3), cfg.horizon_cap);
    const auto by_sqrt = [&](double s) { return 2.0 * s * g(s * s); };
    return integrate(by_sqrt, 0.0, std::sqrt(T), cfg.quad);
}

struct McOracleConfig {
    std::size_t n_paths = 100000;
    double dt = 1.0 / 252.0;
    double horizon = 60.0;  ///< truncation horizon (years)
    std::uint64_t seed = 1;
};

struct McEstimate {
    double estimate = 0;
    double std_error = 0;
};

/**
 * Monte Carlo valuation of a given pre-shock stopping rule via the decomposed
 * objective: run the reward integral with the lambda * V(., mu_h) running
 * term (post-shock value from the constant-force solution) instead of
 * simulating the shock time, and collect the stopping payoff at the first
 * grid time the rule triggers. Exact log-normal wealth increments.
 */
inline McEstimate mc_value_oracle(const ModelParams& p, const StoppingRegion& rule,
                                  double x0, const McOracleConfig& cfg) {
    const DerivedCoefficients c = derive_coefficients(p);
    const ConstantSolution post = solve_constant(p, p.mortality.mu_h());
    const double dt = cfg.dt;
    const std::size_t n_steps = static_cast<std::size_t>(std::llround(cfg.horizon / dt));
    const double drift = (p.market.theta - p.market.alpha -
                          0.5 * p.market.sigma * p.market.sigma) * dt;
    const double vol = p.market.sigma * std::sqrt(dt);
    const double r_l = c.low.r;
    const double lam = c.low.lambda;
    const double flow_coef = p.market.alpha + p.prefs.nu * p.mortality.mu_l;
    const double disc_step = std::exp(-r_l * dt);
    const double payoff_slope = c.low.delta;
    const double K = p.pricing.K;

    double mean = 0, m2 = 0;  // Welford
    for (std::size_t i = 0; i < cfg.n_paths; ++i) {
        Philox rng(cfg.seed, i);
        double lx = std::log(x0);
        double disc = 1.0;
        double acc = 0.0;
        bool stopped = rule.contains(x0);
        if (!stopped) {
            for (std::size_t k = 0; k < n_steps; ++k) {
                const double x_prev = std::exp(lx);
                const double flow_prev = flow_coef * x_prev + lam * post.value(x_prev);
                lx += drift + vol * rng.normal();
                const double x = std::exp(lx);
                const double flow = flow_coef * x + lam * post.value(x);
                // trapezoid on the discounted running reward
                acc += 0.5 * dt * (disc * flow_prev + disc * disc_step * flow);
                disc *= disc_step;
                if (rule.contains(x)) {
                    acc += disc * payoff_slope * (x - K);
                    stopped = true;
                    break;
                }
            }
        } else {
            acc = payoff_slope * (x0 - K);
        }
        // untruncated tail is dropped; horizon chosen so e^{-r_l T} is negligible
        const double d1 = acc - mean;
        mean += d1 / static_cast<double>(i + 1);
        m2 += d1 * (acc - mean);
    }
    const double n = static_cast<double>(cfg.n_paths);
    McEstimate e;
    e.estimate = mean;
    e.std_error = cfg.n_paths > 1 ? std::sqrt(std::max(0.0, m2 / (n - 1)) / n) : 0.0;
    return e;
}

/**
 * Max residual of (1/2) s^2 x^2 V'' + (theta - alpha) x V' - r V - source(x)
 * over a grid, with V'' and V' taken analytically from the pieces.
 * Grid points within a relative margin of a breakpoint are rejected.
 */
inline double ode_residual(const PiecewiseValueFunction& vf,
                           const std::function<double(double)>& source, double r,
                           const MarketParams& m, std::span<const double> grid,
                           double breakpoint_margin = 1e-6) {
    const double s2 = m.sigma * m.sigma;
    double worst = 0;
    for (double x : grid) {
        for (double b : vf.breakpoints())
            if (b > 0 && std::abs(x - b) < breakpoint_margin * x)
                throw GridTouchesBreakpoint("grid point " + std::to_string(x) +
                                            " touches breakpoint " + std::to_string(b));
        const double res = 0.5 * s2 * x * x * vf.second_derivative(x) +
                           (m.theta - m.alpha) * x * vf.derivative(x) - r * vf.value(x) -
                           source(x);
        worst = std::max(worst, std::abs(res));
    }
    return worst;
}

/// Log-spaced grid helper for residual checks.
inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    std::vector<double> g(n);
    const double llo = std::log(lo), lhi = std::log(hi);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = std::exp(llo + (lhi - llo) * static_cast<double>(i) /
                                  static_cast<double>(n - 1));
    return g;
}

}  // namespace annuitize

#endif  // ANNUITIZE_ORACLES_HPP

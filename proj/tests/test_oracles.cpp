#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "annuitize/oracles.hpp"
#include "annuitize/quadrature.hpp"
#include "annuitize/shock_solver.hpp"
#include "test_support.hpp"

using namespace annuitize;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

/// A parameter set in the blended never-stop regime (tax, post-shock annuity
/// dominance, nonnegative pre-shock index).
ModelParams blended_params() {
    ModelParams p;
    p.market = {0.275671, 0.035181, 0.141405};
    p.prefs = {0.154019, 0.305552};
    p.pricing = {0.152076, 0.149579, 4398.842489};
    p.mortality = {0.119146, 0.149121, 0.081435};
    return p;
}

}  // namespace

TEST_CASE("adaptive quadrature on reference integrals", "[quadrature]") {
    CHECK_THAT(integrate([](double x) { return std::sin(x); }, 0.0, 3.14159265358979324),
               WithinRel(2.0, 1e-12));
    CHECK_THAT(integrate([](double x) { return std::exp(-x * x); }, -8.0, 8.0),
               WithinRel(std::sqrt(3.14159265358979324), 1e-12));
    // integrable sqrt singularity
    CHECK_THAT(integrate([](double x) { return 1.0 / std::sqrt(x); }, 1e-12, 1.0,
                         {1e-9, 1e-12, 20000}),
               WithinRel(2.0, 1e-6));
}

TEST_CASE("quadrature reports non-convergence", "[quadrature]") {
    QuadratureConfig tight{1e-15, 1e-300, 8};
    CHECK_THROWS_AS(integrate([](double x) { return std::cos(50.0 * x * x); }, 0.0, 20.0,
                              tight),
                    QuadratureNonConvergence);
}

TEST_CASE("money's worth quadrature hits the published values", "[oracle]") {
    const ModelParams p = testsupport::baseline();
    CHECK_THAT(moneys_worth_quadrature(p, HealthState::low), WithinAbs(0.906988, 1e-6));
    CHECK_THAT(moneys_worth_quadrature(p, HealthState::high), WithinAbs(0.809704, 1e-6));

    // post-shock value is a single exponential integral
    const double expected = (p.pricing.rho_hat + p.pricing.mu_hat) /
                            (p.prefs.rho + p.mortality.mu_h());
    CHECK_THAT(moneys_worth_quadrature(p, HealthState::high), WithinRel(expected, 1e-8));

    ModelParams fair = p;
    fair.mortality.delta = 0.0;
    fair.pricing.mu_hat = fair.mortality.mu_l;
    fair.pricing.rho_hat = fair.prefs.rho;
    CHECK_THAT(moneys_worth_quadrature(fair, HealthState::low), WithinAbs(1.0, 1e-8));
}

TEST_CASE("blended-regime kernels match their integral definitions", "[oracle][alpha]") {
    const ModelParams p = blended_params();
    const ShockSolution sol = solve_shock(p);
    REQUIRE(sol.regime.pre == RegionKind::never_stop);
    REQUIRE(sol.regime.post == RegionKind::stop_above);

    const AlphaFunctions a = make_alpha_functions(p, sol.coeffs, sol.post);
    const double b = a.x_h;
    // 50 points spanning both sides of the post-shock boundary; on the upper
    // side the second kernel decays like (x_h/x)^26, so points stay where the
    // reference integral is still resolvable above quadrature noise
    for (int i = 0; i < 50; ++i) {
        const double frac = i < 32 ? 0.05 + 0.03 * i : 1.01 + 0.03 * (i - 32);
        const double x = frac * b;
        INFO("x/x_h = " << frac);
        const double q1 = alpha_quadrature(p, a, x, 1);
        const double q2 = alpha_quadrature(p, a, x, 2);
        const double q3 = alpha_quadrature(p, a, x, 3);
        CHECK_THAT(a.alpha1(x), WithinRel(q1, 1e-6));
        CHECK_THAT(a.alpha2(x), WithinRel(q2, 1e-6));
        CHECK_THAT(a.alpha3(x), WithinRel(q3, 1e-6));
    }

    // limits: the region-above kernel saturates at 1/r_l; the homogeneous-mass
    // kernel at small x follows its integral (it does not vanish); its far
    // upper tail is zero at quadrature resolution
    CHECK_THAT(a.alpha3(b * 1e9), WithinRel(1.0 / sol.coeffs.low.r, 1e-9));
    CHECK_THAT(a.alpha2(b * 1e-4), WithinRel(alpha_quadrature(p, a, b * 1e-4, 2), 1e-6));
    CHECK_THAT(a.alpha2(b * 2.5), WithinAbs(alpha_quadrature(p, a, b * 2.5, 2), 1e-9));

    // assembled value is continuous across the post-shock boundary
    const double v_lo = sol.pre.value_of_piece(0, b);
    const double v_hi = sol.pre.value_of_piece(1, b);
    CHECK(std::abs(v_lo - v_hi) < 1e-9 * (1 + std::abs(v_hi)));
}

TEST_CASE("blended-regime value satisfies the recursive ODE", "[oracle][alpha]") {
    const ModelParams p = blended_params();
    const ShockSolution sol = solve_shock(p);
    const double b = sol.post.region.threshold;
    auto grid = log_grid(b * 1e-3, b * 1e3, 200);
    for (double& x : grid)
        if (std::abs(x - b) < 1e-5 * x) x *= 1.0 + 3e-5;
    const auto src = [&](double x) {
        return -(p.market.alpha + p.prefs.nu * p.mortality.mu_l) * x -
               p.mortality.lambda_l * sol.post.value(x);
    };
    double vmax = 0;
    for (double x : grid) vmax = std::max(vmax, std::abs(sol.pre.value(x)));
    CHECK(ode_residual(sol.pre, src, sol.coeffs.low.r, p.market, grid) < 1e-6 * (1 + vmax));
}

TEST_CASE("ode_residual accepts fundamental solutions and flags breakpoints",
          "[oracle]") {
    const ModelParams p = testsupport::baseline();
    const auto c = derive_coefficients(p);

    PiecewiseValueFunction vf;
    Piece pc;
    pc.xref = 1.0;
    pc.add(3.7, c.low.gamma_plus).add(-1.2, c.low.gamma_minus);
    vf.append(0.0, pc);
    const auto zero = [](double) { return 0.0; };
    // absolute bound where the values are O(1), relative bound on a wide grid
    CHECK(ode_residual(vf, zero, c.low.r, p.market, log_grid(0.5, 2.0, 200)) < 1e-10);
    const auto wide = log_grid(1e-2, 1e5, 200);
    double vmax = 0;
    for (double x : wide) vmax = std::max(vmax, std::abs(vf.value(x)));
    CHECK(ode_residual(vf, zero, c.low.r, p.market, wide) < 1e-12 * vmax);

    PiecewiseValueFunction two;
    two.append(0.0, pc);
    two.append(1e3, pc);
    const double touching[] = {1e3 * (1 + 1e-9)};
    CHECK_THROWS_AS(ode_residual(two, zero, c.low.r, p.market, touching),
                    GridTouchesBreakpoint);
}

TEST_CASE("residual solver basics", "[roots]") {
    CHECK_THAT(solve_residual([](double x) { return x - 5.0; }, 1.0),
               WithinRel(5.0, 1e-12));
    CHECK_THROWS_AS(solve_residual([](double x) { return 1.0 + x * 0; }, 1.0),
                    NoBracket);
}

TEST_CASE("root finder matches a 4096-step bisection oracle", "[roots][property]") {
    std::mt19937_64 gen(31415);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        // random increasing residual a x^p + b log(x) + c with a root in range
        const double a = 0.1 + U(gen);
        const double pw = 0.3 + 2.0 * U(gen);
        const double bl = U(gen);
        const double root_true = std::pow(10.0, -3.0 + 9.0 * U(gen));
        const double cc = -(a * std::pow(root_true, pw) + bl * std::log(root_true));
        const auto f = [&](double x) { return a * std::pow(x, pw) + bl * std::log(x) + cc; };

        // bisection oracle: 4096 halvings of a sign bracket
        double lo = 1e-12, hi = 1e12;
        for (int k = 0; k < 4096 && hi - lo > 0; ++k) {
            const double mid = 0.5 * (lo + hi);
            if ((f(lo) > 0) != (f(mid) > 0))
                hi = mid;
            else
                lo = mid;
        }
        const double oracle = 0.5 * (lo + hi);
        const double found = solve_residual(f, 1.0);
        CHECK_THAT(found, WithinRel(oracle, 1e-9));
    }
}

TEST_CASE("policy-value oracle: degenerate immediate stop", "[oracle][mc]") {
    const ModelParams p = testsupport::baseline();
    const auto c = derive_coefficients(p);
    const StoppingRegion everywhere{RegionKind::stop_everywhere, 0};
    McOracleConfig cfg;
    cfg.n_paths = 100;
    const McEstimate e = mc_value_oracle(p, everywhere, 100000.0, cfg);
    CHECK(e.estimate == c.low.delta * (100000.0 - p.pricing.K));
    CHECK(e.std_error == 0.0);
}

TEST_CASE("policy-value oracle agrees with the closed form at the baseline",
          "[oracle][mc]") {
    const ModelParams p = testsupport::baseline();
    const ShockSolution sol = solve_shock(p);
    McOracleConfig cfg;
    cfg.n_paths = 20000;
    cfg.horizon = 60.0;
    cfg.seed = 31337;
    const double x0 = 100000.0;
    const McEstimate e = mc_value_oracle(p, sol.pre_region, x0, cfg);
    const double v = sol.value(x0, HealthState::low);
    INFO("mc = " << e.estimate << " +- " << e.std_error << ", closed = " << v);
    CHECK(std::abs(e.estimate - v) < 3.0 * e.std_error);
}

TEST_CASE("policy-value oracle: deterministic small-volatility limit", "[oracle][mc]") {
    ModelParams p = testsupport::baseline();
    p.market.sigma = 1e-8;
    const ConstantSolution post = solve_constant(p, p.mortality.mu_h());
    const auto c = derive_coefficients(p);
    const double x0 = 50000.0;
    const double g = p.market.theta - p.market.alpha;
    const double flow_coef = p.market.alpha + p.prefs.nu * p.mortality.mu_l;
    const double T = 80.0;
    const double expected = integrate(
        [&](double t) {
            const double x = x0 * std::exp(g * t);
            return std::exp(-c.low.r * t) *
                   (flow_coef * x + p.mortality.lambda_l * post.value(x));
        },
        0.0, T, {1e-11, 1e-9, 8000});

    McOracleConfig cfg;
    cfg.n_paths = 4;  // paths are identical at vanishing volatility
    cfg.horizon = T;
    const StoppingRegion never{RegionKind::never_stop, 0};
    const McEstimate e = mc_value_oracle(p, never, x0, cfg);
    CHECK_THAT(e.estimate, WithinRel(expected, 1e-3));
}

TEST_CASE("policy-value oracle is monotone in initial wealth", "[oracle][mc][property]") {
    const ModelParams p = testsupport::baseline();
    const ShockSolution sol = solve_shock(p);
    McOracleConfig cfg;
    cfg.n_paths = 4000;
    cfg.horizon = 50.0;
    double prev = -1e300;
    int inversions = 0;
    for (int i = 0; i < 20; ++i) {
        const double x0 = 70000.0 + 12000.0 * i;
        const McEstimate e = mc_value_oracle(p, sol.pre_region, x0, cfg);
        if (e.estimate <= prev) ++inversions;
        prev = e.estimate;
    }
    CHECK(inversions == 0);
}

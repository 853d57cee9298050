#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "annuitize/coefficients.hpp"
#include "annuitize/oracles.hpp"
#include "annuitize/params.hpp"
#include "test_support.hpp"

using namespace annuitize;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("validate accepts the baseline calibration", "[core]") {
    REQUIRE_NOTHROW(validate(testsupport::baseline()));
}

TEST_CASE("validate rejects an ill-posed drift", "[core]") {
    ModelParams p = testsupport::baseline();
    p.market.theta = 1.0;
    p.market.alpha = 0.0;
    p.prefs.rho = 0.05;
    p.mortality.mu_l = 0.04;
    try {
        validate(p);
        FAIL("expected AssumptionViolation");
    } catch (const AssumptionViolation& e) {
        CHECK(e.name() == "well-posedness");
    }
}

TEST_CASE("validate rejects a near-degenerate shock", "[core]") {
    ModelParams p = testsupport::baseline();
    p.mortality.delta = 0.1;
    p.mortality.lambda_l = 0.1;
    REQUIRE_THROWS_AS(validate(p), NearDegenerateShock);
    p.mortality.delta = 0.1 * (1.0 + 2e-9);
    REQUIRE_NOTHROW(validate(p));
}

TEST_CASE("validate flags each field invariant by name", "[core]") {
    const auto expect_name = [](ModelParams p, auto&& mutate, const std::string& name) {
        mutate(p);
        try {
            validate(p);
            FAIL("expected AssumptionViolation " + name);
        } catch (const AssumptionViolation& e) {
            CHECK(e.name() == name);
        }
    };
    const ModelParams base = testsupport::baseline();
    expect_name(base, [](ModelParams& p) { p.market.sigma = 0; }, "market.sigma");
    expect_name(base, [](ModelParams& p) { p.prefs.nu = 1.5; }, "prefs.nu");
    expect_name(base, [](ModelParams& p) { p.pricing.mu_hat = -0.01; }, "pricing.mu_hat");
    expect_name(base, [](ModelParams& p) { p.mortality.lambda_l = 0; }, "mortality.lambda_l");
}

TEST_CASE("money's worth matches the published coefficients", "[core]") {
    const auto c = derive_coefficients(validate(testsupport::baseline()));
    CHECK_THAT(c.low.delta, WithinAbs(0.906988, 5e-7));
    CHECK_THAT(c.high.delta, WithinAbs(0.809704, 5e-7));
    CHECK(c.high.lambda == 0.0);
    CHECK_THAT(c.high.r, WithinRel(testsupport::baseline().prefs.rho +
                                       testsupport::baseline().mortality.mu_h(),
                                   1e-15));
}

TEST_CASE("a fair annuity with no shock has unit money's worth", "[core]") {
    ModelParams p = testsupport::baseline();
    p.mortality.delta = 0.0;
    p.pricing.mu_hat = p.mortality.mu_l;
    p.pricing.rho_hat = p.prefs.rho;
    const auto c = derive_coefficients(p);
    CHECK_THAT(c.low.delta, WithinAbs(1.0, 1e-14));
    CHECK_THAT(c.high.delta, WithinAbs(1.0, 1e-14));
}

TEST_CASE("annuity payment rate", "[core]") {
    PricingParams pr{0.059970, 0.044623, -1500.0};
    CHECK(annuity_rate(pr.K, pr) == 0.0);
    CHECK_THAT(annuity_rate(100000.0, pr), WithinAbs(101500.0 * 0.104593, 1e-6));
    PricingParams zero{0.059970, 0.044623, 0.0};
    CHECK(annuity_rate(0.0, zero) == 0.0);
}

namespace {

ModelParams random_valid_params(std::mt19937_64& gen) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (;;) {
        ModelParams p;
        p.market.theta = 0.01 + 0.29 * U(gen);
        p.market.alpha = p.market.theta * U(gen);
        p.market.sigma = 0.05 + 0.55 * U(gen);
        p.prefs.rho = 0.005 + 0.195 * U(gen);
        p.prefs.nu = U(gen);
        p.pricing.rho_hat = 0.005 + 0.195 * U(gen);
        p.pricing.mu_hat = 0.005 + 0.195 * U(gen);
        p.pricing.K = (U(gen) < 0.5 ? -1 : 1) * (50.0 + 29950.0 * U(gen));
        p.mortality.mu_l = 0.005 + 0.195 * U(gen);
        p.mortality.delta = 0.3 * U(gen);
        p.mortality.lambda_l = 0.01 + 0.49 * U(gen);
        try {
            validate(p);
            return p;
        } catch (const Error&) {
        }
    }
}

}  // namespace

TEST_CASE("characteristic exponents solve their quadratic", "[core][property]") {
    std::mt19937_64 gen(12345);
    for (int i = 0; i < 100; ++i) {
        const ModelParams p = random_valid_params(gen);
        const auto c = derive_coefficients(p);
        const double s2 = p.market.sigma * p.market.sigma;
        for (const StateCoefficients* s : {&c.low, &c.high}) {
            for (double g : {s->gamma_plus, s->gamma_minus}) {
                const double resid =
                    0.5 * s2 * g * (g - 1) + (p.market.theta - p.market.alpha) * g - s->r;
                CHECK(std::abs(resid) < 1e-10 * s->r);
            }
            CHECK(s->gamma_plus > 1.0);
            CHECK(s->gamma_minus < 0.0);
            // Vieta: product of the roots
            CHECK_THAT(s->gamma_plus * s->gamma_minus, WithinRel(-2.0 * s->r / s2, 1e-12));
        }
    }
}

TEST_CASE("money's worth agrees with the quadrature oracle", "[core][property]") {
    std::mt19937_64 gen(777);
    for (int i = 0; i < 100; ++i) {
        const ModelParams p = random_valid_params(gen);
        const auto c = derive_coefficients(p);
        const double ql = moneys_worth_quadrature(p, HealthState::low);
        const double qh = moneys_worth_quadrature(p, HealthState::high);
        CHECK_THAT(c.low.delta, WithinRel(ql, 1e-8));
        CHECK_THAT(c.high.delta, WithinRel(qh, 1e-8));
    }
}

TEST_CASE("delta_h <= delta_l for nonnegative shock", "[core][property]") {
    std::mt19937_64 gen(424242);
    for (int i = 0; i < 200; ++i) {
        const ModelParams p = random_valid_params(gen);
        const auto c = derive_coefficients(p);
        CHECK(c.high.delta <= c.low.delta * (1 + 1e-14));
        // indicator structure: exactly one gated index carries M_l
        if (c.M_l != 0.0) CHECK((c.M_delta_l == 0.0) != (c.M_beta_l == 0.0));
    }
}

TEST_CASE("shock-size sensitivities obey the fixed ratio", "[core][property]") {
    const ModelParams base = testsupport::baseline();
    const double h = 1e-6;
    const auto delta_at = [&](double d) {
        ModelParams p = base;
        p.mortality.delta = d;
        const auto c = derive_coefficients(p);
        return std::pair{c.low.delta, c.high.delta};
    };
    for (double d0 : {0.005, 0.0246, 0.08, 0.2}) {
        const auto [dl_p, dh_p] = delta_at(d0 + h);
        const auto [dl_m, dh_m] = delta_at(d0 - h);
        const double sens_l = (dl_p - dl_m) / (2 * h);
        const double sens_h = (dh_p - dh_m) / (2 * h);
        const double C = (base.prefs.rho + base.mortality.lambda_l + base.mortality.mu_l) /
                         base.mortality.lambda_l;
        CHECK_THAT(std::abs(sens_h), WithinRel(C * std::abs(sens_l), 1e-4));
    }
}

TEST_CASE("M_l regression anchor", "[core]") {
    std::mt19937_64 gen(5150);
    for (int i = 0; i < 50; ++i) {
        const ModelParams p = random_valid_params(gen);
        const auto c = derive_coefficients(p);
        const double expected =
            (c.low.delta - c.low.beta) *
                (p.market.theta - p.market.alpha - c.low.r) +
            p.mortality.lambda_l * std::max(c.high.delta, c.high.beta);
        CHECK(c.M_l == expected);
    }
}

TEST_CASE("survival expectation basics", "[oracle]") {
    const MortalityParams m = testsupport::baseline().mortality;
    CHECK(survival_expectation(m, 0.0, HealthState::low) == 1.0);
    CHECK_THAT(survival_expectation(m, 1.0 / m.mu_h(), HealthState::high),
               WithinRel(std::exp(-1.0), 1e-14));
}

TEST_CASE("survival expectation matches simulated two-state force", "[oracle][mc]") {
    const MortalityParams m = testsupport::baseline().mortality;
    const double u = 10.0;
    const std::size_t n = 1000000;
    double sum = 0, sumsq = 0;
    for (std::size_t i = 0; i < n; ++i) {
        Philox rng(99, i);
        const double xi = rng.exponential(m.lambda_l);
        const double integral =
            xi >= u ? m.mu_l * u : m.mu_l * xi + m.mu_h() * (u - xi);
        const double v = std::exp(-integral);
        sum += v;
        sumsq += v * v;
    }
    const double mean = sum / static_cast<double>(n);
    const double se = std::sqrt((sumsq / static_cast<double>(n) - mean * mean) /
                                static_cast<double>(n));
    const double closed = survival_expectation(m, u, HealthState::low);
    CHECK(std::abs(closed - mean) < 3 * se);
}

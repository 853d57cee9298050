// annuitize: closed-form solver, simulator and verifier for the two-state
// optimal annuitization model.
//
//   annuitize <solve|simulate|sweep|verify> --config <path>
//             [--override k=v]... [--out <path>] [--seed N]
//
// Exit codes: 0 success, 1 verification failure, 2 config/validation error,
// 3 runtime/solver error.

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "annuitize/config.hpp"
#include "annuitize/monte_carlo.hpp"
#include "annuitize/oracles.hpp"
#include "annuitize/sensitivity.hpp"
#include "annuitize/shock_solver.hpp"

namespace {

constexpr const char* kVersion = "1.0.0";

using namespace annuitize;

struct CliOptions {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    bool constant = false;
    std::optional<double> mu;
};

RunConfig load_config(const CliOptions& opt) {
    std::ifstream in(opt.config_path);
    if (!in) throw ConfigError("cannot open config file: " + opt.config_path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    for (const auto& ov : opt.overrides) apply_override(j, ov);
    RunConfig cfg = parse_config(j);
    if (opt.seed) {
        if (!cfg.sim) cfg.sim = SimConfig{};
        cfg.sim->seed = *opt.seed;
    }
    return cfg;
}

void print_header(std::ostream& os, const std::string& command, const RunConfig& cfg) {
    os << "# annuitize " << kVersion << "\n";
    os << "# command: " << command << "\n";
    os << "# config: " << config_to_json(cfg).dump() << "\n";
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(out_path);
        if (!out) throw Error("cannot open output file: " + out_path);
        out << text;
    }
}

double grid_point(const GridBlock& g, std::size_t i) {
    const auto denom = static_cast<double>(std::max<std::size_t>(1, g.n - 1));
    return g.x_lo + (g.x_hi - g.x_lo) * static_cast<double>(i) / denom;
}

// ---------------------------------------------------------------- solve ----

std::string describe_state(const char* label, const StateCoefficients& s) {
    std::ostringstream os;
    os << label << ": r=" << format_double(s.r) << " delta=" << format_double(s.delta)
       << " beta=" << format_double(s.beta)
       << " gamma+=" << format_double(s.gamma_plus)
       << " gamma-=" << format_double(s.gamma_minus) << "\n";
    return os.str();
}

int cmd_solve(const CliOptions& opt) {
    const RunConfig cfg = load_config(opt);
    std::ostringstream report;
    print_header(report, opt.constant ? "solve --constant" : "solve", cfg);

    std::ostringstream csv;
    if (opt.constant) {
        const double mu = opt.mu.value_or(cfg.params.mortality.mu_l);
        const ConstantSolution sol = solve_constant(cfg.params, mu);
        report << "regime: " << to_string(sol.region.kind) << "\n";
        if (sol.region.has_threshold())
            report << "threshold: " << format_double(sol.region.threshold) << "\n";
        report << "mu: " << format_double(mu) << "\n";
        report << "delta: " << format_double(sol.coeffs.delta)
               << "  beta: " << format_double(sol.coeffs.beta) << "\n";
        report << "gamma+: " << format_double(sol.coeffs.gamma_plus)
               << "  gamma-: " << format_double(sol.coeffs.gamma_minus) << "\n";
        if (cfg.grid) {
            csv << "x,value\n";
            for (std::size_t i = 0; i < cfg.grid->n; ++i) {
                const double x = grid_point(*cfg.grid, i);
                csv << format_double(x) << "," << format_double(sol.value(x)) << "\n";
            }
        }
    } else {
        const ShockSolution sol = solve_shock(cfg.params);
        report << "regime: " << to_string(sol.regime) << "\n";
        if (sol.pre_region.has_threshold())
            report << "threshold_low: " << format_double(sol.pre_region.threshold)
                   << "\n";
        if (sol.post.region.has_threshold())
            report << "threshold_high: " << format_double(sol.post.region.threshold)
                   << "\n";
        report << describe_state("low", sol.coeffs.low)
               << describe_state("high", sol.coeffs.high);
        report << "M_l: " << format_double(sol.coeffs.M_l)
               << "  M_h: " << format_double(sol.coeffs.M_h) << "\n";
        if (cfg.grid) {
            csv << "x,value_low,value_high\n";
            for (std::size_t i = 0; i < cfg.grid->n; ++i) {
                const double x = grid_point(*cfg.grid, i);
                csv << format_double(x) << ","
                    << format_double(sol.value(x, HealthState::low)) << ","
                    << format_double(sol.value(x, HealthState::high)) << "\n";
            }
        }
    }
    std::cout << report.str();
    if (!csv.str().empty()) emit(opt.out_path, csv.str());
    return 0;
}

// ------------------------------------------------------------- simulate ----

int cmd_simulate(const CliOptions& opt) {
    const RunConfig cfg = load_config(opt);
    if (!cfg.sim) throw ConfigError("sim: required for the simulate command");
    const ShockSolution sol = solve_shock(cfg.params);
    const ThresholdPolicy policy{sol.pre_region, sol.post.region, true};
    const SimStats st = simulate_policy(cfg.params, policy, *cfg.sim);

    std::ostringstream report;
    print_header(report, "simulate", cfg);
    report << "pre-shock rule:  " << to_string(sol.pre_region.kind);
    if (sol.pre_region.has_threshold())
        report << " @ " << format_double(sol.pre_region.threshold);
    report << "\npost-shock rule: " << to_string(sol.post.region.kind);
    if (sol.post.region.has_threshold())
        report << " @ " << format_double(sol.post.region.threshold);
    report << "\n";
    report << "annuitized: " << format_double(100 * st.frac_annuitized_total)
           << "% (pre " << format_double(100 * st.frac_pre_shock) << "%, post "
           << format_double(100 * st.frac_post_shock) << "%)\n";
    report << "mean time to annuitize: " << format_double(st.mean_time_to_annuitize)
           << " yr (se " << format_double(st.se_mean_time) << ")\n";

    std::ostringstream csv;
    csv << "n_paths,dt,frac_total,frac_pre,frac_post,mean_time,se_frac,se_time,seed\n";
    csv << st.n_paths << "," << format_double(cfg.sim->dt) << ","
        << format_double(st.frac_annuitized_total) << ","
        << format_double(st.frac_pre_shock) << "," << format_double(st.frac_post_shock)
        << "," << format_double(st.mean_time_to_annuitize) << ","
        << format_double(st.se_frac_total) << "," << format_double(st.se_mean_time)
        << "," << cfg.sim->seed << "\n";

    std::cout << report.str();
    emit(opt.out_path, csv.str());
    return 0;
}

// ---------------------------------------------------------------- sweep ----

int cmd_sweep(const CliOptions& opt) {
    const RunConfig cfg = load_config(opt);
    if (!cfg.sweep) throw ConfigError("sweep: required for the sweep command");
    SweepSpec spec;
    spec.parameter = cfg.sweep->parameter;
    spec.lo = cfg.sweep->lo;
    spec.hi = cfg.sweep->hi;
    spec.n_points = cfg.sweep->n_points;
    spec.base = cfg.params;

    const auto rows = run_sweep(spec);
    std::size_t n_failed = 0;
    std::ostringstream csv;
    csv << "param,value,delta_l,delta_h,M_l,M_h,x_l,x_h,regime,status\n";
    for (const auto& row : rows) {
        if (row.status == RowStatus::failed) ++n_failed;
        csv << to_string(spec.parameter) << "," << format_double(row.value) << ","
            << format_double(row.delta_l) << "," << format_double(row.delta_h) << ","
            << format_double(row.M_l) << "," << format_double(row.M_h) << ","
            << format_double(row.x_l) << "," << format_double(row.x_h) << ","
            << row.regime << "," << to_string(row.status) << "\n";
    }
    const auto crossing_line = [&](const char* name, auto f) {
        try {
            const double c = find_crossing(spec, f);
            csv << "# crossing " << name << " = " << format_double(c) << "\n";
        } catch (const NoSignChange&) {
            csv << "# crossing " << name << " = none\n";
        }
    };
    crossing_line("M", [](const SweepRow& r) { return r.M_h - r.M_l; });
    crossing_line("threshold", [](const SweepRow& r) { return r.x_l - r.x_h; });

    std::ostringstream report;
    print_header(report, "sweep", cfg);
    std::cout << report.str();
    emit(opt.out_path, csv.str());
    if (n_failed == rows.size()) throw Error("every sweep row failed");
    return 0;
}

// --------------------------------------------------------------- verify ----

struct CheckResult {
    std::string name;
    bool passed;
    double magnitude;
    double bound;
};

int cmd_verify(const CliOptions& opt) {
    const RunConfig cfg = load_config(opt);
    const VerifyBlock vb = cfg.verify.value_or(VerifyBlock{});
    const ModelParams& p = cfg.params;
    validate(p);
    const ShockSolution sol = solve_shock(p);

    std::vector<CheckResult> checks;
    const auto add = [&](const std::string& name, double magnitude, double bound) {
        checks.push_back({name, magnitude < bound, magnitude, bound});
    };

    // closed-form money's worth vs quadrature
    add("moneys-worth-low",
        std::abs(sol.coeffs.low.delta - moneys_worth_quadrature(p, HealthState::low)) /
            sol.coeffs.low.delta,
        1e-8);
    add("moneys-worth-high",
        std::abs(sol.coeffs.high.delta - moneys_worth_quadrature(p, HealthState::high)) /
            sol.coeffs.high.delta,
        1e-8);

    // boundary conditions at each solved threshold (scale factors inject faults)
    const auto pasting_checks = [&](const std::string& tag,
                                    const PiecewiseValueFunction& vf,
                                    const StoppingRegion& region, double delta,
                                    double K, double scale) {
        if (!region.has_threshold()) return;
        const double b = region.threshold * scale;
        std::size_t cont_piece = 0;
        for (std::size_t i = 0; i + 1 < vf.size(); ++i)
            if (vf.breakpoints()[i + 1] == region.threshold)
                cont_piece = region.kind == RegionKind::stop_below ? i + 1 : i;
        const double payoff = delta * (b - K);
        const double v = vf.value_of_piece(cont_piece, b);
        add(tag + "-value-matching", std::abs(v - payoff) / (1 + std::abs(payoff)), 1e-9);
        const double dv = vf.derivative_of_piece(cont_piece, b);
        add(tag + "-smooth-pasting", std::abs(dv - delta) / std::abs(delta), 1e-6);
    };
    pasting_checks("pre", sol.pre, sol.pre_region, sol.coeffs.low.delta, p.pricing.K,
                   vb.threshold_scale_pre);
    pasting_checks("post", sol.post.vf, sol.post.region, sol.coeffs.high.delta,
                   p.pricing.K, vb.threshold_scale_post);

    // free-boundary ODE residuals on 200-point grids
    const auto grid_for = [&](const StoppingRegion& region,
                              const PiecewiseValueFunction& vf) {
        const double anchor = region.has_threshold() ? region.threshold : 1e5;
        double lo, hi;
        switch (region.kind) {
            case RegionKind::stop_below:
                lo = anchor * 1.0001;
                hi = anchor * 1e3;
                break;
            case RegionKind::stop_above:
                lo = std::max(anchor * 1e-4, 1e-6);
                hi = anchor * 0.9999;
                break;
            default:
                lo = anchor * 1e-3;
                hi = anchor * 1e3;
                break;
        }
        auto g = log_grid(lo, hi, 200);
        for (double& x : g)
            for (double bp : vf.breakpoints())
                if (bp > 0 && std::abs(x - bp) < 1e-5 * x) x *= 1.0 + 3e-5;
        return g;
    };
    if (sol.post.region.kind != RegionKind::stop_everywhere) {
        const auto grid = grid_for(sol.post.region, sol.post.vf);
        double vmax = 1;
        for (double x : grid) vmax = std::max(vmax, std::abs(sol.post.value(x)));
        const auto src = [&](double x) {
            return -(p.market.alpha + p.prefs.nu * p.mortality.mu_h()) * x;
        };
        add("post-ode-residual",
            ode_residual(sol.post.vf, src, sol.coeffs.high.r, p.market, grid) /
                (1 + vmax),
            1e-6);
    }
    if (sol.pre_region.kind != RegionKind::stop_everywhere) {
        const auto grid = grid_for(sol.pre_region, sol.pre);
        double vmax = 1;
        for (double x : grid) vmax = std::max(vmax, std::abs(sol.pre.value(x)));
        const auto src = [&](double x) {
            return -(p.market.alpha + p.prefs.nu * p.mortality.mu_l) * x -
                   p.mortality.lambda_l * sol.post.value(x);
        };
        add("pre-ode-residual",
            ode_residual(sol.pre, src, sol.coeffs.low.r, p.market, grid) / (1 + vmax),
            1e-6);
    }

    // blended-regime kernels against their integral definitions
    if (sol.regime.pre == RegionKind::never_stop &&
        sol.regime.post == RegionKind::stop_above) {
        const AlphaFunctions a = make_alpha_functions(p, sol.coeffs, sol.post);
        double worst = 0;
        for (int i = 0; i < 50; ++i) {
            const double frac = i < 32 ? 0.05 + 0.03 * i : 1.01 + 0.03 * (i - 32);
            const double x = frac * a.x_h;
            const double q1 = alpha_quadrature(p, a, x, 1);
            const double q2 = alpha_quadrature(p, a, x, 2);
            const double q3 = alpha_quadrature(p, a, x, 3);
            worst = std::max(worst, std::abs(a.alpha1(x) - q1) / std::abs(q1));
            worst = std::max(worst, std::abs(a.alpha2(x) - q2) / std::abs(q2));
            worst = std::max(worst, std::abs(a.alpha3(x) - q3) / std::abs(q3));
        }
        add("alpha-kernels", worst, 1e-6);
    }

    // Monte Carlo policy-value cross-check (deviation in units of 3 SE)
    {
        McOracleConfig mc;
        mc.n_paths = vb.mc_paths;
        mc.seed = vb.mc_seed;
        mc.horizon = 60.0;
        const double anchor = sol.pre_region.has_threshold()
                                  ? sol.pre_region.threshold
                                  : (sol.post.region.has_threshold()
                                         ? sol.post.region.threshold
                                         : 1e5);
        for (double mult : {1.6, 3.0}) {
            const double x0 = anchor * mult;
            const McEstimate e = mc_value_oracle(p, sol.pre_region, x0, mc);
            const double v = sol.value(x0, HealthState::low);
            const double dev = e.std_error > 0
                                   ? std::abs(e.estimate - v) / (3 * e.std_error)
                                   : std::abs(e.estimate - v);
            add("mc-value-x" + format_double(mult), dev, 1.0);
        }
    }

    std::ostringstream report;
    print_header(report, "verify", cfg);
    bool all = true;
    for (const auto& c : checks) {
        all = all && c.passed;
        report << (c.passed ? "PASS " : "FAIL ") << c.name << "  magnitude "
               << format_double(c.magnitude) << "  bound " << format_double(c.bound)
               << "\n";
    }
    report << (all ? "verification passed" : "verification FAILED") << "\n";
    std::cout << report.str();
    if (!opt.out_path.empty()) emit(opt.out_path, report.str());
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"closed-form optimal annuitization under a one-shot mortality shock"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CliOptions opt;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "JSON parameter file")->required();
        sub->add_option("--override", opt.overrides,
                        "dotted-path override key=value (repeatable)");
        sub->add_option("--out", opt.out_path, "write machine-readable output here");
        sub->add_option("--seed", opt.seed, "override sim.seed");
    };
    auto* solve = app.add_subcommand("solve", "thresholds and value functions");
    add_common(solve);
    solve->add_flag("--constant", opt.constant, "solve the constant-force problem");
    double mu_opt = 0;
    auto* mu_flag = solve->add_option("--mu", mu_opt, "constant force of mortality");
    auto* simulate = app.add_subcommand("simulate", "path experiment statistics");
    add_common(simulate);
    auto* sweep = app.add_subcommand("sweep", "parameter sweeps with crossings");
    add_common(sweep);
    auto* verify = app.add_subcommand("verify", "run the verification suite");
    add_common(verify);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    if (*mu_flag) opt.mu = mu_opt;

    try {
        if (solve->parsed()) return cmd_solve(opt);
        if (simulate->parsed()) return cmd_simulate(opt);
        if (sweep->parsed()) return cmd_sweep(opt);
        if (verify->parsed()) return cmd_verify(opt);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        // semantic errors inside the sim block are runtime failures, not
        // config-shape failures
        const std::string what = e.what();
        if (what.rfind("sim.", 0) == 0 || what.rfind("sweep:", 0) == 0) return 3;
        return 2;
    } catch (const AssumptionViolation& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

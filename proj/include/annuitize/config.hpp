#ifndef ANNUITIZE_CONFIG_HPP
#define ANNUITIZE_CONFIG_HPP

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "annuitize/errors.hpp"
#include "annuitize/monte_carlo.hpp"
#include "annuitize/params.hpp"
#include "annuitize/sensitivity.hpp"

namespace annuitize {

struct SweepBlock {
    SweepParameter parameter = SweepParameter::Delta;
    double lo = 0;
    double hi = 0;
    std::size_t n_points = 2;
};

struct GridBlock {
    double x_lo = 0;
    double x_hi = 0;
    std::size_t n = 0;
};

/// Knobs of the verification command; the scale factors deliberately perturb
/// the solved boundaries for fault-injection runs.
struct VerifyBlock {
    std::size_t mc_paths = 50000;
    std::uint64_t mc_seed = 20240229;
    double threshold_scale_pre = 1.0;
    double threshold_scale_post = 1.0;
};

/**
 * Parsed run configuration: the model parameter tree plus the optional
 * command-specific blocks. Unknown keys are rejected.
 */
struct RunConfig {
    ModelParams params;
    std::optional<SimConfig> sim;
    std::optional<SweepBlock> sweep;
    std::optional<GridBlock> grid;
    std::optional<VerifyBlock> verify;
};

namespace detail {

using json = nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& scope,
                           std::initializer_list<const char*> known) {
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ConfigError(scope + key + ": unknown key");
    }
}

inline double need_num(const json& obj, const std::string& scope, const char* key) {
    if (!obj.contains(key)) throw ConfigError(scope + key + ": required");
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(scope + key + ": must be a number");
    return v.get<double>();
}

inline std::uint64_t need_uint(const json& obj, const std::string& scope,
                               const char* key) {
    if (!obj.contains(key)) throw ConfigError(scope + key + ": required");
    const auto& v = obj.at(key);
    if (!v.is_number_integer() || v.get<double>() < 0)
        throw ConfigError(scope + key + ": must be a nonnegative integer");
    return v.get<std::uint64_t>();
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
    using detail::need_num;
    using detail::need_uint;
    if (!j.is_object()) throw ConfigError("config root must be an object");
    detail::reject_unknown(j, "", {"market", "prefs", "pricing", "mortality", "sim",
                                   "sweep", "grid", "verify"});
    for (const char* block : {"market", "prefs", "pricing", "mortality"})
        if (!j.contains(block)) throw ConfigError(std::string(block) + ": required");

    RunConfig cfg;
    const auto& market = j.at("market");
    detail::reject_unknown(market, "market.", {"theta", "alpha", "sigma"});
    cfg.params.market.theta = need_num(market, "market.", "theta");
    cfg.params.market.alpha = need_num(market, "market.", "alpha");
    cfg.params.market.sigma = need_num(market, "market.", "sigma");

    const auto& prefs = j.at("prefs");
    detail::reject_unknown(prefs, "prefs.", {"rho", "nu"});
    cfg.params.prefs.rho = need_num(prefs, "prefs.", "rho");
    cfg.params.prefs.nu = need_num(prefs, "prefs.", "nu");

    const auto& pricing = j.at("pricing");
    detail::reject_unknown(pricing, "pricing.", {"rho_hat", "mu_hat", "K"});
    cfg.params.pricing.rho_hat = need_num(pricing, "pricing.", "rho_hat");
    cfg.params.pricing.mu_hat = need_num(pricing, "pricing.", "mu_hat");
    cfg.params.pricing.K = need_num(pricing, "pricing.", "K");

    const auto& mort = j.at("mortality");
    detail::reject_unknown(mort, "mortality.", {"mu_l", "delta", "lambda_l"});
    cfg.params.mortality.mu_l = need_num(mort, "mortality.", "mu_l");
    cfg.params.mortality.delta = need_num(mort, "mortality.", "delta");
    cfg.params.mortality.lambda_l = need_num(mort, "mortality.", "lambda_l");

    if (j.contains("sim")) {
        const auto& sim = j.at("sim");
        detail::reject_unknown(sim, "sim.", {"n_paths", "dt", "horizon", "x0", "seed"});
        SimConfig s;
        s.n_paths = static_cast<std::size_t>(need_uint(sim, "sim.", "n_paths"));
        s.dt = need_num(sim, "sim.", "dt");
        s.horizon = need_num(sim, "sim.", "horizon");
        s.x0 = need_num(sim, "sim.", "x0");
        s.seed = need_uint(sim, "sim.", "seed");
        cfg.sim = s;
    }
    if (j.contains("sweep")) {
        const auto& sw = j.at("sweep");
        detail::reject_unknown(sw, "sweep.", {"parameter", "lo", "hi", "n_points"});
        SweepBlock b;
        if (!sw.contains("parameter")) throw ConfigError("sweep.parameter: required");
        const std::string which = sw.at("parameter").get<std::string>();
        if (which == "delta")
            b.parameter = SweepParameter::Delta;
        else if (which == "lambda_l")
            b.parameter = SweepParameter::Lambda;
        else
            throw ConfigError("sweep.parameter: must be \"delta\" or \"lambda_l\"");
        b.lo = need_num(sw, "sweep.", "lo");
        b.hi = need_num(sw, "sweep.", "hi");
        b.n_points = static_cast<std::size_t>(need_uint(sw, "sweep.", "n_points"));
        cfg.sweep = b;
    }
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        detail::reject_unknown(g, "grid.", {"x_lo", "x_hi", "n"});
        GridBlock b;
        b.x_lo = need_num(g, "grid.", "x_lo");
        b.x_hi = need_num(g, "grid.", "x_hi");
        b.n = static_cast<std::size_t>(need_uint(g, "grid.", "n"));
        cfg.grid = b;
    }
    if (j.contains("verify")) {
        const auto& v = j.at("verify");
        detail::reject_unknown(v, "verify.",
                               {"mc_paths", "mc_seed", "threshold_scale_pre",
                                "threshold_scale_post"});
        VerifyBlock b;
        if (v.contains("mc_paths"))
            b.mc_paths = static_cast<std::size_t>(need_uint(v, "verify.", "mc_paths"));
        if (v.contains("mc_seed")) b.mc_seed = need_uint(v, "verify.", "mc_seed");
        if (v.contains("threshold_scale_pre"))
            b.threshold_scale_pre = need_num(v, "verify.", "threshold_scale_pre");
        if (v.contains("threshold_scale_post"))
            b.threshold_scale_post = need_num(v, "verify.", "threshold_scale_post");
        cfg.verify = b;
    }
    return cfg;
}

/// Exact JSON echo of a RunConfig; parse_config(config_to_json(c)) == c.
inline nlohmann::json config_to_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["market"] = {{"theta", cfg.params.market.theta},
                   {"alpha", cfg.params.market.alpha},
                   {"sigma", cfg.params.market.sigma}};
    j["prefs"] = {{"rho", cfg.params.prefs.rho}, {"nu", cfg.params.prefs.nu}};
    j["pricing"] = {{"rho_hat", cfg.params.pricing.rho_hat},
                    {"mu_hat", cfg.params.pricing.mu_hat},
                    {"K", cfg.params.pricing.K}};
    j["mortality"] = {{"mu_l", cfg.params.mortality.mu_l},
                      {"delta", cfg.params.mortality.delta},
                      {"lambda_l", cfg.params.mortality.lambda_l}};
    if (cfg.sim) {
        j["sim"] = {{"n_paths", cfg.sim->n_paths},
                    {"dt", cfg.sim->dt},
                    {"horizon", cfg.sim->horizon},
                    {"x0", cfg.sim->x0},
                    {"seed", cfg.sim->seed}};
    }
    if (cfg.sweep) {
        j["sweep"] = {{"parameter", cfg.sweep->parameter == SweepParameter::Delta
                                        ? "delta"
                                        : "lambda_l"},
                      {"lo", cfg.sweep->lo},
                      {"hi", cfg.sweep->hi},
                      {"n_points", cfg.sweep->n_points}};
    }
    if (cfg.grid) {
        j["grid"] = {{"x_lo", cfg.grid->x_lo}, {"x_hi", cfg.grid->x_hi},
                     {"n", cfg.grid->n}};
    }
    if (cfg.verify) {
        j["verify"] = {{"mc_paths", cfg.verify->mc_paths},
                       {"mc_seed", cfg.verify->mc_seed},
                       {"threshold_scale_pre", cfg.verify->threshold_scale_pre},
                       {"threshold_scale_post", cfg.verify->threshold_scale_post}};
    }
    return j;
}

/**
 * Apply a dotted-path override "a.b.c=value" onto the raw JSON document.
 * Values parse as JSON scalars (numbers, booleans, strings fall back to raw).
 */
inline void apply_override(nlohmann::json& j, const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override '" + spec + "': expected key.path=value");
    const std::string path = spec.substr(0, eq);
    const std::string raw = spec.substr(eq + 1);
    nlohmann::json value;
    try {
        value = nlohmann::json::parse(raw);
    } catch (...) {
        value = raw;  // unquoted strings
    }
    nlohmann::json* node = &j;
    std::size_t start = 0;
    for (;;) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot - start);
        if (key.empty()) throw ConfigError("override '" + spec + "': empty path segment");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

/// Shortest decimal representation that round-trips to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace annuitize

#endif  // ANNUITIZE_CONFIG_HPP

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "annuitize/config.hpp"
#include "test_support.hpp"

#ifndef ANNUITIZE_CLI_BINARY
#error "ANNUITIZE_CLI_BINARY must be defined by the build"
#endif
#ifndef ANNUITIZE_SOURCE_DIR
#error "ANNUITIZE_SOURCE_DIR must be defined by the build"
#endif

using namespace annuitize;

namespace {

struct RunResult {
    int exit_code;
    std::string stdout_text;
    std::string stderr_text;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run_cli(const std::string& args) {
    static int counter = 0;
    const std::string out = "/tmp/annuitize_cli_out_" + std::to_string(counter);
    const std::string err = "/tmp/annuitize_cli_err_" + std::to_string(counter);
    ++counter;
    const std::string cmd = std::string(ANNUITIZE_CLI_BINARY) + " " + args + " > " +
                            out + " 2> " + err;
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WEXITSTATUS(status);
    r.stdout_text = slurp(out);
    r.stderr_text = slurp(err);
    std::remove(out.c_str());
    std::remove(err.c_str());
    return r;
}

const std::string kBaseline = std::string(ANNUITIZE_SOURCE_DIR) + "/configs/baseline.json";

std::string write_temp_config(const nlohmann::json& j, const std::string& name) {
    const std::string path = "/tmp/annuitize_test_" + name + ".json";
    std::ofstream out(path);
    out << j.dump(2);
    return path;
}

nlohmann::json baseline_json() {
    std::ifstream in(kBaseline);
    return nlohmann::json::parse(in);
}

}  // namespace

TEST_CASE("solve reports the published thresholds", "[cli]") {
    const RunResult r = run_cli("solve --config " + kBaseline);
    REQUIRE(r.exit_code == 0);
    CHECK(r.stdout_text.find("threshold_low: 63132.5") != std::string::npos);
    CHECK(r.stdout_text.find("threshold_high: 26431.3") != std::string::npos);
    CHECK(r.stdout_text.find("regime: pre=stop-below(wide);post=stop-below") !=
          std::string::npos);
}

TEST_CASE("solve --constant reports the benchmark threshold", "[cli]") {
    const RunResult r = run_cli("solve --constant --mu 0.04462293618920125 --config " +
                                kBaseline);
    REQUIRE(r.exit_code == 0);
    CHECK(r.stdout_text.find("threshold: 68893.4") != std::string::npos);
}

TEST_CASE("config echo re-parses identically", "[cli]") {
    const RunResult r = run_cli("solve --config " + kBaseline);
    REQUIRE(r.exit_code == 0);
    const std::string marker = "# config: ";
    const auto pos = r.stdout_text.find(marker);
    REQUIRE(pos != std::string::npos);
    const auto eol = r.stdout_text.find('\n', pos);
    const std::string echo =
        r.stdout_text.substr(pos + marker.size(), eol - pos - marker.size());
    const RunConfig from_echo = parse_config(nlohmann::json::parse(echo));
    const RunConfig from_file = parse_config(baseline_json());
    CHECK(config_to_json(from_echo) == config_to_json(from_file));
}

TEST_CASE("missing required key exits 2 and names the key", "[cli]") {
    nlohmann::json j = baseline_json();
    j["market"].erase("sigma");
    const std::string path = write_temp_config(j, "missing_sigma");
    const RunResult r = run_cli("solve --config " + path);
    CHECK(r.exit_code == 2);
    CHECK(r.stderr_text.find("market.sigma: required") != std::string::npos);
    std::remove(path.c_str());
}

TEST_CASE("unknown keys are rejected", "[cli]") {
    nlohmann::json j = baseline_json();
    j["market"]["drift"] = 0.1;
    const std::string path = write_temp_config(j, "unknown_key");
    const RunResult r = run_cli("solve --config " + path);
    CHECK(r.exit_code == 2);
    CHECK(r.stderr_text.find("market.drift: unknown key") != std::string::npos);
    std::remove(path.c_str());
}

TEST_CASE("ill-posed parameters exit 2 naming the assumption", "[cli]") {
    const RunResult r = run_cli("solve --config " + kBaseline +
                                " --override market.theta=0.9");
    CHECK(r.exit_code == 2);
    CHECK(r.stderr_text.find("well-posedness") != std::string::npos);
}

TEST_CASE("simulate: zero paths exit 3, identical seeds give identical bytes",
          "[cli][slow]") {
    const RunResult bad =
        run_cli("simulate --config " + kBaseline + " --override sim.n_paths=0");
    CHECK(bad.exit_code == 3);

    const std::string args = "simulate --config " + kBaseline +
                             " --override sim.n_paths=20000 --seed 42 --out ";
    const RunResult a = run_cli(args + "/tmp/annuitize_sim_a.csv");
    const RunResult b = run_cli(args + "/tmp/annuitize_sim_b.csv");
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);
    const std::string csv_a = slurp("/tmp/annuitize_sim_a.csv");
    const std::string csv_b = slurp("/tmp/annuitize_sim_b.csv");
    CHECK(csv_a == csv_b);
    CHECK(csv_a.find("n_paths,dt,frac_total,frac_pre,frac_post,mean_time,se_frac,"
                     "se_time,seed") == 0);
    std::remove("/tmp/annuitize_sim_a.csv");
    std::remove("/tmp/annuitize_sim_b.csv");
}

TEST_CASE("simulate reproduces the reference pre-shock fraction", "[cli][slow]") {
    const RunResult r = run_cli("simulate --config " + kBaseline +
                                " --seed 42 --out /tmp/annuitize_full.csv");
    REQUIRE(r.exit_code == 0);
    std::ifstream in("/tmp/annuitize_full.csv");
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    std::stringstream ss(row);
    std::string field;
    for (int i = 0; i < 4; ++i) std::getline(ss, field, ',');  // frac_pre
    const double frac_pre = std::strtod(field.c_str(), nullptr);
    CHECK(frac_pre >= 0.212);
    CHECK(frac_pre <= 0.222);
    std::remove("/tmp/annuitize_full.csv");
}

TEST_CASE("simulate CSV row re-parses to full precision", "[cli][slow]") {
    const RunResult r = run_cli("simulate --config " + kBaseline +
                                " --override sim.n_paths=5000 --out /tmp/annuitize_rt.csv");
    REQUIRE(r.exit_code == 0);
    std::ifstream in("/tmp/annuitize_rt.csv");
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    // third field is frac_total; the shortest-round-trip text must parse back
    // to a double that prints identically
    std::stringstream ss(row);
    std::string field;
    for (int i = 0; i < 3; ++i) std::getline(ss, field, ',');
    const double parsed = std::strtod(field.c_str(), nullptr);
    CHECK(format_double(parsed) == field);
    std::remove("/tmp/annuitize_rt.csv");
}

TEST_CASE("sweep emits rows and crossing comments", "[cli][slow]") {
    const std::string cfg = std::string(ANNUITIZE_SOURCE_DIR) + "/configs/sweep_delta.json";
    const RunResult r = run_cli("sweep --config " + cfg +
                                " --override sweep.n_points=60 --out /tmp/annuitize_sw.csv");
    REQUIRE(r.exit_code == 0);
    const std::string csv = slurp("/tmp/annuitize_sw.csv");
    CHECK(csv.find("param,value,delta_l,delta_h,M_l,M_h,x_l,x_h,regime,status") == 0);
    CHECK(csv.find("# crossing M = 0.0175") != std::string::npos);
    CHECK(csv.find("# crossing threshold = none") != std::string::npos);
    std::remove("/tmp/annuitize_sw.csv");
}

TEST_CASE("sweep with a degenerate range exits 3", "[cli]") {
    const std::string cfg = std::string(ANNUITIZE_SOURCE_DIR) + "/configs/sweep_delta.json";
    const RunResult r = run_cli("sweep --config " + cfg +
                                " --override sweep.lo=0.1 --override sweep.hi=0.1");
    CHECK(r.exit_code == 3);
}

TEST_CASE("verify passes on the baseline and fails under fault injection",
          "[cli][slow]") {
    const std::string fast = " --override verify.mc_paths=20000";
    const RunResult ok = run_cli("verify --config " + kBaseline + fast);
    INFO(ok.stdout_text);
    REQUIRE(ok.exit_code == 0);
    CHECK(ok.stdout_text.find("verification passed") != std::string::npos);

    const RunResult bad = run_cli("verify --config " + kBaseline + fast +
                                  " --override verify.threshold_scale_pre=1.01");
    INFO(bad.stdout_text);
    CHECK(bad.exit_code == 1);
    CHECK(bad.stdout_text.find("FAIL pre-smooth-pasting") != std::string::npos);
}

TEST_CASE("verify on a zero-cost config runs the reduced suite", "[cli][slow]") {
    const RunResult r = run_cli("verify --config " + kBaseline +
                                " --override pricing.K=0 --override verify.mc_paths=20000");
    INFO(r.stdout_text);
    REQUIRE(r.exit_code == 0);
    // no boundary to check: the pasting lines must be absent
    CHECK(r.stdout_text.find("pre-value-matching") == std::string::npos);
    CHECK(r.stdout_text.find("post-value-matching") == std::string::npos);
}

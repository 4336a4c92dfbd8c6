#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dartkit/errors.hpp"
#include "dartkit/pipeline.hpp"

using namespace dartkit;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "dartkit_cli_test" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

}  // namespace

TEST_CASE("configuration validation reports every problem at once") {
    RunConfig c;
    c.panel_path = "/nonexistent/panel.csv";
    c.stacks_path = "/nonexistent/stacks.csv";
    c.out_dir = "";
    c.splits.train = {{2021, 1, 1}, {2021, 6, 1}};
    c.splits.validation = {{2021, 5, 1}, {2021, 8, 1}};  // overlaps train
    c.splits.test = {{2021, 8, 1}, {2022, 1, 1}};
    c.tau_grid = {};
    c.k_reference = 0.0;
    try {
        c.validate();
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("panel file not found") != std::string::npos);
        CHECK(msg.find("stacks file not found") != std::string::npos);
        CHECK(msg.find("out_dir is empty") != std::string::npos);
        CHECK(msg.find("splits:") != std::string::npos);
        // The offending ranges are spelled out.
        CHECK(msg.find("2021-06-01") != std::string::npos);
        CHECK(msg.find("2021-05-01") != std::string::npos);
        CHECK(msg.find("empty tau grid") != std::string::npos);
        CHECK(msg.find("k_reference must be positive") != std::string::npos);
    }
}

TEST_CASE("configuration documents round trip") {
    RunConfig c;
    c.market = Market::ERCOT;
    c.panel_path = "panel.csv";
    c.stacks_path = "stacks.csv";
    c.out_dir = "out";
    c.splits.train = {{2019, 1, 1}, {2021, 1, 1}};
    c.splits.validation = {{2021, 1, 1}, {2021, 7, 1}};
    c.splits.test = {{2021, 7, 1}, {2022, 1, 1}};
    c.gamma_grid_inc = {10.0, 30.0};
    c.tau_grid = {0.6, 0.8};
    c.mode = StrategyMode::Restricted;
    c.min_bucket_trades = 25;
    c.model_zones = {"LZ_HOUSTON"};
    const RunConfig back = RunConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
    CHECK(back.market == Market::ERCOT);
    CHECK(back.mode == StrategyMode::Restricted);
    CHECK(back.min_bucket_trades == 25);
    CHECK(back.gamma_grid_inc == c.gamma_grid_inc);
    CHECK(back.model_zones == c.model_zones);
}

TEST_CASE("fixture generation is seed-deterministic") {
    SynthMarketSpec spec;
    spec.days = 5;
    const fs::path a = scratch("fix_a");
    const fs::path b = scratch("fix_b");
    const fs::path c = scratch("fix_c");
    write_fixture(spec, a.string());
    write_fixture(spec, b.string());
    spec.seed = 2;
    write_fixture(spec, c.string());
    for (const char* name : {"panel.csv", "stacks.csv"}) {
        CHECK(slurp((a / name).string()) == slurp((b / name).string()));
        CHECK(slurp((a / name).string()) != slurp((c / name).string()));
    }
}

TEST_CASE("planted spike rates are recovered without boosts") {
    SynthMarketSpec spec;
    spec.zones = {"Z"};
    spec.mean_loads = {1000.0};
    spec.days = 2084;  // just over 50000 hours
    spec.hour_boost = 0.0;
    spec.persistence_boost = 0.0;
    const SynthMarket m = synth_market(spec);
    std::size_t neg = 0, pos = 0;
    for (const auto& r : m.panel.rows) {
        if (r.dart <= -spec.gamma_neg) ++neg;
        if (r.dart >= spec.gamma_pos) ++pos;
    }
    const double n = static_cast<double>(m.panel.rows.size());
    CHECK(std::abs(neg / n - spec.spike_rate_neg) < 0.01);
    CHECK(std::abs(pos / n - spec.spike_rate_pos) < 0.01);
}

TEST_CASE("logistic sampler is deterministic and balanced at zero") {
    const auto a = synth_logistic(7, {0.0, 1.0}, 4000);
    const auto b = synth_logistic(7, {0.0, 1.0}, 4000);
    REQUIRE(a.size() == b.size());
    std::size_t ones = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].x == b[i].x);
        CHECK(a[i].y_neg == b[i].y_neg);
        CHECK(a[i].y_neg == a[i].y_pos);
        ones += static_cast<std::size_t>(a[i].y_neg);
    }
    // Symmetric features and zero intercept: labels near half.
    CHECK(std::abs(static_cast<double>(ones) / 4000.0 - 0.5) < 0.05);
}

TEST_CASE("end-to-end run writes a deterministic manifest") {
    const fs::path dir = scratch("run");
    SynthMarketSpec spec;
    const std::string config_path = cmd_synth(spec, dir.string());
    CHECK(fs::exists(config_path));

    std::ostringstream err;
    REQUIRE(cmd_run(config_path, err) == 0);
    CHECK(err.str().empty());

    const RunConfig cfg = load_run_config(config_path);
    const fs::path manifest = fs::path(cfg.out_dir) / "manifest.json";
    REQUIRE(fs::exists(manifest));
    const std::string first = slurp(manifest.string());
    const nlohmann::json j = nlohmann::json::parse(first);
    REQUIRE(j.contains("files"));
    CHECK(j["files"].size() >= 6);
    for (const auto& f : j["files"]) {
        CHECK(f.contains("name"));
        CHECK(f["hash"].get<std::string>().size() == 16);
        const std::string name = f["name"].get<std::string>();
        const bool found = fs::exists(fs::path(cfg.out_dir) / name) ||
                           fs::exists(fs::path(cfg.out_dir) / "models" / name);
        CHECK(found);
    }
    // The manifest echoes the configuration it ran under.
    CHECK(j.contains("config"));
    CHECK(RunConfig::from_json(j["config"]).to_json() == cfg.to_json());

    // Re-running the same configuration reproduces the manifest byte for byte.
    std::ostringstream err2;
    REQUIRE(cmd_run(config_path, err2) == 0);
    CHECK(slurp(manifest.string()) == first);

    // The audit subcommand passes on the same fixture.
    std::ostringstream out3, err3;
    REQUIRE(cmd_audit(config_path, out3, err3) == 0);
    CHECK(out3.str().find("AUDIT PASS") != std::string::npos);

    // Calibration-only and benchmark-metrics subcommands write their files.
    const fs::path calib_dir = scratch("calib");
    std::ostringstream err4;
    REQUIRE(cmd_calibrate(config_path, err4, calib_dir.string()) == 0);
    CHECK(fs::exists(calib_dir / "impact_params.json"));
    const fs::path metrics_dir = scratch("metrics");
    std::ostringstream err5;
    REQUIRE(cmd_metrics(config_path, err5, metrics_dir.string()) == 0);
    CHECK(fs::exists(metrics_dir / "metrics.csv"));
}

TEST_CASE("broken configurations fail with a diagnostic") {
    const fs::path dir = scratch("bad");
    const std::string path = (dir / "config.json").string();
    {
        std::ofstream out(path);
        out << "{ not json";
    }
    std::ostringstream err;
    CHECK(cmd_run(path, err) != 0);
    CHECK(err.str().find("error") != std::string::npos);

    std::ostringstream err2;
    CHECK(cmd_run((dir / "missing.json").string(), err2) != 0);
    CHECK_FALSE(err2.str().empty());
}

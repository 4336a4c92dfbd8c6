#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dartkit/backtest.hpp"
#include "dartkit/synth.hpp"

namespace dartkit {

// Single configuration document driving the whole pipeline:
// ingest -> features -> fit/tune -> calibrate -> optimize -> backtest -> report.
struct RunConfig {
    Market market = Market::NYISO;
    std::string panel_path;
    std::string stacks_path;
    std::string out_dir;
    SplitSpec splits;
    FeatureSpec features;

    double gamma_neg = 30.0;  // labeling defaults before threshold tuning
    double gamma_pos = 5.0;
    std::vector<double> gamma_grid_inc{5.0, 8.0, 10.0, 30.0};
    std::vector<double> gamma_grid_dec{2.0, 5.0, 10.0, 15.0, 30.0};
    std::vector<double> tau_grid{0.5, 0.6, 0.7, 0.75, 0.8, 0.9, 0.95};

    double delta_q = 1000.0;     // impact probe size, MWh
    int top_n = 10;              // spike hours per bucket for k_E
    std::string selection_zone;  // zone ranking spike hours; default: first
    std::string reference_zone;  // k_z anchor; default: first zone
    double k_reference = 0.05;

    StrategyMode mode = StrategyMode::Clipped;
    std::size_t min_bucket_trades = 50;  // restricted-mode admission floor
    std::uint64_t seed = 1;              // synthetic-data subcommands only
    std::vector<std::string> model_zones;  // empty: every panel zone

    static RunConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    // Collects every violation (missing paths, unordered splits, bad grids)
    // into one ConfigError before any work starts.
    void validate() const;
};

RunConfig load_run_config(const std::string& path);
void save_run_config(const std::string& path, const RunConfig& config);

struct PipelineResult {
    BacktestReport report;
    std::vector<SpikeModel> models;
    ImpactParams params;
    AuditReport audit;
    std::vector<std::string> files;  // everything listed in the manifest
    std::string manifest_path;
};

// Deterministic end-to-end run; writes report artifacts, model and impact
// documents, and a manifest embedding the config echo plus a content hash
// per artifact.
PipelineResult run_pipeline(const RunConfig& config);

// CLI-facing wrappers: exit status 0 on success, nonzero with a diagnostic
// on `err` otherwise.
int cmd_run(const std::string& config_path, std::ostream& err,
            const std::optional<std::string>& out_override = std::nullopt,
            const std::optional<StrategyMode>& mode_override = std::nullopt);

// Writes a fixture (panel + stacks) plus a ready-to-run config document into
// `out_dir`; returns the config path.
std::string cmd_synth(const SynthMarketSpec& spec, const std::string& out_dir);

int cmd_audit(const std::string& config_path, std::ostream& out, std::ostream& err);
int cmd_calibrate(const std::string& config_path, std::ostream& err,
                  const std::optional<std::string>& out_override = std::nullopt);
int cmd_metrics(const std::string& config_path, std::ostream& err,
                const std::optional<std::string>& out_override = std::nullopt);

}  // namespace dartkit

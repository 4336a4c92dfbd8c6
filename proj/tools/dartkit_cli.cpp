#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dartkit/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"DART spread modeling, sizing and backtesting pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string mode_str;
    int jobs = 1;  // reserved; hours and fits are independent

    auto add_common = [&](CLI::App* sub, bool need_config) {
        auto* c = sub->add_option("--config", config_path, "configuration document (JSON)");
        if (need_config) c->required();
        sub->add_option("--out", out_dir, "output directory override");
        sub->add_option("--jobs", jobs, "worker count");
    };

    CLI::App* run = app.add_subcommand("run", "execute the full pipeline");
    add_common(run, true);
    run->add_option("--mode", mode_str, "unconstrained|clipped|restricted");

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic fixture");
    std::uint64_t seed = 1;
    int days = 60;
    synth->add_option("--seed", seed, "generator seed");
    synth->add_option("--days", days, "panel length in days");
    synth->add_option("--out", out_dir, "fixture directory")->required();

    CLI::App* audit = app.add_subcommand("audit", "run the feature leakage audit");
    add_common(audit, true);

    CLI::App* calibrate = app.add_subcommand("calibrate", "calibrate impact coefficients only");
    add_common(calibrate, true);

    CLI::App* metrics = app.add_subcommand("metrics", "classification metrics only");
    add_common(metrics, true);

    CLI11_PARSE(app, argc, argv);

    auto out_override = [&]() -> std::optional<std::string> {
        return out_dir.empty() ? std::nullopt : std::make_optional(out_dir);
    };

    try {
        if (run->parsed()) {
            std::optional<dartkit::StrategyMode> mode;
            if (!mode_str.empty()) mode = dartkit::parse_strategy_mode(mode_str);
            return dartkit::cmd_run(config_path, std::cerr, out_override(), mode);
        }
        if (synth->parsed()) {
            dartkit::SynthMarketSpec spec;
            spec.seed = seed;
            spec.days = days;
            const std::string config = dartkit::cmd_synth(spec, out_dir);
            std::cout << config << "\n";
            return 0;
        }
        if (audit->parsed()) return dartkit::cmd_audit(config_path, std::cout, std::cerr);
        if (calibrate->parsed())
            return dartkit::cmd_calibrate(config_path, std::cerr, out_override());
        if (metrics->parsed()) return dartkit::cmd_metrics(config_path, std::cerr, out_override());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

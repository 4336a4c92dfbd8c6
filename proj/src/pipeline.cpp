#include "dartkit/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dartkit/csv.hpp"
#include "dartkit/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dartkit {

namespace {

json range_to_json(const DateRange& r) {
    return json::array({format_date(r.begin), format_date(r.end)});
}

DateRange range_from_json(const json& j) {
    return DateRange{parse_date(j.at(0).get<std::string>()), parse_date(j.at(1).get<std::string>())};
}

std::string range_str(const DateRange& r) {
    return "[" + format_date(r.begin) + ", " + format_date(r.end) + ")";
}

}  // namespace

json RunConfig::to_json() const {
    json j;
    j["market"] = to_string(market);
    j["panel"] = panel_path;
    j["stacks"] = stacks_path;
    j["out_dir"] = out_dir;
    j["splits"] = {{"train", range_to_json(splits.train)},
                   {"validation", range_to_json(splits.validation)},
                   {"test", range_to_json(splits.test)}};
    j["features"] = {{"lag_hours", features.lag_hours},
                     {"load_error_lags", features.load_error_lags},
                     {"include_system_load", features.include_system_load},
                     {"cal_weekend", features.cal_weekend},
                     {"cal_holiday", features.cal_holiday},
                     {"cal_hour_of_day", features.cal_hour_of_day},
                     {"cal_month", features.cal_month},
                     {"cal_season", features.cal_season},
                     {"zones_pooled", features.zones_pooled}};
    j["labels"] = {{"gamma_neg", gamma_neg}, {"gamma_pos", gamma_pos}};
    j["grids"] = {{"gamma_inc", gamma_grid_inc}, {"gamma_dec", gamma_grid_dec}, {"tau", tau_grid}};
    j["impact"] = {{"delta_q", delta_q},
                   {"top_n", top_n},
                   {"selection_zone", selection_zone},
                   {"reference_zone", reference_zone},
                   {"k_reference", k_reference}};
    j["strategy"] = {{"mode", to_string(mode)}, {"min_bucket_trades", min_bucket_trades}};
    j["seed"] = seed;
    j["model_zones"] = model_zones;
    return j;
}

RunConfig RunConfig::from_json(const json& j) {
    RunConfig c;
    c.market = parse_market(j.at("market").get<std::string>());
    c.panel_path = j.at("panel").get<std::string>();
    c.stacks_path = j.at("stacks").get<std::string>();
    c.out_dir = j.at("out_dir").get<std::string>();
    const json& s = j.at("splits");
    c.splits.train = range_from_json(s.at("train"));
    c.splits.validation = range_from_json(s.at("validation"));
    c.splits.test = range_from_json(s.at("test"));
    if (j.contains("features")) {
        const json& f = j.at("features");
        if (f.contains("lag_hours")) c.features.lag_hours = f.at("lag_hours").get<std::vector<int>>();
        if (f.contains("load_error_lags"))
            c.features.load_error_lags = f.at("load_error_lags").get<std::vector<int>>();
        if (f.contains("include_system_load"))
            c.features.include_system_load = f.at("include_system_load").get<bool>();
        if (f.contains("cal_weekend")) c.features.cal_weekend = f.at("cal_weekend").get<bool>();
        if (f.contains("cal_holiday")) c.features.cal_holiday = f.at("cal_holiday").get<bool>();
        if (f.contains("cal_hour_of_day"))
            c.features.cal_hour_of_day = f.at("cal_hour_of_day").get<bool>();
        if (f.contains("cal_month")) c.features.cal_month = f.at("cal_month").get<bool>();
        if (f.contains("cal_season")) c.features.cal_season = f.at("cal_season").get<bool>();
        if (f.contains("zones_pooled"))
            c.features.zones_pooled = f.at("zones_pooled").get<std::vector<std::string>>();
    }
    if (j.contains("labels")) {
        c.gamma_neg = j.at("labels").at("gamma_neg").get<double>();
        c.gamma_pos = j.at("labels").at("gamma_pos").get<double>();
    }
    if (j.contains("grids")) {
        const json& g = j.at("grids");
        if (g.contains("gamma_inc")) c.gamma_grid_inc = g.at("gamma_inc").get<std::vector<double>>();
        if (g.contains("gamma_dec")) c.gamma_grid_dec = g.at("gamma_dec").get<std::vector<double>>();
        if (g.contains("tau")) c.tau_grid = g.at("tau").get<std::vector<double>>();
    }
    if (j.contains("impact")) {
        const json& i = j.at("impact");
        if (i.contains("delta_q")) c.delta_q = i.at("delta_q").get<double>();
        if (i.contains("top_n")) c.top_n = i.at("top_n").get<int>();
        if (i.contains("selection_zone")) c.selection_zone = i.at("selection_zone").get<std::string>();
        if (i.contains("reference_zone")) c.reference_zone = i.at("reference_zone").get<std::string>();
        if (i.contains("k_reference")) c.k_reference = i.at("k_reference").get<double>();
    }
    if (j.contains("strategy")) {
        const json& st = j.at("strategy");
        if (st.contains("mode")) c.mode = parse_strategy_mode(st.at("mode").get<std::string>());
        if (st.contains("min_bucket_trades"))
            c.min_bucket_trades = st.at("min_bucket_trades").get<std::size_t>();
    }
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("model_zones"))
        c.model_zones = j.at("model_zones").get<std::vector<std::string>>();
    return c;
}

void RunConfig::validate() const {
    std::vector<std::string> issues;
    if (!fs::exists(panel_path)) issues.push_back("panel file not found: " + panel_path);
    if (!fs::exists(stacks_path)) issues.push_back("stacks file not found: " + stacks_path);
    if (out_dir.empty()) issues.push_back("out_dir is empty");
    try {
        splits.validate();
    } catch (const std::exception& e) {
        issues.push_back(std::string("splits: ") + e.what() + " (train " + range_str(splits.train) +
                         ", validation " + range_str(splits.validation) + ", test " +
                         range_str(splits.test) + ")");
    }
    try {
        features.validate();
    } catch (const std::exception& e) {
        issues.push_back(std::string("features: ") + e.what());
    }
    if (!(gamma_neg > 0) || !(gamma_pos > 0)) issues.push_back("label thresholds must be positive");
    if (gamma_grid_inc.empty() || gamma_grid_dec.empty()) issues.push_back("empty gamma grid");
    if (tau_grid.empty()) issues.push_back("empty tau grid");
    for (double t : tau_grid)
        if (!(t > 0.0 && t < 1.0)) issues.push_back("tau must lie in (0, 1)");
    if (!(delta_q > 0)) issues.push_back("delta_q must be positive");
    if (top_n <= 0) issues.push_back("top_n must be positive");
    if (!(k_reference > 0)) issues.push_back("k_reference must be positive");
    if (!issues.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& i : issues) msg += "\n  - " + i;
        throw ConfigError(msg);
    }
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    try {
        return RunConfig::from_json(j);
    } catch (const json::exception& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
}

void save_run_config(const std::string& path, const RunConfig& config) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write config '" + path + "'");
    out << config.to_json().dump(2) << "\n";
}

namespace {

std::vector<LabeledObservation> in_range(const std::vector<LabeledObservation>& obs,
                                         const DateRange& range) {
    std::vector<LabeledObservation> out;
    for (const auto& o : obs)
        if (range.contains(o.timestamp)) out.push_back(o);
    return out;
}

std::vector<LabeledObservation> zone_subset(const std::vector<LabeledObservation>& obs,
                                            const std::string& zone) {
    std::vector<LabeledObservation> out;
    for (const auto& o : obs)
        if (o.zone == zone) out.push_back(o);
    return out;
}

struct PreparedData {
    Panel panel;
    std::vector<BidStack> stacks;
    MarketCalendar calendar;
    FeatureSpec spec;
    AuditReport audit;
    std::vector<LabeledObservation> train, validation, test;
    std::vector<std::string> zones;  // zones to model
};

PreparedData prepare(const RunConfig& config) {
    PreparedData d;
    d.panel = load_panel(config.panel_path, config.market);
    d.stacks = load_stacks(config.stacks_path);
    d.calendar = MarketCalendar::standard(config.market);

    d.spec = config.features;
    if (d.spec.zones_pooled.empty()) d.spec.zones_pooled = d.panel.zones;
    d.zones = config.model_zones.empty() ? d.spec.zones_pooled : config.model_zones;

    FeatureSet fs = build_features(d.panel, d.spec, d.calendar, config.gamma_neg, config.gamma_pos);
    d.audit = leakage_audit(fs.observations, d.panel, d.spec, d.calendar);
    if (!d.audit.pass) {
        std::string bad;
        for (const auto& c : d.audit.columns)
            if (!c.pass) bad += (bad.empty() ? "" : ", ") + c.column;
        throw InvariantViolation("leakage audit failed for columns: " + bad);
    }

    const Standardizer scaler = Standardizer::fit(fs.observations, config.splits.train);
    scaler.apply(fs.observations);

    d.train = in_range(fs.observations, config.splits.train);
    d.validation = in_range(fs.observations, config.splits.validation);
    d.test = in_range(fs.observations, config.splits.test);
    if (d.train.empty()) throw EmptySeries("no training observations in the train window");
    if (d.test.empty()) throw EmptySeries("no test observations in the test window");
    return d;
}

std::vector<SpikeModel> fit_models(const RunConfig& config, const PreparedData& d) {
    std::vector<SpikeModel> models;
    for (const auto& zone : d.zones) {
        const auto train_z = zone_subset(d.train, zone);
        const auto val_z = zone_subset(d.validation, zone);
        if (train_z.empty() || val_z.empty()) continue;
        for (Side side : {Side::INC, Side::DEC}) {
            const auto& grid = side == Side::INC ? config.gamma_grid_inc : config.gamma_grid_dec;
            try {
                TuneResult tuned = tune_thresholds(train_z, val_z, side, grid, config.tau_grid);
                tuned.model.zone = zone;
                tuned.model.side = side;
                models.push_back(std::move(tuned.model));
            } catch (const SingleClassData&) {
                // zone never spikes on this side at any grid threshold
            } catch (const EmptyGrid&) {
            }
        }
    }
    if (models.empty()) throw SingleClassData("no (zone, side) classifier could be trained");
    return models;
}

ImpactParams calibrate_impact(const RunConfig& config, const PreparedData& d) {
    EnergyCoeffSelection sel;
    sel.top_n = config.top_n;
    sel.zone = config.selection_zone.empty() ? d.panel.zones.front() : config.selection_zone;
    sel.window = config.splits.train;
    const EnergyCoeffs coeffs =
        estimate_energy_coeffs(d.stacks, d.panel, d.calendar, sel, config.delta_q);

    ImpactParams params;
    params.k_e_plus = coeffs.k_e_plus;
    params.k_e_minus = coeffs.k_e_minus;
    // Buckets without a calibration hour in the train window inherit the
    // mean coefficient of the covered buckets, so replay never stalls on a
    // season/band the calibration window did not reach.
    for (auto* side : {&params.k_e_plus, &params.k_e_minus}) {
        double total = 0.0;
        for (const auto& [b, k] : *side) total += k;
        const double fallback = total / static_cast<double>(side->size());
        for (Season s : {Season::Winter, Season::Summer, Season::Shoulder})
            for (Band band : {Band::Peak, Band::OffPeak})
                side->emplace(Bucket{s, band}, fallback);
    }
    params.reference_zone =
        config.reference_zone.empty() ? d.panel.zones.front() : config.reference_zone;
    params.k_reference = config.k_reference;
    std::map<std::string, double> sums;
    std::map<std::string, std::size_t> counts;
    for (const auto& r : d.panel.rows) {
        if (!config.splits.train.contains(r.timestamp)) continue;
        sums[r.zone] += r.zonal_load_forecast;
        counts[r.zone] += 1;
    }
    for (const auto& [zone, total] : sums)
        params.mean_loads[zone] = total / static_cast<double>(counts[zone]);
    params.k_z = calibrate_kz(params.mean_loads, params.reference_zone, params.k_reference);
    return params;
}

std::map<SigKey, BucketStat> validation_significance(const RunConfig& config,
                                                     const std::vector<SpikeModel>& models,
                                                     const PreparedData& d) {
    std::map<SigKey, std::vector<double>> bucket_pnl;
    for (const auto& model : models) {
        for (const auto& o : d.validation) {
            if (o.zone != model.zone) continue;
            if (predict(model, o.x) < model.tau) continue;
            const Bucket b = d.calendar.bucket_of(o.timestamp);
            bucket_pnl[{model.zone, b.first, b.second, model.side}].push_back(
                unit_edge(o.realized_dart, model.side));
        }
    }
    return bucket_significance(bucket_pnl, config.min_bucket_trades);
}

void write_audit_csv(const std::string& path, const AuditReport& audit) {
    CsvTable t;
    t.header = {"column", "kind", "min_slack_hours", "pass", "detail"};
    for (const auto& c : audit.columns)
        t.rows.push_back({c.column, c.kind, format_double(c.min_slack_hours),
                          c.pass ? "PASS" : "FAIL", c.detail});
    write_csv(path, t);
}

}  // namespace

PipelineResult run_pipeline(const RunConfig& config) {
    config.validate();
    PipelineResult result;
    const PreparedData d = prepare(config);
    result.audit = d.audit;
    result.models = fit_models(config, d);
    result.params = calibrate_impact(config, d);

    StrategyInputs inputs;
    inputs.models = result.models;
    inputs.payoffs = estimate_payoffs(result.models, d.validation);
    inputs.bucket_payoffs = estimate_payoffs_by_bucket(result.models, d.validation, d.calendar);
    inputs.admissible_buckets = validation_significance(config, result.models, d);
    inputs.params = result.params;
    result.report = run_strategy(inputs, d.test, d.calendar, config.mode);

    fs::create_directories(config.out_dir);
    result.files = emit_report(result.report, config.out_dir);

    const fs::path out(config.out_dir);
    fs::create_directories(out / "models");
    for (const auto& m : result.models) {
        const std::string p =
            (out / "models" / (m.zone + "_" + to_string(m.side) + ".json")).string();
        save_model(p, m);
        result.files.push_back(p);
    }
    const std::string impact_path = (out / "impact_params.json").string();
    save_impact_params(impact_path, result.params);
    result.files.push_back(impact_path);
    const std::string audit_path = (out / "audit.csv").string();
    write_audit_csv(audit_path, result.audit);
    result.files.push_back(audit_path);

    json manifest;
    manifest["config"] = config.to_json();
    manifest["files"] = json::array();
    for (const auto& f : result.files)
        manifest["files"].push_back({{"name", fs::path(f).filename().string()},
                                     {"hash", file_hash_hex(f)}});
    result.manifest_path = (out / "manifest.json").string();
    std::ofstream mout(result.manifest_path);
    if (!mout) throw IoError("cannot write manifest '" + result.manifest_path + "'");
    mout << manifest.dump(2) << "\n";
    return result;
}

int cmd_run(const std::string& config_path, std::ostream& err,
            const std::optional<std::string>& out_override,
            const std::optional<StrategyMode>& mode_override) {
    try {
        RunConfig config = load_run_config(config_path);
        if (out_override) config.out_dir = *out_override;
        if (mode_override) config.mode = *mode_override;
        run_pipeline(config);
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

std::string cmd_synth(const SynthMarketSpec& spec, const std::string& out_dir) {
    const auto paths = write_fixture(spec, out_dir);

    RunConfig config;
    config.market = spec.market;
    config.panel_path = paths[0];
    config.stacks_path = paths[1];
    config.out_dir = (fs::path(out_dir) / "report").string();
    config.gamma_neg = spec.gamma_neg;
    config.gamma_pos = spec.gamma_pos;
    config.features.zones_pooled = spec.zones;
    config.tau_grid = {0.25, 0.35, 0.5, 0.6, 0.75};
    config.min_bucket_trades = 10;
    config.selection_zone = spec.zones.front();
    config.reference_zone = spec.zones.front();
    config.seed = spec.seed;

    const std::int64_t day0 = days_from_civil(spec.start);
    const int train_days = std::max(1, 2 * spec.days / 3);
    const int val_days = std::max(1, spec.days / 5);
    auto day = [&](int n) { return civil_from_days(day0 + n); };
    config.splits.train = DateRange{day(0), day(train_days)};
    config.splits.validation = DateRange{day(train_days), day(train_days + val_days)};
    config.splits.test = DateRange{day(train_days + val_days), day(spec.days)};

    const std::string config_path = (fs::path(out_dir) / "config.json").string();
    save_run_config(config_path, config);
    return config_path;
}

int cmd_audit(const std::string& config_path, std::ostream& out, std::ostream& err) {
    try {
        RunConfig config = load_run_config(config_path);
        config.validate();
        Panel panel = load_panel(config.panel_path, config.market);
        const MarketCalendar calendar = MarketCalendar::standard(config.market);
        FeatureSpec spec = config.features;
        if (spec.zones_pooled.empty()) spec.zones_pooled = panel.zones;
        const FeatureSet fs =
            build_features(panel, spec, calendar, config.gamma_neg, config.gamma_pos);
        const AuditReport audit = leakage_audit(fs.observations, panel, spec, calendar);
        for (const auto& c : audit.columns)
            out << (c.pass ? "PASS " : "FAIL ") << c.column << " slack_hours="
                << c.min_slack_hours << (c.detail.empty() ? "" : " " + c.detail) << "\n";
        out << (audit.pass ? "AUDIT PASS" : "AUDIT FAIL") << " (" << audit.observations_checked
            << " observations)\n";
        return audit.pass ? 0 : 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_calibrate(const std::string& config_path, std::ostream& err,
                  const std::optional<std::string>& out_override) {
    try {
        RunConfig config = load_run_config(config_path);
        if (out_override) config.out_dir = *out_override;
        config.validate();
        PreparedData d;
        d.panel = load_panel(config.panel_path, config.market);
        d.stacks = load_stacks(config.stacks_path);
        d.calendar = MarketCalendar::standard(config.market);
        const ImpactParams params = calibrate_impact(config, d);
        fs::create_directories(config.out_dir);
        save_impact_params((fs::path(config.out_dir) / "impact_params.json").string(), params);
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_metrics(const std::string& config_path, std::ostream& err,
                const std::optional<std::string>& out_override) {
    try {
        RunConfig config = load_run_config(config_path);
        if (out_override) config.out_dir = *out_override;
        config.validate();
        const PreparedData d = prepare(config);
        const std::vector<SpikeModel> models = fit_models(config, d);

        CsvTable t;
        t.header = {"zone", "side", "precision", "recall", "f1", "tp", "fp", "fn", "tn"};
        for (Side side : {Side::INC, Side::DEC}) {
            const BacktestReport bench = run_benchmark(models, d.test, side);
            const auto& metrics = side == Side::INC ? bench.metrics_inc : bench.metrics_dec;
            for (const auto& [zone, m] : metrics) {
                auto opt = [](const std::optional<double>& v) {
                    return v ? format_double(*v) : std::string();
                };
                t.rows.push_back({zone, to_string(side), opt(m.precision), opt(m.recall),
                                  opt(m.f1), std::to_string(m.counts.tp),
                                  std::to_string(m.counts.fp), std::to_string(m.counts.fn),
                                  std::to_string(m.counts.tn)});
            }
        }
        fs::create_directories(config.out_dir);
        write_csv((fs::path(config.out_dir) / "metrics.csv").string(), t);
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace dartkit

#include "dartkit/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "dartkit/csv.hpp"
#include "dartkit/errors.hpp"

#include <nlohmann/json.hpp>

namespace dartkit {

void FeatureSpec::validate() const {
    if (zones_pooled.empty()) throw ConfigError("zones_pooled must be non-empty");
    auto check = [](const std::vector<int>& lags, const char* what) {
        for (int l : lags)
            if (l < 24 || l % 24 != 0)
                throw ConfigError(std::string(what) +
                                  " must be positive multiples of 24h (settled-day rule)");
    };
    check(lag_hours, "lag_hours");
    check(load_error_lags, "load_error_lags");
}

std::size_t FeatureSpec::dimension() const {
    std::size_t per_zone = 1 + lag_hours.size() + load_error_lags.size();
    std::size_t d = zones_pooled.size() * per_zone;
    if (include_system_load) ++d;
    if (cal_weekend) ++d;
    if (cal_holiday) ++d;
    if (cal_hour_of_day) ++d;
    if (cal_month) ++d;
    if (cal_season) d += 2;
    return d;
}

std::vector<std::string> FeatureSpec::column_names() const {
    std::vector<std::string> names;
    for (const auto& z : zones_pooled) {
        names.push_back(z + ".load_forecast");
        for (int l : lag_hours) names.push_back(z + ".dart_lag" + std::to_string(l));
        for (int l : load_error_lags) names.push_back(z + ".load_err_lag" + std::to_string(l));
    }
    if (include_system_load) names.push_back("system_load_forecast");
    if (cal_weekend) names.push_back("weekend");
    if (cal_holiday) names.push_back("holiday");
    if (cal_hour_of_day) names.push_back("hour_of_day");
    if (cal_month) names.push_back("month");
    if (cal_season) {
        names.push_back("winter");
        names.push_back("summer");
    }
    return names;
}

std::int64_t resolve_lag_source(const Timestamp& t, int lag_hours) {
    const std::int64_t day = t.local_day();
    const std::int64_t second_of_day = t.local_sec() - day * 86400;
    const std::int64_t source_day = day - 1 - lag_hours / 24;
    return source_day * 86400 + second_of_day;
}

namespace {

// Column kinds for audit slack computation, aligned with column_names().
enum class ColKind { Forecast, Lag, Calendar };

struct ColMeta {
    ColKind kind;
    std::string zone;  // for Forecast/Lag columns
    int lag = 0;       // for Lag columns
    bool is_load_error = false;
};

std::vector<ColMeta> column_meta(const FeatureSpec& spec) {
    std::vector<ColMeta> meta;
    for (const auto& z : spec.zones_pooled) {
        meta.push_back({ColKind::Forecast, z, 0, false});
        for (int l : spec.lag_hours) meta.push_back({ColKind::Lag, z, l, false});
        for (int l : spec.load_error_lags) meta.push_back({ColKind::Lag, z, l, true});
    }
    if (spec.include_system_load)
        meta.push_back({ColKind::Forecast, spec.zones_pooled.front(), 0, false});
    std::size_t cal = spec.dimension() - meta.size();
    for (std::size_t i = 0; i < cal; ++i) meta.push_back({ColKind::Calendar, "", 0, false});
    return meta;
}

// Recompute the full predictor vector for one operating hour; returns false
// when any source row is missing.
bool compute_x(const Panel& panel, const FeatureSpec& spec, const MarketCalendar& calendar,
               const Timestamp& t, std::vector<double>& x) {
    x.clear();
    for (const auto& z : spec.zones_pooled) {
        const auto here = panel.find_local(z, t.local_sec());
        if (here < 0) return false;
        x.push_back(panel.rows[here].zonal_load_forecast);
        for (int l : spec.lag_hours) {
            const auto src = panel.find_local(z, resolve_lag_source(t, l));
            if (src < 0) return false;
            x.push_back(panel.rows[src].dart);
        }
        for (int l : spec.load_error_lags) {
            const auto src = panel.find_local(z, resolve_lag_source(t, l));
            if (src < 0) return false;
            x.push_back(panel.rows[src].zonal_load_actual - panel.rows[src].zonal_load_forecast);
        }
    }
    if (spec.include_system_load) {
        const auto here = panel.find_local(spec.zones_pooled.front(), t.local_sec());
        if (here < 0) return false;
        x.push_back(panel.rows[here].system_load_forecast);
    }
    if (spec.cal_weekend) x.push_back(calendar.is_weekend(t.local_weekday()) ? 1.0 : 0.0);
    if (spec.cal_holiday) x.push_back(calendar.is_holiday(t.local_day()) ? 1.0 : 0.0);
    if (spec.cal_hour_of_day) x.push_back(static_cast<double>(t.local_hour()));
    if (spec.cal_month) x.push_back(static_cast<double>(t.local_month()));
    if (spec.cal_season) {
        const Season s = calendar.season_of(t.local_month());
        x.push_back(s == Season::Winter ? 1.0 : 0.0);
        x.push_back(s == Season::Summer ? 1.0 : 0.0);
    }
    return true;
}

}  // namespace

FeatureSet build_features(const Panel& panel, const FeatureSpec& spec,
                          const MarketCalendar& calendar, double gamma_neg, double gamma_pos) {
    spec.validate();
    if (!(gamma_neg > 0) || !(gamma_pos > 0))
        throw ConfigError("spike thresholds must be positive");
    for (const auto& z : spec.zones_pooled)
        if (std::find(panel.zones.begin(), panel.zones.end(), z) == panel.zones.end())
            throw UnknownZone("zone '" + z + "' not present in panel");

    FeatureSet fs;
    fs.spec = spec;
    fs.columns = spec.column_names();

    // Candidate operating hours: the instants of the first pooled zone.
    std::vector<Timestamp> hours;
    for (const auto& r : panel.rows)
        if (r.zone == spec.zones_pooled.front() && r.occurrence == 0) hours.push_back(r.timestamp);
    std::sort(hours.begin(), hours.end());

    std::vector<double> x;
    for (const auto& t : hours) {
        if (!compute_x(panel, spec, calendar, t, x)) {
            ++fs.dropped_hours;
            continue;
        }
        for (const auto& z : spec.zones_pooled) {
            const auto here = panel.find_local(z, t.local_sec());
            const double dart = panel.rows[here].dart;
            LabeledObservation obs;
            obs.timestamp = t;
            obs.zone = z;
            obs.x = x;
            obs.y_neg = dart <= -gamma_neg ? 1 : 0;
            obs.y_pos = dart >= gamma_pos ? 1 : 0;
            obs.realized_dart = dart;
            fs.observations.push_back(std::move(obs));
        }
    }
    if (fs.observations.empty())
        throw InsufficientHistory("panel too short for the deepest lag; no observations built");
    return fs;
}

Standardizer Standardizer::fit(const std::vector<LabeledObservation>& obs,
                               const DateRange& train) {
    Standardizer s;
    if (obs.empty()) throw EmptySeries("no observations to standardize");
    const std::size_t d = obs.front().x.size();
    s.mean.assign(d, 0.0);
    s.stdev.assign(d, 1.0);
    std::size_t n = 0;
    for (const auto& o : obs) {
        if (!train.contains(o.timestamp)) continue;
        ++n;
        for (std::size_t j = 0; j < d; ++j) s.mean[j] += o.x[j];
    }
    if (n == 0) throw InsufficientHistory("no train-split observations for standardization");
    for (auto& m : s.mean) m /= static_cast<double>(n);
    std::vector<double> var(d, 0.0);
    for (const auto& o : obs) {
        if (!train.contains(o.timestamp)) continue;
        for (std::size_t j = 0; j < d; ++j) {
            const double c = o.x[j] - s.mean[j];
            var[j] += c * c;
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        const double sd = std::sqrt(var[j] / static_cast<double>(n));
        s.stdev[j] = sd > 0 ? sd : 1.0;  // constant columns stay centered only
    }
    return s;
}

void Standardizer::apply(std::vector<LabeledObservation>& obs) const {
    for (auto& o : obs) {
        if (o.x.size() != mean.size()) throw DimensionMismatch("standardizer dimension mismatch");
        for (std::size_t j = 0; j < o.x.size(); ++j) o.x[j] = (o.x[j] - mean[j]) / stdev[j];
    }
}

AuditReport leakage_audit(const std::vector<LabeledObservation>& observations, const Panel& panel,
                          const FeatureSpec& spec, const MarketCalendar& calendar) {
    AuditReport report;
    const auto names = spec.column_names();
    const auto meta = column_meta(spec);
    report.columns.resize(names.size());
    for (std::size_t j = 0; j < names.size(); ++j) {
        auto& c = report.columns[j];
        c.column = names[j];
        c.kind = meta[j].kind == ColKind::Lag        ? "lag"
                 : meta[j].kind == ColKind::Forecast ? "forecast"
                                                     : "calendar";
        c.min_slack_hours = std::numeric_limits<double>::infinity();
    }

    std::vector<double> expected;
    for (const auto& o : observations) {
        ++report.observations_checked;
        const std::int64_t gate = calendar.gate_closure_local_sec(o.timestamp);
        if (!compute_x(panel, spec, calendar, o.timestamp, expected)) continue;
        for (std::size_t j = 0; j < names.size() && j < o.x.size(); ++j) {
            auto& c = report.columns[j];
            if (o.x[j] != expected[j]) {
                c.pass = false;
                if (c.detail.empty())
                    c.detail = "stored value at " + format_timestamp(o.timestamp) + "/" + o.zone +
                               " does not match any pre-gate source";
                continue;
            }
            switch (meta[j].kind) {
                case ColKind::Lag: {
                    // Realized data for hour h settles at the end of h.
                    const std::int64_t avail = resolve_lag_source(o.timestamp, meta[j].lag) + 3600;
                    const double slack = static_cast<double>(gate - avail) / 3600.0;
                    c.min_slack_hours = std::min(c.min_slack_hours, slack);
                    if (slack <= 0) {
                        c.pass = false;
                        if (c.detail.empty())
                            c.detail = "source not settled before gate closure at " +
                                       format_timestamp(o.timestamp);
                    }
                    break;
                }
                case ColKind::Forecast:
                    // Day-ahead forecasts are published ahead of closure; the
                    // audit credits them with availability at gate - 1s.
                    c.min_slack_hours = std::min(c.min_slack_hours, 1.0 / 3600.0);
                    break;
                case ColKind::Calendar:
                    break;  // deterministic from the date, unlimited slack
            }
        }
    }
    report.pass = true;
    for (const auto& c : report.columns)
        if (!c.pass) report.pass = false;
    return report;
}

void save_observations(const std::string& csv_path, const std::string& sidecar_path,
                       const FeatureSet& fs) {
    CsvTable t;
    t.header = {"timestamp", "zone", "y_neg", "y_pos", "realized_dart"};
    for (std::size_t j = 0; j < fs.columns.size(); ++j)
        t.header.push_back("x_" + std::to_string(j));
    for (const auto& o : fs.observations) {
        std::vector<std::string> row = {format_timestamp(o.timestamp), o.zone,
                                        std::to_string(o.y_neg), std::to_string(o.y_pos),
                                        format_double(o.realized_dart)};
        for (double v : o.x) row.push_back(format_double(v));
        t.rows.push_back(std::move(row));
    }
    write_csv(csv_path, t);

    nlohmann::json sidecar;
    for (std::size_t j = 0; j < fs.columns.size(); ++j)
        sidecar["columns"]["x_" + std::to_string(j)] = fs.columns[j];
    std::ofstream out(sidecar_path);
    if (!out) throw IoError("cannot write '" + sidecar_path + "'");
    out << sidecar.dump(2) << '\n';
}

}  // namespace dartkit

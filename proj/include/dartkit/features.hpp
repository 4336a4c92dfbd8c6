#pragma once

#include <string>
#include <vector>

#include "dartkit/panel.hpp"

namespace dartkit {

// Layout of the predictor vector. Per pooled zone, the block is:
// day-ahead load forecast, one DART lag per entry of lag_hours, one
// (actual - forecast) load error lag per entry of load_error_lags.
// Zone blocks come first, then the optional system load forecast,
// then the calendar block.
struct FeatureSpec {
    std::vector<int> lag_hours{24, 48};
    std::vector<int> load_error_lags{24};
    bool include_system_load = false;
    bool cal_weekend = true;
    bool cal_holiday = true;
    bool cal_hour_of_day = true;
    bool cal_month = true;
    bool cal_season = true;  // Winter and Summer flags, Shoulder baseline
    std::vector<std::string> zones_pooled;

    std::size_t dimension() const;
    std::vector<std::string> column_names() const;

    // Lags must be positive multiples of 24h so the settled-day rule below
    // applies; throws ConfigError otherwise.
    void validate() const;
};

struct LabeledObservation {
    Timestamp timestamp;
    std::string zone;
    std::vector<double> x;
    int y_neg = 0;
    int y_pos = 0;
    double realized_dart = 0.0;  // carried for the backtest, never a predictor
};

struct FeatureSet {
    FeatureSpec spec;
    std::vector<std::string> columns;
    std::vector<LabeledObservation> observations;
    std::size_t dropped_hours = 0;  // hours skipped for missing lags/rows
};

// A literal 24h lag for afternoon hours is unsettled at gate closure, so an
// L-hour lag resolves to the same clock hour on day D - 1 - L/24 where D is
// the operating day; the most recent fully settled day before closure is
// D - 2. Returns the local wall-clock second of the source row.
std::int64_t resolve_lag_source(const Timestamp& operating_hour, int lag_hours);

FeatureSet build_features(const Panel& panel, const FeatureSpec& spec,
                          const MarketCalendar& calendar, double gamma_neg, double gamma_pos);

// Zero-mean/unit-variance scaling fitted on train-split rows only.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> stdev;

    static Standardizer fit(const std::vector<LabeledObservation>& obs, const DateRange& train);
    void apply(std::vector<LabeledObservation>& obs) const;
};

struct ColumnAudit {
    std::string column;
    std::string kind;  // "lag", "forecast" or "calendar"
    double min_slack_hours = 0.0;  // gate closure minus latest source, hours
    bool pass = true;
    std::string detail;
};

struct AuditReport {
    std::vector<ColumnAudit> columns;
    bool pass = true;
    std::size_t observations_checked = 0;
};

// Recomputes every feature from panel rows available strictly before gate
// closure and flags any stored value that could not have come from them.
// Must run on unstandardized observations.
AuditReport leakage_audit(const std::vector<LabeledObservation>& observations, const Panel& panel,
                          const FeatureSpec& spec, const MarketCalendar& calendar);

// Persistence: observation CSV plus a sidecar document naming each column.
void save_observations(const std::string& csv_path, const std::string& sidecar_path,
                       const FeatureSet& fs);

}  // namespace dartkit

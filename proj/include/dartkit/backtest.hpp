#pragma once

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "dartkit/sizing.hpp"

namespace dartkit {

// One executed (or prediction-view) trade. pnl = q * (r - impact_cost)
// where impact_cost = kE(S) * S + k_z * q for the hour's plan-wide net S.
struct TradeRecord {
    Timestamp timestamp;
    std::string zone;
    double q = 0.0;  // signed MWh
    Side side = Side::INC;
    double r = 0.0;            // realized $/MWh edge of the signed position
    double impact_cost = 0.0;  // $/MWh
    double pnl = 0.0;          // $
};

struct ConfusionCounts {
    long tp = 0, fp = 0, fn = 0, tn = 0;
};

// Zero-denominator metrics are reported as absent, never coerced to zero.
struct ClassificationMetrics {
    ConfusionCounts counts;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
};

ClassificationMetrics classification_metrics(const std::vector<int>& signals,
                                             const std::vector<int>& labels);

// Jensen-Shannon divergence in nats; inputs renormalized, result in [0, ln 2].
double js_divergence(std::vector<double> p, std::vector<double> q);

enum class AlignmentAxis { HourOfDay, Month };

struct SpikeHour {
    Timestamp timestamp;
    double magnitude = 0.0;
};

struct AlignmentResult {
    double js_top = 0.0;  // trades vs the top-quantile spike histogram
    double js_all = 0.0;  // trades vs all spike hours
    std::vector<double> trade_hist, top_hist, all_hist;  // normalized
};

AlignmentResult spike_alignment(const std::vector<Timestamp>& trades,
                                const std::vector<SpikeHour>& spikes, AlignmentAxis axis,
                                double top_fraction);

// Zone-season-band-side significance filter over validation trade P&L.
using SigKey = std::tuple<std::string, Season, Band, Side>;

struct BucketStat {
    double mean = 0.0;
    double tstat = 0.0;  // one-sided t against a zero mean
    std::size_t n = 0;
    bool admitted = false;
};

std::map<SigKey, BucketStat> bucket_significance(
    const std::map<SigKey, std::vector<double>>& bucket_pnl, std::size_t min_trades = 50,
    double t_threshold = 2.0);

struct ZoneAttribution {
    std::size_t hours_active = 0;
    double avg_abs_q = 0.0;
    double pnl = 0.0;
};

struct BacktestReport {
    std::vector<TradeRecord> exec_trades;
    std::vector<TradeRecord> pred_trades;
    std::map<std::string, ClassificationMetrics> metrics_inc;
    std::map<std::string, ClassificationMetrics> metrics_dec;
    std::map<SigKey, BucketStat> bucket_stats;
    std::optional<AlignmentResult> alignment_inc;
    std::optional<AlignmentResult> alignment_dec;
    std::size_t n_test_hours = 0;
    std::vector<PlannedHour> plans;

    std::map<std::string, ZoneAttribution> attribution(bool execution_view) const;
    std::map<int, double> yearly_pnl(bool execution_view) const;
    double total_pnl(bool execution_view) const;
};

enum class StrategyMode { Unconstrained, Clipped, Restricted };
std::string to_string(StrategyMode m);
StrategyMode parse_strategy_mode(const std::string& s);

// Unit-size single-side benchmark: trade 1 MWh whenever p >= tau, earning
// -DART (INC) or +DART (DEC), no impact.
BacktestReport run_benchmark(const std::vector<SpikeModel>& models,
                             const std::vector<LabeledObservation>& test, Side side);

struct StrategyInputs {
    std::vector<SpikeModel> models;
    std::map<PayoffKey, PayoffEstimate> payoffs;                 // pooled, with eligibility
    std::map<BucketPayoffKey, PayoffEstimate> bucket_payoffs;    // refinement (restricted mode)
    std::map<SigKey, BucketStat> admissible_buckets;             // restricted mode filter
    ImpactParams params;
    double top_fraction_inc = 0.20;
    double top_fraction_dec = 0.05;
    bool unit_size = false;  // trade +/-1 MWh in the hinted direction, skipping the optimizer

};

BacktestReport run_strategy(const StrategyInputs& inputs,
                            const std::vector<LabeledObservation>& test,
                            const MarketCalendar& calendar, StrategyMode mode);

// Writes the report as delimited-text artifacts; returns the file paths in
// deterministic order.
std::vector<std::string> emit_report(const BacktestReport& report, const std::string& out_dir);

// FNV-1a 64-bit content hash, hex-encoded; used by run manifests.
std::string file_hash_hex(const std::string& path);

}  // namespace dartkit

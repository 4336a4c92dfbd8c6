#pragma once

#include <map>
#include <string>
#include <vector>

#include "dartkit/panel.hpp"

namespace dartkit {

struct CurvePoint {
    double price = 0.0;     // $/MWh
    double quantity = 0.0;  // cumulative MWh
};

// Aggregate step curves for one hour. Supply quantity is non-decreasing in
// price; demand quantity is non-increasing in price.
struct BidStack {
    Timestamp timestamp;
    std::vector<CurvePoint> supply;  // price-sorted ascending
    std::vector<CurvePoint> demand;  // price-sorted ascending, quantity falls

    // Cumulative quantity supplied at price <= p / demanded at price >= p.
    double supply_at(double price) const;
    double demand_at(double price) const;

    void validate() const;  // throws InvariantViolation
};

struct ClearingPoint {
    double p_star = 0.0;  // $/MWh
    double q_star = 0.0;  // MWh
};

// Intersection of the step curves. With excess supply jumping across zero
// the crossing breakpoint's price governs; a flat crossing (exact quantity
// tie over a price interval) resolves to the interval midpoint.
ClearingPoint clear(const BidStack& stack);

struct ImpactResult {
    double p_shocked = 0.0;
    double delta_p = 0.0;
};

// Re-clears with demand shifted outward by delta_q at every price.
ImpactResult buy_impact(const BidStack& stack, double delta_q);
// Re-clears with supply shifted outward by delta_q; delta_p <= 0.
ImpactResult sell_impact(const BidStack& stack, double delta_q);

// Calibrated impact coefficients. All k's are stored per MWh; rendered
// tables multiply by 1000 MWh.
struct ImpactParams {
    std::map<Bucket, double> k_e_plus;   // $/MWh per MWh, buy side
    std::map<Bucket, double> k_e_minus;  // positive magnitude, sell side
    std::map<std::string, double> k_z;   // $/(MWh)^2 per zone
    std::string reference_zone;
    double k_reference = 0.0;
    std::map<std::string, double> mean_loads;

    double ke(Bucket b, bool net_buy) const;  // throws MissingCoefficient
    double kz(const std::string& zone) const;
};

struct EnergyCoeffSelection {
    int top_n = 10;           // largest-|DART| hours per bucket
    std::string zone;         // zone whose DART ranks the hours
    DateRange window;         // calibration window
};

struct EnergyCoeffs {
    std::map<Bucket, double> k_e_plus;
    std::map<Bucket, double> k_e_minus;
    std::map<Bucket, int> hours_used;    // coverage: hours with a stack
    std::map<Bucket, int> hours_wanted;  // top-N selection size
};

// Averages one-sided finite-difference price responses over the top-N
// spike hours of each (season, band) bucket; hours without a stack are
// skipped and reported via coverage counts.
EnergyCoeffs estimate_energy_coeffs(const std::vector<BidStack>& stacks, const Panel& panel,
                                    const MarketCalendar& calendar,
                                    const EnergyCoeffSelection& selection, double delta_q);

// k_z = k_reference * L_ref / L_z.
std::map<std::string, double> calibrate_kz(const std::map<std::string, double>& mean_loads,
                                           const std::string& reference_zone, double k_reference);

struct RegressionResult {
    double slope = 0.0;      // $/MWh per MW
    double intercept = 0.0;
    std::size_t n = 0;
};

// OLS of (loss_component - congestion_component) on zonal_load_forecast
// within one (zone, season, band) bucket. Diagnostic only.
RegressionResult load_price_regression(const Panel& panel, const std::string& zone,
                                       const MarketCalendar& calendar, Bucket bucket);

// Bid-stack file: timestamp, side in {supply, demand}, price,
// cumulative_quantity. One file may hold many hours.
std::vector<BidStack> load_stacks(const std::string& path);
void save_stacks(const std::string& path, const std::vector<BidStack>& stacks);

void save_impact_params(const std::string& path, const ImpactParams& params);
ImpactParams load_impact_params(const std::string& path);

}  // namespace dartkit

#pragma once

#include <map>
#include <string>
#include <vector>

#include "dartkit/bidstack.hpp"
#include "dartkit/classifier.hpp"

namespace dartkit {

enum class Regime { NetBuy, NetSell, NetFlat };
std::string to_string(Regime r);

// Expected payoff inputs for one hour. `edge` is the validation-estimated
// $/MWh revenue of the hinted side; the signed objective coefficient is
// +edge for INC hints (q > 0 pays) and -edge for DEC hints (q < 0 pays).
struct PayoffEntry {
    std::string zone;
    Side side = Side::INC;
    double edge = 0.0;
};

struct ExpectedPayoffs {
    std::vector<PayoffEntry> entries;

    std::vector<double> signed_x() const;
    std::vector<int> hint_signs() const;  // +1 for INC, -1 for DEC
};

// One hour's sizing instance: signed payoff vector plus impact coefficients.
struct SizingProblem {
    std::vector<double> x;   // signed $/MWh edge per zone
    std::vector<double> kz;  // local quadratic coefficients, all > 0
    double ke_plus = 0.0;    // energy impact when net long
    double ke_minus = 0.0;   // energy impact when net short (positive value)
};

SizingProblem make_problem(const ExpectedPayoffs& payoffs, const ImpactParams& params,
                           Bucket bucket);

struct TradePlan {
    std::vector<double> q;  // signed MWh, aligned with the problem's zones
    double net_position = 0.0;
    Regime regime = Regime::NetFlat;
    double objective = 0.0;
};

// F(q) = x'q - (kE+ 1{S>=0} + kE- 1{S<0}) S^2 - sum_z kz q_z^2.
double objective(const SizingProblem& p, const std::vector<double>& q);

struct RegimeSolution {
    std::vector<double> q;
    double net_position = 0.0;
};

// Interior stationary point for a fixed energy coefficient:
// S = (N/2)/(1 + ke H), q_z = (x_z - 2 ke S)/(2 kz) with H = sum 1/kz,
// N = sum x_z/kz.
RegimeSolution solve_regime(const std::vector<double>& x, const std::vector<double>& kz,
                            double ke);

// Zero-net-position optimum q_z = (x_z - N/H)/(2 kz); the zero vector for a
// single zone (the constraint pins it).
std::vector<double> solve_net_flat(const std::vector<double>& x, const std::vector<double>& kz);

// Evaluates the net-buy, net-sell and net-flat candidates, keeps net-buy
// only when S > 0 and net-sell only when S < 0, and returns the admissible
// candidate with the largest F (ties prefer net-flat).
TradePlan optimize(const SizingProblem& p);

// optimize() under per-zone sign constraints (q_z >= 0 for INC hints,
// q_z <= 0 for DEC hints), via active-set iteration on the closed forms.
TradePlan optimize_clipped(const SizingProblem& p, const std::vector<int>& hint_signs);

struct PayoffEstimate {
    double mean_edge = 0.0;
    std::size_t trades = 0;
    bool eligible = false;  // fired at least once with positive mean edge
};

using PayoffKey = std::pair<std::string, Side>;

// Conditional mean unit edge over validation hours where the signal fires;
// non-positive means mark the (zone, side) ineligible for test trading.
std::map<PayoffKey, PayoffEstimate> estimate_payoffs(
    const std::vector<SpikeModel>& models, const std::vector<LabeledObservation>& validation);

using BucketPayoffKey = std::tuple<std::string, Side, Season, Band>;

std::map<BucketPayoffKey, PayoffEstimate> estimate_payoffs_by_bucket(
    const std::vector<SpikeModel>& models, const std::vector<LabeledObservation>& validation,
    const MarketCalendar& calendar);

// TradePlan persistence: timestamp, zone, q_mwh, regime, objective.
struct PlannedHour {
    Timestamp timestamp;
    std::vector<std::string> zones;
    TradePlan plan;
};

void save_plans(const std::string& path, const std::vector<PlannedHour>& plans);

}  // namespace dartkit

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dartkit/bidstack.hpp"
#include "dartkit/features.hpp"

namespace dartkit {

// Seed-deterministic uniform draws built on splitmix64, which is defined by
// plain integer arithmetic, so fixtures are byte-identical across standard
// libraries.
class SynthRng {
public:
    explicit SynthRng(std::uint64_t seed) : state_(seed) {}
    double uniform();                      // [0, 1)
    double uniform(double lo, double hi);  // [lo, hi)
    std::uint64_t next();

private:
    std::uint64_t state_;
};

// Draws x ~ U[-2,2]^d and labels y ~ Bernoulli(sigmoid(beta . [1, x])).
// beta[0] is the intercept; y_neg and y_pos both carry the label so either
// side of a classifier can train on the sample.
std::vector<LabeledObservation> synth_logistic(std::uint64_t seed,
                                               const std::vector<double>& beta, std::size_t n);

// Synthetic market fixture with planted ground truth:
//  - DART spikes drawn at known hour-dependent rates with optional two-day
//    persistence, so lagged features carry real signal;
//  - every bid stack is a uniform-step supply curve of slope `stack_slope`
//    against inelastic demand, so buy/sell price impacts are exactly
//    stack_slope * delta_q for shocks in multiples of `step_quantity`.
struct SynthMarketSpec {
    std::uint64_t seed = 1;
    Market market = Market::NYISO;
    std::vector<std::string> zones{"EAST", "NORTH"};
    std::vector<double> mean_loads{2000.0, 1000.0};
    Date start{2021, 1, 1};
    int days = 60;
    int utc_offset_min = -300;

    double gamma_neg = 30.0;
    double gamma_pos = 5.0;
    double spike_rate_neg = 0.05;
    double spike_rate_pos = 0.05;
    // Rate multipliers: evening hours get (1 + hour_boost), a spike at the
    // same clock hour two days earlier gets (1 + persistence_boost).
    double hour_boost = 4.0;
    double persistence_boost = 8.0;

    double stack_slope = 0.01;     // $/MWh per MWh
    double step_quantity = 100.0;  // MWh per supply step
    int steps_each_side = 40;      // supply steps above and below the cross
};

struct SynthMarket {
    Panel panel;
    std::vector<BidStack> stacks;  // one per hour, shared across zones
};

SynthMarket synth_market(const SynthMarketSpec& spec);

// Writes panel and stack files for a fixture directory; returns the paths
// {panel_csv, stacks_csv}.
std::vector<std::string> write_fixture(const SynthMarketSpec& spec, const std::string& out_dir);

}  // namespace dartkit

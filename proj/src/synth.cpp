#include "dartkit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "dartkit/classifier.hpp"
#include "dartkit/errors.hpp"

namespace dartkit {

std::uint64_t SynthRng::next() {
    // splitmix64: fully defined by the standard's integer arithmetic.
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double SynthRng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double SynthRng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::vector<LabeledObservation> synth_logistic(std::uint64_t seed,
                                               const std::vector<double>& beta, std::size_t n) {
    if (beta.empty()) throw ConfigError("synth_logistic requires an intercept coefficient");
    SynthRng rng(seed);
    const std::size_t d = beta.size() - 1;
    std::vector<LabeledObservation> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        LabeledObservation o;
        o.timestamp = Timestamp{static_cast<std::int64_t>(i) * 3600, 0};
        o.zone = "SYNTH";
        o.x.resize(d);
        double u = beta[0];
        for (std::size_t j = 0; j < d; ++j) {
            o.x[j] = rng.uniform(-2.0, 2.0);
            u += beta[j + 1] * o.x[j];
        }
        const int y = rng.uniform() < sigmoid(u) ? 1 : 0;
        o.y_neg = y;
        o.y_pos = y;
        out.push_back(std::move(o));
    }
    return out;
}

SynthMarket synth_market(const SynthMarketSpec& spec) {
    if (spec.zones.empty()) throw ConfigError("synth_market requires at least one zone");
    if (spec.zones.size() != spec.mean_loads.size())
        throw ConfigError("synth_market: one mean load per zone");
    if (spec.days < 1) throw ConfigError("synth_market: days must be positive");

    SynthRng rng(spec.seed);
    const int n_hours = spec.days * 24;
    const std::int64_t day0 = days_from_civil(spec.start);
    const double base_mag = 0.8 * std::min(spec.gamma_neg, spec.gamma_pos);

    SynthMarket out;
    // Per-zone spike history indexed by day*24 + hour; -1 none, 0 neg, 1 pos.
    std::vector<std::vector<int>> spiked(spec.zones.size(), std::vector<int>(n_hours, -1));

    for (std::size_t zi = 0; zi < spec.zones.size(); ++zi) {
        const double load0 = spec.mean_loads[zi];
        for (int h = 0; h < n_hours; ++h) {
            const int day = h / 24;
            const int hod = h % 24;
            const bool evening = hod >= 17 && hod <= 20;
            const int prior = h >= 48 ? spiked[zi][h - 48] : -1;

            double r_neg = spec.spike_rate_neg;
            double r_pos = spec.spike_rate_pos;
            if (evening) {
                r_neg *= 1.0 + spec.hour_boost;
                r_pos *= 1.0 + spec.hour_boost;
            }
            if (prior == 0) r_neg *= 1.0 + spec.persistence_boost;
            if (prior == 1) r_pos *= 1.0 + spec.persistence_boost;
            r_neg = std::min(r_neg, 0.85);
            r_pos = std::min(r_pos, 0.85);

            const double u = rng.uniform();
            double dart;
            if (u < r_neg) {
                spiked[zi][h] = 0;
                dart = -(spec.gamma_neg + 20.0 * rng.uniform());
            } else if (u < r_neg + r_pos) {
                spiked[zi][h] = 1;
                dart = spec.gamma_pos + 10.0 * rng.uniform();
            } else {
                dart = rng.uniform(-base_mag, base_mag);
            }

            HourlyRecord rec;
            const std::int64_t local_sec = (day0 + day) * 86400 + hod * 3600;
            rec.timestamp = Timestamp{local_sec - spec.utc_offset_min * 60, spec.utc_offset_min};
            rec.zone = spec.zones[zi];
            rec.da_price = 35.0 + 8.0 * std::sin(2.0 * M_PI * (hod - 6) / 24.0);
            rec.rt_price = rec.da_price - dart;
            rec.dart = rec.da_price - rec.rt_price;
            rec.zonal_load_forecast = load0 * (1.0 + 0.15 * std::sin(2.0 * M_PI * hod / 24.0));
            rec.zonal_load_actual = rec.zonal_load_forecast * (1.0 + 0.02 * (rng.uniform() - 0.5));
            rec.loss_component = 0.004 * rec.zonal_load_forecast;
            rec.congestion_component = 0.001 * rec.zonal_load_forecast - 2.0;
            out.panel.rows.push_back(std::move(rec));
        }
    }
    for (std::size_t zi = 0; zi < spec.zones.size(); ++zi) {
        for (int h = 0; h < n_hours; ++h) {
            double sys = 0.0;
            for (double l : spec.mean_loads)
                sys += l * (1.0 + 0.15 * std::sin(2.0 * M_PI * (h % 24) / 24.0));
            out.panel.rows[zi * n_hours + h].system_load_forecast = sys;
        }
    }
    std::sort(out.panel.rows.begin(), out.panel.rows.end(),
              [](const HourlyRecord& a, const HourlyRecord& b) {
                  if (a.zone != b.zone) return a.zone < b.zone;
                  return a.timestamp.epoch_sec < b.timestamp.epoch_sec;
              });
    for (const auto& r : out.panel.rows)
        if (out.panel.zones.empty() || out.panel.zones.back() != r.zone)
            out.panel.zones.push_back(r.zone);
    out.panel.build_index();

    // One stack per hour: uniform supply steps of width w with price
    // increment stack_slope * w, crossing an inelastic demand of Q at the
    // midpoint rule's reference price. Shocks that are multiples of w move
    // the clearing price by exactly stack_slope per MWh.
    const double w = spec.step_quantity;
    const int K = spec.steps_each_side;
    for (int h = 0; h < n_hours; ++h) {
        BidStack s;
        const std::int64_t local_sec = (day0 + h / 24) * 86400 + (h % 24) * 3600;
        s.timestamp = Timestamp{local_sec - spec.utc_offset_min * 60, spec.utc_offset_min};
        const double q_cross = (static_cast<double>(2 * K) + 40.0 + (rng.next() % 41)) * w;
        const double p_cross = 30.0 + static_cast<double>(rng.next() % 11) * spec.stack_slope * w;
        for (int i = -K; i <= K; ++i)
            s.supply.push_back({p_cross + i * spec.stack_slope * w, q_cross + i * w});
        s.demand.push_back({1.0e6, q_cross});
        out.stacks.push_back(std::move(s));
    }
    return out;
}

std::vector<std::string> write_fixture(const SynthMarketSpec& spec, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const SynthMarket m = synth_market(spec);
    std::vector<std::string> paths{(fs::path(out_dir) / "panel.csv").string(),
                                   (fs::path(out_dir) / "stacks.csv").string()};
    save_panel(paths[0], m.panel);
    save_stacks(paths[1], m.stacks);
    return paths;
}

}  // namespace dartkit

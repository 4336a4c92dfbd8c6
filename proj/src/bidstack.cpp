#include "dartkit/bidstack.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "dartkit/csv.hpp"
#include "dartkit/errors.hpp"

#include <nlohmann/json.hpp>

namespace dartkit {

double BidStack::supply_at(double price) const {
    // Largest cumulative quantity offered at price <= p.
    double q = 0.0;
    for (const auto& pt : supply) {
        if (pt.price <= price)
            q = pt.quantity;
        else
            break;
    }
    return q;
}

double BidStack::demand_at(double price) const {
    // Quantity bid at price >= p: the first breakpoint at or above p.
    for (const auto& pt : demand)
        if (pt.price >= price) return pt.quantity;
    return 0.0;
}

void BidStack::validate() const {
    auto sorted = [](const std::vector<CurvePoint>& pts, bool increasing_qty) {
        for (std::size_t i = 1; i < pts.size(); ++i) {
            if (pts[i].price < pts[i - 1].price) return false;
            if (increasing_qty && pts[i].quantity < pts[i - 1].quantity) return false;
            if (!increasing_qty && pts[i].quantity > pts[i - 1].quantity) return false;
        }
        return true;
    };
    if (supply.empty() || demand.empty())
        throw InvariantViolation("bid stack needs both supply and demand points");
    if (!sorted(supply, true))
        throw InvariantViolation("supply must be price-sorted with non-decreasing quantity");
    if (!sorted(demand, false))
        throw InvariantViolation("demand must be price-sorted with non-increasing quantity");
}

namespace {

// Excess supply f(p) with optional parallel quantity shifts of each curve;
// non-decreasing step function of p.
ClearingPoint clear_shifted(const BidStack& stack, double demand_shift, double supply_shift) {
    std::set<double> prices;
    for (const auto& pt : stack.supply) prices.insert(pt.price);
    for (const auto& pt : stack.demand) prices.insert(pt.price);

    auto excess = [&](double p) {
        return (stack.supply_at(p) + supply_shift) - (stack.demand_at(p) + demand_shift);
    };

    double p_lo = 0.0;
    bool found = false;
    for (double p : prices) {
        if (excess(p) >= 0) {
            p_lo = p;
            found = true;
            break;
        }
    }
    if (!found)
        throw NoCrossing("demand exceeds supply over the whole price range of the stack");

    double p_star = p_lo;
    if (excess(p_lo) == 0.0) {
        // Flat crossing: quantities tie on [p_lo, next breakpoint with
        // positive excess); settle at the interval midpoint.
        for (double p : prices) {
            if (p <= p_lo) continue;
            if (excess(p) > 0) {
                p_star = 0.5 * (p_lo + p);
                break;
            }
        }
    }
    const double qs = stack.supply_at(p_star) + supply_shift;
    const double qd = stack.demand_at(p_star) + demand_shift;
    return ClearingPoint{p_star, std::min(qs, qd)};
}

}  // namespace

ClearingPoint clear(const BidStack& stack) {
    stack.validate();
    return clear_shifted(stack, 0.0, 0.0);
}

ImpactResult buy_impact(const BidStack& stack, double delta_q) {
    if (delta_q < 0) throw InvariantViolation("buy_impact requires delta_q >= 0");
    stack.validate();
    const ClearingPoint base = clear_shifted(stack, 0.0, 0.0);
    const ClearingPoint shocked = clear_shifted(stack, delta_q, 0.0);
    return ImpactResult{shocked.p_star, shocked.p_star - base.p_star};
}

ImpactResult sell_impact(const BidStack& stack, double delta_q) {
    if (delta_q < 0) throw InvariantViolation("sell_impact requires delta_q >= 0");
    stack.validate();
    const ClearingPoint base = clear_shifted(stack, 0.0, 0.0);
    const ClearingPoint shocked = clear_shifted(stack, 0.0, delta_q);
    return ImpactResult{shocked.p_star, shocked.p_star - base.p_star};
}

double ImpactParams::ke(Bucket b, bool net_buy) const {
    const auto& m = net_buy ? k_e_plus : k_e_minus;
    auto it = m.find(b);
    if (it == m.end())
        throw MissingCoefficient("no k_E" + std::string(net_buy ? "+" : "-") + " for bucket (" +
                                 to_string(b.first) + ", " + to_string(b.second) + ")");
    return it->second;
}

double ImpactParams::kz(const std::string& zone) const {
    auto it = k_z.find(zone);
    if (it == k_z.end()) throw MissingCoefficient("no k_z for zone " + zone);
    return it->second;
}

EnergyCoeffs estimate_energy_coeffs(const std::vector<BidStack>& stacks, const Panel& panel,
                                    const MarketCalendar& calendar,
                                    const EnergyCoeffSelection& selection, double delta_q) {
    if (delta_q <= 0) throw ConfigError("delta_q must be positive");
    if (selection.top_n <= 0) throw ConfigError("top_n must be positive");

    std::map<std::int64_t, const BidStack*> by_epoch;
    for (const auto& s : stacks) by_epoch[s.timestamp.epoch_sec] = &s;

    // Rank hours by |DART| of the selection zone within each bucket.
    std::map<Bucket, std::vector<const HourlyRecord*>> buckets;
    for (const auto& r : panel.rows) {
        if (r.zone != selection.zone) continue;
        if (!selection.window.contains(r.timestamp)) continue;
        buckets[calendar.bucket_of(r.timestamp)].push_back(&r);
    }

    EnergyCoeffs out;
    bool any = false;
    for (auto& [bucket, rows] : buckets) {
        std::stable_sort(rows.begin(), rows.end(), [](const HourlyRecord* a, const HourlyRecord* b) {
            const double da = std::abs(a->dart), db = std::abs(b->dart);
            if (da != db) return da > db;
            return a->timestamp < b->timestamp;
        });
        const int want = std::min<int>(selection.top_n, static_cast<int>(rows.size()));
        out.hours_wanted[bucket] = want;
        double sum_plus = 0.0, sum_minus = 0.0;
        int used = 0;
        for (int i = 0; i < want; ++i) {
            auto it = by_epoch.find(rows[i]->timestamp.epoch_sec);
            if (it == by_epoch.end()) continue;  // hours without a stack are skipped
            sum_plus += buy_impact(*it->second, delta_q).delta_p / delta_q;
            sum_minus += -sell_impact(*it->second, delta_q).delta_p / delta_q;
            ++used;
        }
        out.hours_used[bucket] = used;
        if (used > 0) {
            out.k_e_plus[bucket] = sum_plus / used;
            out.k_e_minus[bucket] = sum_minus / used;
            any = true;
        }
    }
    if (!any)
        throw EmptyBucket("no (season, band) bucket has a selected hour with a bid stack");
    return out;
}

std::map<std::string, double> calibrate_kz(const std::map<std::string, double>& mean_loads,
                                           const std::string& reference_zone, double k_reference) {
    auto ref = mean_loads.find(reference_zone);
    if (ref == mean_loads.end())
        throw MissingReference("reference zone '" + reference_zone + "' has no mean load");
    if (!(ref->second > 0)) throw ZeroLoad("reference zone mean load must be positive");
    std::map<std::string, double> kz;
    for (const auto& [zone, load] : mean_loads) {
        if (!(load > 0)) throw ZeroLoad("zone '" + zone + "' has non-positive mean load");
        kz[zone] = k_reference * ref->second / load;
    }
    return kz;
}

RegressionResult load_price_regression(const Panel& panel, const std::string& zone,
                                       const MarketCalendar& calendar, Bucket bucket) {
    std::vector<double> load, y;
    for (const auto& r : panel.rows) {
        if (r.zone != zone) continue;
        if (calendar.bucket_of(r.timestamp) != bucket) continue;
        if (!r.loss_component || !r.congestion_component)
            throw MissingColumn("loss/congestion component absent for zone " + zone + " at " +
                                format_timestamp(r.timestamp));
        load.push_back(r.zonal_load_forecast);
        y.push_back(*r.loss_component - *r.congestion_component);
    }
    const std::size_t n = load.size();
    if (n < 2) throw DegenerateRegressor("fewer than 2 observations in bucket");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += load[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (load[i] - mx) * (load[i] - mx);
        sxy += (load[i] - mx) * (y[i] - my);
    }
    if (sxx == 0) throw DegenerateRegressor("forecast load is constant in bucket");
    RegressionResult res;
    res.slope = sxy / sxx;
    res.intercept = my - res.slope * mx;
    res.n = n;
    return res;
}

std::vector<BidStack> load_stacks(const std::string& path) {
    const CsvTable t = read_csv(path);
    const std::size_t c_ts = t.column("timestamp");
    const std::size_t c_side = t.column("side");
    const std::size_t c_p = t.column("price");
    const std::size_t c_q = t.column("cumulative_quantity");

    std::map<std::int64_t, BidStack> by_epoch;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        const Timestamp ts = parse_timestamp(r[c_ts]);
        auto& stack = by_epoch[ts.epoch_sec];
        stack.timestamp = ts;
        CurvePoint pt{std::stod(r[c_p]), std::stod(r[c_q])};
        if (r[c_side] == "supply")
            stack.supply.push_back(pt);
        else if (r[c_side] == "demand")
            stack.demand.push_back(pt);
        else
            throw MalformedFile("row " + std::to_string(i + 2) + ": side must be supply|demand");
    }
    std::vector<BidStack> stacks;
    for (auto& [epoch, s] : by_epoch) {
        auto by_price = [](const CurvePoint& a, const CurvePoint& b) { return a.price < b.price; };
        std::stable_sort(s.supply.begin(), s.supply.end(), by_price);
        std::stable_sort(s.demand.begin(), s.demand.end(), by_price);
        s.validate();
        stacks.push_back(std::move(s));
    }
    return stacks;
}

void save_stacks(const std::string& path, const std::vector<BidStack>& stacks) {
    CsvTable t;
    t.header = {"timestamp", "side", "price", "cumulative_quantity"};
    for (const auto& s : stacks) {
        for (const auto& pt : s.supply)
            t.rows.push_back({format_timestamp(s.timestamp), "supply", format_double(pt.price),
                              format_double(pt.quantity)});
        for (const auto& pt : s.demand)
            t.rows.push_back({format_timestamp(s.timestamp), "demand", format_double(pt.price),
                              format_double(pt.quantity)});
    }
    write_csv(path, t);
}

namespace {

std::string bucket_key(Bucket b) { return to_string(b.first) + "/" + to_string(b.second); }

Bucket parse_bucket_key(const std::string& key) {
    const auto slash = key.find('/');
    if (slash == std::string::npos) throw MalformedFile("bad bucket key '" + key + "'");
    const std::string season = key.substr(0, slash), band = key.substr(slash + 1);
    Season s;
    if (season == "Winter")
        s = Season::Winter;
    else if (season == "Summer")
        s = Season::Summer;
    else if (season == "Shoulder")
        s = Season::Shoulder;
    else
        throw MalformedFile("bad season '" + season + "'");
    if (band != "Peak" && band != "OffPeak") throw MalformedFile("bad band '" + band + "'");
    return {s, band == "Peak" ? Band::Peak : Band::OffPeak};
}

}  // namespace

void save_impact_params(const std::string& path, const ImpactParams& params) {
    nlohmann::json j;
    for (const auto& [b, v] : params.k_e_plus) j["k_e_plus"][bucket_key(b)] = v;
    for (const auto& [b, v] : params.k_e_minus) j["k_e_minus"][bucket_key(b)] = v;
    for (const auto& [z, v] : params.k_z) j["k_z"][z] = v;
    j["reference_zone"] = params.reference_zone;
    j["k_reference"] = params.k_reference;
    for (const auto& [z, v] : params.mean_loads) j["mean_loads"][z] = v;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

ImpactParams load_impact_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    nlohmann::json j;
    in >> j;
    ImpactParams p;
    for (const auto& [k, v] : j.at("k_e_plus").items()) p.k_e_plus[parse_bucket_key(k)] = v;
    for (const auto& [k, v] : j.at("k_e_minus").items()) p.k_e_minus[parse_bucket_key(k)] = v;
    for (const auto& [k, v] : j.at("k_z").items()) p.k_z[k] = v;
    p.reference_zone = j.at("reference_zone").get<std::string>();
    p.k_reference = j.at("k_reference").get<double>();
    if (j.contains("mean_loads"))
        for (const auto& [k, v] : j.at("mean_loads").items()) p.mean_loads[k] = v;
    return p;
}

}  // namespace dartkit

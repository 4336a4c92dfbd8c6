#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "dartkit/bidstack.hpp"
#include "dartkit/errors.hpp"
#include "dartkit/synth.hpp"

using namespace dartkit;

namespace {

// Uniform-step supply with a planted slope against inelastic demand; the
// clearing price responds to quantity shocks at exactly `slope` per MWh.
BidStack planted_stack(double slope, double w = 100.0, int k = 40, double q_cross = 10000.0,
                       double p_cross = 30.0) {
    BidStack s;
    s.timestamp = parse_timestamp("2021-06-09T12:00:00-04:00");
    for (int i = -k; i <= k; ++i) s.supply.push_back({p_cross + i * slope * w, q_cross + i * w});
    s.demand.push_back({1.0e6, q_cross});
    return s;
}

// Definition-level clearing oracle, written against the curve evaluators
// rather than the breakpoint scan.
double oracle_clear(const BidStack& s) {
    std::vector<double> prices;
    for (const auto& pt : s.supply) prices.push_back(pt.price);
    for (const auto& pt : s.demand) prices.push_back(pt.price);
    std::sort(prices.begin(), prices.end());
    for (std::size_t i = 0; i < prices.size(); ++i) {
        const double ex = s.supply_at(prices[i]) - s.demand_at(prices[i]);
        if (ex > 0) return prices[i];
        if (ex == 0) {
            for (std::size_t j = i + 1; j < prices.size(); ++j)
                if (s.supply_at(prices[j]) - s.demand_at(prices[j]) > 0)
                    return 0.5 * (prices[i] + prices[j]);
            return prices[i];
        }
    }
    throw NoCrossing("oracle found no crossing");
}

BidStack random_stack(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> pu(5.0, 120.0);
    std::uniform_int_distribution<int> nu(2, 12);
    std::uniform_real_distribution<double> qu(50.0, 400.0);
    BidStack s;
    const int ns = nu(rng), nd = nu(rng);
    std::vector<double> ps, pd;
    for (int i = 0; i < ns; ++i) ps.push_back(pu(rng));
    for (int i = 0; i < nd; ++i) pd.push_back(pu(rng));
    std::sort(ps.begin(), ps.end());
    std::sort(pd.begin(), pd.end());
    double q = 0.0;
    for (int i = 0; i < ns; ++i) {
        q += qu(rng);
        s.supply.push_back({ps[i], q});
    }
    // Demand never exceeds 60% of total supply so shocked clearings exist.
    double dq = 0.6 * q;
    for (int i = 0; i < nd; ++i) {
        s.demand.push_back({pd[i], dq});
        dq = std::max(0.0, dq - qu(rng) * 0.3);
    }
    return s;
}

}  // namespace

TEST_CASE("clearing at a jump crossing") {
    BidStack s;
    s.timestamp = Timestamp{0, 0};
    s.supply = {{10.0, 100.0}, {20.0, 200.0}};
    s.demand = {{12.0, 150.0}, {18.0, 90.0}};
    const ClearingPoint cp = clear(s);
    CHECK(cp.p_star == 18.0);
    CHECK(cp.q_star == 90.0);
    CHECK(cp.p_star == oracle_clear(s));
}

TEST_CASE("flat crossing settles at the interval midpoint") {
    const BidStack s = planted_stack(0.01);
    const ClearingPoint cp = clear(s);
    // Exact quantity tie at 30; the next breakpoint sits one step higher.
    CHECK(cp.p_star == doctest::Approx(30.0 + 0.5 * 0.01 * 100.0).epsilon(1e-14));
    CHECK(cp.q_star == 10000.0);
    CHECK(cp.p_star == oracle_clear(s));
}

TEST_CASE("clearing matches the definition oracle on random stacks") {
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 500; ++trial) {
        const BidStack s = random_stack(rng);
        CHECK(clear(s).p_star == oracle_clear(s));
    }
}

TEST_CASE("no crossing reported") {
    BidStack s;
    s.timestamp = Timestamp{0, 0};
    s.supply = {{10.0, 100.0}};
    s.demand = {{500.0, 400.0}};
    CHECK_THROWS_AS(clear(s), NoCrossing);
}

TEST_CASE("curve shape violations rejected") {
    BidStack s;
    s.timestamp = Timestamp{0, 0};
    s.supply = {{10.0, 100.0}, {20.0, 50.0}};  // quantity falls
    s.demand = {{12.0, 100.0}};
    CHECK_THROWS_AS(clear(s), InvariantViolation);
    s.supply = {};
    CHECK_THROWS_AS(s.validate(), InvariantViolation);
}

TEST_CASE("planted-slope impacts are exact") {
    for (double slope : {0.01, 0.03464, 0.2}) {
        const BidStack s = planted_stack(slope);
        const ImpactResult buy = buy_impact(s, 1000.0);
        const ImpactResult sell = sell_impact(s, 1000.0);
        CHECK(std::abs(buy.delta_p - slope * 1000.0) < 1e-9);
        CHECK(std::abs(sell.delta_p + slope * 1000.0) < 1e-9);
    }
    // Example: slope 0.01 supply moves the price by 10 for a 1000 MWh buy.
    CHECK(std::abs(buy_impact(planted_stack(0.01), 1000.0).delta_p - 10.0) < 1e-9);
    CHECK(buy_impact(planted_stack(0.01), 0.0).delta_p == 0.0);
}

TEST_CASE("impacts are monotone in the shock size") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> du(0.0, 120.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const BidStack s = random_stack(rng);
        double d1 = du(rng), d2 = du(rng);
        if (d1 > d2) std::swap(d1, d2);
        const double b1 = buy_impact(s, d1).delta_p, b2 = buy_impact(s, d2).delta_p;
        CHECK(b1 >= 0.0);
        CHECK(b2 >= b1);
        const double s1 = sell_impact(s, d1).delta_p, s2 = sell_impact(s, d2).delta_p;
        CHECK(s1 <= 0.0);
        CHECK(s2 <= s1);
    }
}

namespace {

Panel bucket_panel(const std::vector<double>& darts, int start_hour = 7) {
    // Weekday summer peak hours: 2021-06-09 (Wednesday).
    Panel p;
    for (std::size_t i = 0; i < darts.size(); ++i) {
        HourlyRecord r;
        const std::int64_t local =
            days_from_civil({2021, 6, 9}) * 86400 + (start_hour + static_cast<int>(i)) * 3600;
        r.timestamp = Timestamp{local + 240 * 60, -240};
        r.zone = "EAST";
        r.da_price = darts[i];
        r.rt_price = 0.0;
        r.dart = darts[i];
        r.zonal_load_forecast = 1000.0 + 10.0 * static_cast<double>(i);
        r.zonal_load_actual = r.zonal_load_forecast;
        p.rows.push_back(r);
    }
    p.build_index();
    return p;
}

}  // namespace

TEST_CASE("energy coefficient is the mean top-hour slope") {
    // Ten stacks whose 1000 MWh buy shock moves the price by 34.64.
    std::vector<double> darts;
    for (int i = 0; i < 10; ++i) darts.push_back(60.0 + i);
    Panel panel = bucket_panel(darts);
    std::vector<BidStack> stacks;
    for (std::size_t i = 0; i < panel.rows.size(); ++i) {
        BidStack s = planted_stack(0.03464);
        s.timestamp = panel.rows[i].timestamp;
        stacks.push_back(s);
    }
    EnergyCoeffSelection sel;
    sel.top_n = 10;
    sel.zone = "EAST";
    sel.window = {{2021, 1, 1}, {2022, 1, 1}};
    const EnergyCoeffs c = estimate_energy_coeffs(stacks, panel, MarketCalendar::standard(Market::NYISO), sel, 1000.0);
    const Bucket b{Season::Summer, Band::Peak};
    REQUIRE(c.k_e_plus.count(b) == 1);
    CHECK(c.k_e_plus.at(b) == doctest::Approx(0.03464).epsilon(1e-9));
    CHECK(c.k_e_minus.at(b) == doctest::Approx(0.03464).epsilon(1e-9));
    CHECK(c.hours_used.at(b) == 10);
    CHECK(c.hours_wanted.at(b) == 10);
}

TEST_CASE("hours without a stack are skipped and counted") {
    std::vector<double> darts{90.0, 80.0, 70.0, 60.0};
    Panel panel = bucket_panel(darts);
    std::vector<BidStack> stacks;
    for (int i = 0; i < 2; ++i) {  // stacks only for the two largest spreads
        BidStack s = planted_stack(0.02);
        s.timestamp = panel.rows[i].timestamp;
        stacks.push_back(s);
    }
    EnergyCoeffSelection sel;
    sel.top_n = 4;
    sel.zone = "EAST";
    sel.window = {{2021, 1, 1}, {2022, 1, 1}};
    const EnergyCoeffs c = estimate_energy_coeffs(stacks, panel, MarketCalendar::standard(Market::NYISO), sel, 1000.0);
    const Bucket b{Season::Summer, Band::Peak};
    CHECK(c.hours_wanted.at(b) == 4);
    CHECK(c.hours_used.at(b) == 2);
    CHECK(c.k_e_plus.at(b) == doctest::Approx(0.02).epsilon(1e-9));

    CHECK_THROWS_AS(
        estimate_energy_coeffs({}, panel, MarketCalendar::standard(Market::NYISO), sel, 1000.0),
        EmptyBucket);
}

TEST_CASE("zone-local coefficients scale inversely with load") {
    std::map<std::string, double> loads{{"LONGIL", 2000.0},
                                        {"NYC", 5000.0},
                                        {"WEST", 2000.0 * 0.050 / 0.067},
                                        {"MILLWD", 2000.0 * 0.050 / 0.357}};
    const auto kz = calibrate_kz(loads, "LONGIL", 0.050);
    CHECK(kz.at("LONGIL") == 0.050);  // identity at the reference load
    CHECK(kz.at("NYC") == doctest::Approx(0.020).epsilon(1e-12));
    CHECK(kz.at("WEST") == doctest::Approx(0.067).epsilon(1e-12));
    CHECK(kz.at("MILLWD") == doctest::Approx(0.357).epsilon(1e-12));
    // Inverse proportionality: k_z * L_z is constant.
    for (const auto& [z, k] : kz)
        CHECK(k * loads.at(z) == doctest::Approx(0.050 * 2000.0).epsilon(1e-12));

    CHECK_THROWS_AS(calibrate_kz(loads, "NOWHERE", 0.05), MissingReference);
    loads["BAD"] = 0.0;
    CHECK_THROWS_AS(calibrate_kz(loads, "LONGIL", 0.05), ZeroLoad);
}

TEST_CASE("loss-congestion regression recovers an exact linear law") {
    std::vector<double> darts(16, 1.0);
    Panel panel = bucket_panel(darts);
    for (auto& r : panel.rows) {
        r.loss_component = 0.005 * r.zonal_load_forecast + 3.0;
        r.congestion_component = 0.0;
    }
    const RegressionResult res =
        load_price_regression(panel, "EAST", MarketCalendar::standard(Market::NYISO),
                              {Season::Summer, Band::Peak});
    CHECK(res.slope == doctest::Approx(0.005).epsilon(1e-12));
    CHECK(res.intercept == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(res.n == 16);

    // Normal-equations oracle.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& r : panel.rows) {
        const double x = r.zonal_load_forecast, y = *r.loss_component - *r.congestion_component;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(panel.rows.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(res.slope == doctest::Approx(slope).epsilon(1e-9));

    for (auto& r : panel.rows) r.loss_component.reset();
    CHECK_THROWS_AS(load_price_regression(panel, "EAST", MarketCalendar::standard(Market::NYISO),
                                          {Season::Summer, Band::Peak}),
                    MissingColumn);
}

TEST_CASE("stack persistence round trip") {
    SynthMarketSpec spec;
    spec.days = 2;
    const SynthMarket m = synth_market(spec);
    const std::string path =
        (std::filesystem::temp_directory_path() / "dartkit_stacks.csv").string();
    save_stacks(path, m.stacks);
    const auto back = load_stacks(path);
    REQUIRE(back.size() == m.stacks.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].timestamp.epoch_sec == m.stacks[i].timestamp.epoch_sec);
        REQUIRE(back[i].supply.size() == m.stacks[i].supply.size());
        for (std::size_t j = 0; j < back[i].supply.size(); ++j) {
            CHECK(back[i].supply[j].price == m.stacks[i].supply[j].price);
            CHECK(back[i].supply[j].quantity == m.stacks[i].supply[j].quantity);
        }
    }
    std::remove(path.c_str());
}

TEST_CASE("impact parameter lookup and persistence") {
    ImpactParams p;
    p.k_e_plus[{Season::Summer, Band::Peak}] = 0.03464;
    p.k_e_minus[{Season::Summer, Band::Peak}] = 0.0206;
    p.k_z["LONGIL"] = 0.050;
    p.reference_zone = "LONGIL";
    p.k_reference = 0.050;
    p.mean_loads["LONGIL"] = 2000.0;

    CHECK(p.ke({Season::Summer, Band::Peak}, true) == 0.03464);
    CHECK(p.ke({Season::Summer, Band::Peak}, false) == 0.0206);
    CHECK_THROWS_AS(p.ke({Season::Winter, Band::Peak}, true), MissingCoefficient);
    CHECK(p.kz("LONGIL") == 0.050);
    CHECK_THROWS_AS(p.kz("NYC"), MissingCoefficient);

    const std::string path =
        (std::filesystem::temp_directory_path() / "dartkit_impact.json").string();
    save_impact_params(path, p);
    const ImpactParams back = load_impact_params(path);
    CHECK(back.k_e_plus == p.k_e_plus);
    CHECK(back.k_e_minus == p.k_e_minus);
    CHECK(back.k_z == p.k_z);
    CHECK(back.reference_zone == p.reference_zone);
    CHECK(back.k_reference == p.k_reference);
    CHECK(back.mean_loads == p.mean_loads);
    std::remove(path.c_str());
}

TEST_CASE("published slope arithmetic reproduces") {
    // Realized-impact check: 1000 * delta_p / q for reported (q, delta_p)
    // pairs matches the published per-1000 MWh slopes.
    struct Row {
        double q, dp, slope;
    };
    for (const Row& r : {Row{72.6, 1.51, 20.80}}) {
        CHECK(std::abs(1000.0 * r.dp / r.q - r.slope) < 0.01);
    }
}

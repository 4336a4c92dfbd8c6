#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "dartkit/errors.hpp"
#include "dartkit/panel.hpp"
#include "dartkit/synth.hpp"

using namespace dartkit;

namespace {

std::string write_temp(const char* name, const std::string& content) {
    const std::string path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream out(path);
    out << content;
    return path;
}

const char* kHeader =
    "timestamp,zone,da_price,rt_price,zonal_load_forecast,zonal_load_actual,"
    "system_load_forecast,loss_component,congestion_component\n";

}  // namespace

TEST_CASE("load computes the spread") {
    const std::string path = write_temp(
        "dartkit_panel1.csv",
        std::string(kHeader) +
            "2021-01-05T01:00:00-05:00,LONGIL,10,7,100,101,500,1,2\n"
            "2021-01-05T02:00:00-05:00,LONGIL,12,15,100,99,500,1,2\n"
            "2021-01-05T03:00:00-05:00,LONGIL,8,8,100,100,500,,\n");
    const Panel p = load_panel(path, Market::NYISO);
    REQUIRE(p.rows.size() == 3);
    CHECK(p.rows[0].dart == 3.0);
    CHECK(p.rows[1].dart == -3.0);
    CHECK(p.rows[2].dart == 0.0);
    CHECK(!p.rows[2].loss_component.has_value());
    CHECK(p.zones == std::vector<std::string>{"LONGIL"});
    std::remove(path.c_str());
}

TEST_CASE("stated spread must match the prices") {
    const std::string path = write_temp(
        "dartkit_panel2.csv",
        "timestamp,zone,da_price,rt_price,dart,zonal_load_forecast,zonal_load_actual,"
        "system_load_forecast,loss_component,congestion_component\n"
        "2021-01-05T01:00:00-05:00,LONGIL,10,7,4,100,101,500,1,2\n");
    CHECK_THROWS_AS(load_panel(path, Market::NYISO), InvariantViolation);
    std::remove(path.c_str());
}

TEST_CASE("duplicate key rejected with the offending key") {
    const std::string path = write_temp(
        "dartkit_panel3.csv",
        std::string(kHeader) +
            "2021-01-05T01:00:00-05:00,LONGIL,10,7,100,101,500,1,2\n"
            "2021-01-05T01:00:00-05:00,LONGIL,11,7,100,101,500,1,2\n");
    CHECK_THROWS_WITH_AS(load_panel(path, Market::NYISO),
                         doctest::Contains("2021-01-05T01:00:00-05:00"), InvariantViolation);
    std::remove(path.c_str());
}

TEST_CASE("fall-back duplicate wall-clock hours keep both rows") {
    const std::string path = write_temp(
        "dartkit_panel4.csv",
        std::string(kHeader) +
            "2023-11-05T01:00:00-04:00,LONGIL,10,7,100,101,500,1,2\n"
            "2023-11-05T01:00:00-05:00,LONGIL,11,7,100,101,500,1,2\n");
    const Panel p = load_panel(path, Market::NYISO);
    REQUIRE(p.rows.size() == 2);
    CHECK(p.rows[0].occurrence == 0);
    CHECK(p.rows[1].occurrence == 1);
    // First occurrence wins in the wall-clock index.
    CHECK(p.find_local("LONGIL", p.rows[0].timestamp.local_sec()) == 0);
    std::remove(path.c_str());
}

TEST_CASE("negative load rejected") {
    const std::string path = write_temp(
        "dartkit_panel5.csv",
        std::string(kHeader) + "2021-01-05T01:00:00-05:00,LONGIL,10,7,-5,101,500,1,2\n");
    CHECK_THROWS_AS(load_panel(path, Market::NYISO), InvariantViolation);
    std::remove(path.c_str());
}

TEST_CASE("unparseable row names its row number") {
    const std::string path = write_temp(
        "dartkit_panel6.csv",
        std::string(kHeader) + "2021-01-05T01:00:00-05:00,LONGIL,abc,7,100,101,500,1,2\n");
    CHECK_THROWS_WITH_AS(load_panel(path, Market::NYISO), doctest::Contains("row 2"),
                         MalformedFile);
    std::remove(path.c_str());
}

TEST_CASE("save and reload is bit-exact") {
    SynthMarketSpec spec;
    spec.days = 4;
    const SynthMarket m = synth_market(spec);
    const std::string path =
        (std::filesystem::temp_directory_path() / "dartkit_panel_rt.csv").string();
    save_panel(path, m.panel);
    const Panel back = load_panel(path, spec.market);
    REQUIRE(back.rows.size() == m.panel.rows.size());
    for (std::size_t i = 0; i < back.rows.size(); ++i) {
        CHECK(back.rows[i].timestamp.epoch_sec == m.panel.rows[i].timestamp.epoch_sec);
        CHECK(back.rows[i].zone == m.panel.rows[i].zone);
        CHECK(back.rows[i].da_price == m.panel.rows[i].da_price);
        CHECK(back.rows[i].rt_price == m.panel.rows[i].rt_price);
        CHECK(back.rows[i].dart == m.panel.rows[i].dart);
        CHECK(back.rows[i].zonal_load_forecast == m.panel.rows[i].zonal_load_forecast);
        CHECK(back.rows[i].zonal_load_actual == m.panel.rows[i].zonal_load_actual);
        CHECK(back.rows[i].system_load_forecast == m.panel.rows[i].system_load_forecast);
        CHECK(back.rows[i].loss_component == m.panel.rows[i].loss_component);
    }
    std::remove(path.c_str());
}

namespace {

Panel two_zone_panel(const std::vector<double>& a, const std::vector<double>& b) {
    Panel p;
    for (std::size_t i = 0; i < a.size(); ++i) {
        HourlyRecord r;
        r.timestamp = Timestamp{static_cast<std::int64_t>(i) * 3600, 0};
        r.zone = "A";
        r.da_price = a[i];
        r.rt_price = 0.0;
        r.dart = a[i];
        p.rows.push_back(r);
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
        HourlyRecord r;
        r.timestamp = Timestamp{static_cast<std::int64_t>(i) * 3600, 0};
        r.zone = "B";
        r.da_price = b[i];
        r.rt_price = 0.0;
        r.dart = b[i];
        p.rows.push_back(r);
    }
    p.build_index();
    return p;
}

}  // namespace

TEST_CASE("correlation anchors") {
    const std::vector<double> s{1, 5, -2, 7, 3};
    std::vector<double> neg;
    for (double v : s) neg.push_back(-v);

    auto c1 = correlation_matrix(two_zone_panel(s, s), PanelField::Dart, {"A", "B"});
    CHECK(c1[0][1] == doctest::Approx(1.0).epsilon(1e-12));
    auto c2 = correlation_matrix(two_zone_panel(s, neg), PanelField::Dart, {"A", "B"});
    CHECK(c2[0][1] == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("correlation matches a direct two-pass computation") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-40.0, 40.0);
    std::vector<double> a, b;
    for (int i = 0; i < 10; ++i) {
        a.push_back(u(rng));
        b.push_back(u(rng));
    }
    const auto c = correlation_matrix(two_zone_panel(a, b), PanelField::Dart, {"A", "B"});

    // Textbook two-pass Pearson oracle.
    double ma = 0, mb = 0;
    for (int i = 0; i < 10; ++i) {
        ma += a[i] / 10;
        mb += b[i] / 10;
    }
    double sab = 0, saa = 0, sbb = 0;
    for (int i = 0; i < 10; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    const double expected = sab / std::sqrt(saa * sbb);
    CHECK(c[0][1] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(c[1][0] == c[0][1]);
    CHECK(c[0][0] == 1.0);
    CHECK(c[1][1] == 1.0);
}

TEST_CASE("correlation degenerate and overlap errors") {
    const std::vector<double> s{1, 2, 3};
    const std::vector<double> flat{4, 4, 4};
    CHECK_THROWS_AS(correlation_matrix(two_zone_panel(s, flat), PanelField::Dart, {"A", "B"}),
                    DegenerateSeries);
    Panel p = two_zone_panel(s, s);
    // Push zone B onto disjoint hours.
    for (auto& r : p.rows)
        if (r.zone == "B") r.timestamp.epoch_sec += 86400 * 365;
    p.build_index();
    CHECK_THROWS_AS(correlation_matrix(p, PanelField::Dart, {"A", "B"}), InsufficientOverlap);
}

TEST_CASE("correlation is symmetric with unit diagonal on random panels") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-40.0, 40.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> a, b;
        for (int i = 0; i < 30; ++i) {
            a.push_back(u(rng));
            b.push_back(u(rng));
        }
        for (PanelField f : {PanelField::Dart, PanelField::SpikeIndicator}) {
            if (f == PanelField::SpikeIndicator) {
                // Guarantee both classes so the indicator has variance.
                a[0] = -100;
                a[1] = 0;
                b[0] = 100;
                b[1] = 0;
            }
            const auto c = correlation_matrix(two_zone_panel(a, b), f, {"A", "B"});
            CHECK(c[0][0] == 1.0);
            CHECK(c[1][1] == 1.0);
            CHECK(c[0][1] == c[1][0]);
            CHECK(c[0][1] >= -1.0);
            CHECK(c[0][1] <= 1.0);
        }
    }
}

TEST_CASE("quantile anchors") {
    const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    const auto q = empirical_quantiles(v, {0.0, 0.5, 1.0});
    CHECK(q[0] == 1.0);
    CHECK(q[1] == doctest::Approx(5.5).epsilon(1e-15));
    CHECK(q[2] == 10.0);
    CHECK_THROWS_AS(empirical_quantiles({}, {0.5}), EmptySeries);
}

TEST_CASE("quantiles are monotone in p") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-100.0, 100.0);
    std::vector<double> v;
    for (int i = 0; i < 57; ++i) v.push_back(u(rng));
    std::vector<double> probs;
    for (int i = 0; i <= 100; ++i) probs.push_back(i / 100.0);
    const auto q = empirical_quantiles(v, probs);
    for (std::size_t i = 1; i < q.size(); ++i) CHECK(q[i] >= q[i - 1]);
}

TEST_CASE("gate closure clock times per market") {
    CHECK(MarketCalendar::standard(Market::NYISO).gate_closure_min == 300);
    CHECK(MarketCalendar::standard(Market::ISONE).gate_closure_min == 630);
    CHECK(MarketCalendar::standard(Market::ERCOT).gate_closure_min == 600);

    // Closure precedes the operating day: day D hours close at D-1 05:00.
    const MarketCalendar cal = MarketCalendar::standard(Market::NYISO);
    const Timestamp t = parse_timestamp("2021-06-10T17:00:00-04:00");
    const std::int64_t gate = cal.gate_closure_local_sec(t);
    CHECK(gate == days_from_civil({2021, 6, 9}) * 86400 + 5 * 3600);
}

TEST_CASE("season and band rules") {
    const MarketCalendar cal = MarketCalendar::standard(Market::NYISO);
    CHECK(cal.season_of(1) == Season::Winter);
    CHECK(cal.season_of(12) == Season::Winter);
    CHECK(cal.season_of(7) == Season::Summer);
    CHECK(cal.season_of(4) == Season::Shoulder);
    CHECK(cal.season_of(10) == Season::Shoulder);

    // Wednesday 2021-06-09: start hours 7..22 are on peak.
    CHECK(cal.band_of(parse_timestamp("2021-06-09T07:00:00-04:00")) == Band::Peak);
    CHECK(cal.band_of(parse_timestamp("2021-06-09T22:00:00-04:00")) == Band::Peak);
    CHECK(cal.band_of(parse_timestamp("2021-06-09T06:00:00-04:00")) == Band::OffPeak);
    CHECK(cal.band_of(parse_timestamp("2021-06-09T23:00:00-04:00")) == Band::OffPeak);
    // Saturday is off peak at any hour.
    CHECK(cal.band_of(parse_timestamp("2021-06-12T12:00:00-04:00")) == Band::OffPeak);
    // Declared holidays are off peak.
    MarketCalendar hol = cal;
    hol.holidays.insert(days_from_civil({2021, 6, 9}));
    CHECK(hol.band_of(parse_timestamp("2021-06-09T12:00:00-04:00")) == Band::OffPeak);
}

TEST_CASE("split ordering enforced") {
    SplitSpec s;
    s.train = {{2015, 1, 1}, {2020, 1, 1}};
    s.validation = {{2020, 1, 1}, {2022, 1, 1}};
    s.test = {{2022, 1, 1}, {2026, 1, 1}};
    CHECK_NOTHROW(s.validate());
    s.validation.begin = {2019, 6, 1};
    CHECK_THROWS_AS(s.validate(), SplitOverlap);
}

#include "dartkit/panel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dartkit/csv.hpp"
#include "dartkit/errors.hpp"

namespace dartkit {

Market parse_market(const std::string& s) {
    if (s == "NYISO") return Market::NYISO;
    if (s == "ISONE" || s == "ISO-NE") return Market::ISONE;
    if (s == "ERCOT") return Market::ERCOT;
    throw ConfigError("unknown market '" + s + "'");
}

std::string to_string(Market m) {
    switch (m) {
        case Market::NYISO: return "NYISO";
        case Market::ISONE: return "ISONE";
        case Market::ERCOT: return "ERCOT";
    }
    return "?";
}

std::string to_string(Season s) {
    switch (s) {
        case Season::Winter: return "Winter";
        case Season::Summer: return "Summer";
        case Season::Shoulder: return "Shoulder";
    }
    return "?";
}

std::string to_string(Band b) { return b == Band::Peak ? "Peak" : "OffPeak"; }

MarketCalendar MarketCalendar::standard(Market m) {
    MarketCalendar cal;
    cal.market = m;
    switch (m) {
        case Market::NYISO: cal.gate_closure_min = 5 * 60; break;        // 05:00
        case Market::ISONE: cal.gate_closure_min = 10 * 60 + 30; break;  // 10:30
        case Market::ERCOT: cal.gate_closure_min = 10 * 60; break;       // 10:00
    }
    for (int month = 1; month <= 12; ++month) {
        Season s = Season::Shoulder;
        if (month == 12 || month <= 2) s = Season::Winter;
        if (month >= 6 && month <= 8) s = Season::Summer;
        cal.season_rule[month] = s;
    }
    return cal;
}

Season MarketCalendar::season_of(int month) const {
    auto it = season_rule.find(month);
    if (it == season_rule.end()) throw ConfigError("season rule undefined for month");
    return it->second;
}

Band MarketCalendar::band_of(const Timestamp& t) const {
    const int h = t.local_hour();
    if (is_weekend(t.local_weekday()) || is_holiday(t.local_day())) return Band::OffPeak;
    return (h >= peak_start_hour && h <= peak_end_hour) ? Band::Peak : Band::OffPeak;
}

Bucket MarketCalendar::bucket_of(const Timestamp& t) const {
    return {season_of(t.local_month()), band_of(t)};
}

bool MarketCalendar::is_holiday(std::int64_t local_day) const {
    return holidays.count(local_day) > 0;
}

std::int64_t MarketCalendar::gate_closure_local_sec(const Timestamp& t) const {
    return (t.local_day() - 1) * 86400LL + 60LL * gate_closure_min;
}

void SplitSpec::validate() const {
    auto bad = [](const DateRange& r) { return !(r.begin < r.end); };
    if (bad(train) || bad(validation) || bad(test))
        throw SplitOverlap("each split range must satisfy begin < end");
    if (!(train.end <= validation.begin) || !(validation.end <= test.begin))
        throw SplitOverlap("splits must be disjoint and ordered: train [" + format_date(train.begin) +
                           ", " + format_date(train.end) + "), validation [" +
                           format_date(validation.begin) + ", " + format_date(validation.end) +
                           "), test [" + format_date(test.begin) + ", " + format_date(test.end) +
                           ")");
}

void Panel::build_index() {
    local_index.clear();
    zones.clear();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto key = std::make_pair(rows[i].zone, rows[i].timestamp.local_sec());
        local_index.emplace(key, i);  // first occurrence wins
    }
    std::set<std::string> zs;
    for (const auto& r : rows) zs.insert(r.zone);
    zones.assign(zs.begin(), zs.end());
}

std::ptrdiff_t Panel::find_local(const std::string& zone, std::int64_t local_sec) const {
    auto it = local_index.find({zone, local_sec});
    return it == local_index.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

namespace {

double parse_number(const std::string& s, std::size_t row, const std::string& col) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw MalformedFile("row " + std::to_string(row) + ": bad numeric value '" + s +
                            "' in column " + col);
    }
}

}  // namespace

Panel load_panel(const std::string& path, Market /*market*/) {
    const CsvTable t = read_csv(path);
    const std::size_t c_ts = t.column("timestamp");
    const std::size_t c_zone = t.column("zone");
    const std::size_t c_da = t.column("da_price");
    const std::size_t c_rt = t.column("rt_price");
    const std::size_t c_zlf = t.column("zonal_load_forecast");
    const std::size_t c_zla = t.column("zonal_load_actual");
    const std::size_t c_slf = t.column("system_load_forecast");
    const std::size_t c_loss = t.column("loss_component");
    const std::size_t c_cong = t.column("congestion_component");
    const auto c_dart = t.find_column("dart");

    Panel panel;
    panel.rows.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        const std::size_t rowno = i + 2;  // 1-based, after header
        if (r.size() < t.header.size())
            throw MalformedFile("row " + std::to_string(rowno) + ": expected " +
                                std::to_string(t.header.size()) + " fields, got " +
                                std::to_string(r.size()));
        HourlyRecord rec;
        rec.timestamp = parse_timestamp(r[c_ts]);
        rec.zone = r[c_zone];
        rec.da_price = parse_number(r[c_da], rowno, "da_price");
        rec.rt_price = parse_number(r[c_rt], rowno, "rt_price");
        rec.dart = rec.da_price - rec.rt_price;
        if (c_dart && !r[*c_dart].empty()) {
            const double stated = parse_number(r[*c_dart], rowno, "dart");
            if (stated != rec.dart)
                throw InvariantViolation("row " + std::to_string(rowno) +
                                         ": dart != da_price - rt_price (" + r[*c_dart] + " vs " +
                                         format_double(rec.dart) + ")");
        }
        rec.zonal_load_forecast = parse_number(r[c_zlf], rowno, "zonal_load_forecast");
        rec.zonal_load_actual = parse_number(r[c_zla], rowno, "zonal_load_actual");
        rec.system_load_forecast = parse_number(r[c_slf], rowno, "system_load_forecast");
        if (!r[c_loss].empty()) rec.loss_component = parse_number(r[c_loss], rowno, "loss_component");
        if (!r[c_cong].empty())
            rec.congestion_component = parse_number(r[c_cong], rowno, "congestion_component");

        if (!std::isfinite(rec.da_price) || !std::isfinite(rec.rt_price))
            throw InvariantViolation("row " + std::to_string(rowno) + ": non-finite price");
        if (!(rec.zonal_load_forecast >= 0) || !(rec.zonal_load_actual >= 0) ||
            !(rec.system_load_forecast >= 0) || !std::isfinite(rec.zonal_load_forecast) ||
            !std::isfinite(rec.zonal_load_actual) || !std::isfinite(rec.system_load_forecast))
            throw InvariantViolation("row " + std::to_string(rowno) +
                                     ": loads must be finite and non-negative");
        panel.rows.push_back(std::move(rec));
    }

    std::stable_sort(panel.rows.begin(), panel.rows.end(), [](const auto& a, const auto& b) {
        return std::tie(a.zone, a.timestamp.epoch_sec) < std::tie(b.zone, b.timestamp.epoch_sec);
    });
    // Uniqueness of (timestamp, zone) by UTC instant; fall-back duplicates of
    // a local wall-clock hour differ in offset and get occurrence indices.
    for (std::size_t i = 1; i < panel.rows.size(); ++i) {
        const auto& a = panel.rows[i - 1];
        auto& b = panel.rows[i];
        if (a.zone == b.zone && a.timestamp == b.timestamp)
            throw InvariantViolation("duplicate (timestamp, zone) key: (" +
                                     format_timestamp(b.timestamp) + ", " + b.zone + ")");
        if (a.zone == b.zone && a.timestamp.local_sec() == b.timestamp.local_sec())
            b.occurrence = a.occurrence + 1;
    }
    panel.build_index();
    return panel;
}

void save_panel(const std::string& path, const Panel& panel) {
    CsvTable t;
    t.header = {"timestamp", "zone", "da_price", "rt_price", "zonal_load_forecast",
                "zonal_load_actual", "system_load_forecast", "loss_component",
                "congestion_component"};
    for (const auto& r : panel.rows) {
        t.rows.push_back({format_timestamp(r.timestamp), r.zone, format_double(r.da_price),
                          format_double(r.rt_price), format_double(r.zonal_load_forecast),
                          format_double(r.zonal_load_actual), format_double(r.system_load_forecast),
                          r.loss_component ? format_double(*r.loss_component) : "",
                          r.congestion_component ? format_double(*r.congestion_component) : ""});
    }
    write_csv(path, t);
}

std::vector<std::vector<double>> correlation_matrix(const Panel& panel, PanelField field,
                                                    const std::vector<std::string>& zones,
                                                    double gamma_neg, double gamma_pos) {
    // Collect each zone's series keyed by UTC instant.
    std::vector<std::map<std::int64_t, double>> series(zones.size());
    for (std::size_t zi = 0; zi < zones.size(); ++zi) {
        for (const auto& r : panel.rows) {
            if (r.zone != zones[zi]) continue;
            double v = r.dart;
            if (field == PanelField::SpikeIndicator)
                v = (r.dart <= -gamma_neg || r.dart >= gamma_pos) ? 1.0 : 0.0;
            series[zi][r.timestamp.epoch_sec] = v;
        }
    }
    const std::size_t n = zones.size();
    std::vector<std::vector<double>> corr(n, std::vector<double>(n, 1.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            std::vector<double> a, b;
            for (const auto& [t, v] : series[i]) {
                auto it = series[j].find(t);
                if (it != series[j].end()) {
                    a.push_back(v);
                    b.push_back(it->second);
                }
            }
            if (a.size() < 2)
                throw InsufficientOverlap("zones " + zones[i] + "/" + zones[j] + " share " +
                                          std::to_string(a.size()) + " hours");
            const double ma = std::accumulate(a.begin(), a.end(), 0.0) / a.size();
            const double mb = std::accumulate(b.begin(), b.end(), 0.0) / b.size();
            double sab = 0, saa = 0, sbb = 0;
            for (std::size_t k = 0; k < a.size(); ++k) {
                sab += (a[k] - ma) * (b[k] - mb);
                saa += (a[k] - ma) * (a[k] - ma);
                sbb += (b[k] - mb) * (b[k] - mb);
            }
            if (saa == 0 || sbb == 0)
                throw DegenerateSeries("zero variance in zone " + (saa == 0 ? zones[i] : zones[j]));
            double rho = sab / std::sqrt(saa * sbb);
            rho = std::clamp(rho, -1.0, 1.0);
            corr[i][j] = corr[j][i] = rho;
        }
    }
    return corr;
}

std::vector<double> empirical_quantiles(const std::vector<double>& values,
                                        const std::vector<double>& probs) {
    if (values.empty()) throw EmptySeries("empirical_quantiles requires a non-empty series");
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> out;
    out.reserve(probs.size());
    const std::size_t n = sorted.size();
    for (double p : probs) {
        if (p < 0.0 || p > 1.0) throw InvariantViolation("quantile probability outside [0,1]");
        const double h = p * static_cast<double>(n - 1);
        const std::size_t lo = static_cast<std::size_t>(h);
        const std::size_t hi = std::min(lo + 1, n - 1);
        const double frac = h - static_cast<double>(lo);
        out.push_back(sorted[lo] + frac * (sorted[hi] - sorted[lo]));
    }
    return out;
}

}  // namespace dartkit

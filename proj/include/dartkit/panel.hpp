#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dartkit/timeutil.hpp"

namespace dartkit {

enum class Market { NYISO, ISONE, ERCOT };
enum class Season { Winter, Summer, Shoulder };
enum class Band { Peak, OffPeak };

Market parse_market(const std::string& s);
std::string to_string(Market m);
std::string to_string(Season s);
std::string to_string(Band b);

using Bucket = std::pair<Season, Band>;

// One zone-hour observation of the market panel.
struct HourlyRecord {
    Timestamp timestamp;
    std::string zone;
    double da_price = 0.0;
    double rt_price = 0.0;  // real-time price already averaged to the hour
    double dart = 0.0;      // da_price - rt_price, recomputed on load
    double zonal_load_forecast = 0.0;
    double zonal_load_actual = 0.0;
    double system_load_forecast = 0.0;
    std::optional<double> loss_component;
    std::optional<double> congestion_component;
    // Disambiguates duplicated fall-back wall-clock hours (0 for the first
    // occurrence in UTC order).
    int occurrence = 0;
};

// Market conventions: gate closure, holidays, season and peak rules.
struct MarketCalendar {
    Market market = Market::NYISO;
    int gate_closure_min = 5 * 60;  // minutes after local midnight
    std::set<std::int64_t> holidays;  // civil day numbers (days_from_civil)

    // month -> season; defaults: Winter {12,1,2}, Summer {6,7,8}.
    std::map<int, Season> season_rule;
    // Peak = hours-ending 08..23 (start hours 7..22) on non-holiday weekdays.
    int peak_start_hour = 7;
    int peak_end_hour = 22;  // inclusive start-hour bound

    static MarketCalendar standard(Market m);

    Season season_of(int month) const;
    Band band_of(const Timestamp& t) const;
    Bucket bucket_of(const Timestamp& t) const;
    bool is_holiday(std::int64_t local_day) const;
    bool is_weekend(int weekday) const { return weekday == 0 || weekday == 6; }

    // Local wall-clock second of the gate-closure instant governing the
    // operating day that contains `t` (the day before, at closure time).
    std::int64_t gate_closure_local_sec(const Timestamp& t) const;
};

// Half-open date ranges [begin, end), pairwise disjoint and ordered.
struct DateRange {
    Date begin;
    Date end;

    bool contains(const Date& d) const { return begin <= d && d < end; }
    bool contains(const Timestamp& t) const { return contains(t.local_date()); }
};

struct SplitSpec {
    DateRange train;
    DateRange validation;
    DateRange test;

    // Throws SplitOverlap unless train < validation < test and disjoint.
    void validate() const;
};

// Immutable after load; rows sorted by (zone, timestamp).
struct Panel {
    std::vector<HourlyRecord> rows;
    std::vector<std::string> zones;  // distinct zones in first-seen sorted order

    // Index of the row for (zone, local wall-clock second); first occurrence
    // wins for duplicated fall-back hours. Returns -1 when absent.
    std::ptrdiff_t find_local(const std::string& zone, std::int64_t local_sec) const;

    std::map<std::pair<std::string, std::int64_t>, std::size_t> local_index;

    void build_index();
};

Panel load_panel(const std::string& path, Market market);
void save_panel(const std::string& path, const Panel& panel);

// Pearson correlations of `field` across zones over overlapping hours.
enum class PanelField { Dart, SpikeIndicator };

std::vector<std::vector<double>> correlation_matrix(const Panel& panel, PanelField field,
                                                    const std::vector<std::string>& zones,
                                                    double gamma_neg = 30.0,
                                                    double gamma_pos = 5.0);

// Linear interpolation between order statistics; q(0) = min, q(1) = max.
std::vector<double> empirical_quantiles(const std::vector<double>& values,
                                        const std::vector<double>& probs);

}  // namespace dartkit

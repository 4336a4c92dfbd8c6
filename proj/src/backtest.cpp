#include "dartkit/backtest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

#include "dartkit/csv.hpp"
#include "dartkit/errors.hpp"

namespace dartkit {

std::string to_string(StrategyMode m) {
    switch (m) {
        case StrategyMode::Unconstrained: return "unconstrained";
        case StrategyMode::Clipped: return "clipped";
        case StrategyMode::Restricted: return "restricted";
    }
    return "?";
}

StrategyMode parse_strategy_mode(const std::string& s) {
    if (s == "unconstrained") return StrategyMode::Unconstrained;
    if (s == "clipped") return StrategyMode::Clipped;
    if (s == "restricted") return StrategyMode::Restricted;
    throw ConfigError("unknown strategy mode '" + s + "'");
}

ClassificationMetrics classification_metrics(const std::vector<int>& signals,
                                             const std::vector<int>& labels) {
    if (signals.size() != labels.size())
        throw DimensionMismatch("signals and labels must align");
    ClassificationMetrics m;
    for (std::size_t i = 0; i < signals.size(); ++i) {
        if (signals[i] && labels[i])
            ++m.counts.tp;
        else if (signals[i] && !labels[i])
            ++m.counts.fp;
        else if (!signals[i] && labels[i])
            ++m.counts.fn;
        else
            ++m.counts.tn;
    }
    if (m.counts.tp + m.counts.fp > 0)
        m.precision = static_cast<double>(m.counts.tp) / (m.counts.tp + m.counts.fp);
    if (m.counts.tp + m.counts.fn > 0)
        m.recall = static_cast<double>(m.counts.tp) / (m.counts.tp + m.counts.fn);
    if (m.precision && m.recall && (*m.precision + *m.recall) > 0)
        m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
    return m;
}

double js_divergence(std::vector<double> p, std::vector<double> q) {
    if (p.size() != q.size()) throw DimensionMismatch("distributions need a common support");
    if (p.empty()) throw EmptySupport("empty distributions");
    double sp = 0.0, sq = 0.0;
    for (double v : p) sp += v;
    for (double v : q) sq += v;
    if (!(sp > 0) || !(sq > 0)) throw EmptySupport("distribution mass must be positive");
    for (double& v : p) v /= sp;
    for (double& v : q) v /= sq;
    double js = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        if (p[i] > 0) js += 0.5 * p[i] * std::log(p[i] / m);
        if (q[i] > 0) js += 0.5 * q[i] * std::log(q[i] / m);
    }
    return std::clamp(js, 0.0, std::log(2.0));
}

namespace {

std::size_t axis_bins(AlignmentAxis axis) { return axis == AlignmentAxis::HourOfDay ? 24 : 12; }

std::size_t axis_bin(AlignmentAxis axis, const Timestamp& t) {
    return axis == AlignmentAxis::HourOfDay ? static_cast<std::size_t>(t.local_hour())
                                            : static_cast<std::size_t>(t.local_month() - 1);
}

std::vector<double> normalized(std::vector<double> h) {
    double s = 0.0;
    for (double v : h) s += v;
    if (s > 0)
        for (double& v : h) v /= s;
    return h;
}

}  // namespace

AlignmentResult spike_alignment(const std::vector<Timestamp>& trades,
                                const std::vector<SpikeHour>& spikes, AlignmentAxis axis,
                                double top_fraction) {
    if (trades.empty()) throw EmptyTrades("spike_alignment requires at least one trade");
    if (spikes.empty()) throw EmptyTrades("spike_alignment requires realized spike hours");
    const std::size_t bins = axis_bins(axis);

    AlignmentResult res;
    res.trade_hist.assign(bins, 0.0);
    res.top_hist.assign(bins, 0.0);
    res.all_hist.assign(bins, 0.0);
    for (const auto& t : trades) res.trade_hist[axis_bin(axis, t)] += 1.0;
    for (const auto& s : spikes) res.all_hist[axis_bin(axis, s.timestamp)] += 1.0;

    std::vector<SpikeHour> sorted = spikes;
    std::stable_sort(sorted.begin(), sorted.end(), [](const SpikeHour& a, const SpikeHour& b) {
        if (a.magnitude != b.magnitude) return a.magnitude > b.magnitude;
        return a.timestamp < b.timestamp;
    });
    const std::size_t top_n = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(top_fraction * static_cast<double>(sorted.size()))));
    for (std::size_t i = 0; i < top_n; ++i) res.top_hist[axis_bin(axis, sorted[i].timestamp)] += 1.0;

    res.trade_hist = normalized(res.trade_hist);
    res.top_hist = normalized(res.top_hist);
    res.all_hist = normalized(res.all_hist);
    res.js_top = js_divergence(res.trade_hist, res.top_hist);
    res.js_all = js_divergence(res.trade_hist, res.all_hist);
    return res;
}

std::map<SigKey, BucketStat> bucket_significance(
    const std::map<SigKey, std::vector<double>>& bucket_pnl, std::size_t min_trades,
    double t_threshold) {
    std::map<SigKey, BucketStat> out;
    for (const auto& [key, pnl] : bucket_pnl) {
        BucketStat s;
        s.n = pnl.size();
        if (s.n == 0) {
            out[key] = s;
            continue;
        }
        double mean = 0.0;
        for (double v : pnl) mean += v;
        mean /= static_cast<double>(s.n);
        s.mean = mean;
        double ss = 0.0;
        for (double v : pnl) ss += (v - mean) * (v - mean);
        const double sd = s.n > 1 ? std::sqrt(ss / static_cast<double>(s.n - 1)) : 0.0;
        if (sd == 0.0) {
            s.tstat = mean > 0   ? std::numeric_limits<double>::infinity()
                      : mean < 0 ? -std::numeric_limits<double>::infinity()
                                 : 0.0;
        } else {
            s.tstat = mean / (sd / std::sqrt(static_cast<double>(s.n)));
        }
        s.admitted = s.n >= min_trades && s.tstat > t_threshold;
        out[key] = s;
    }
    return out;
}

std::map<std::string, ZoneAttribution> BacktestReport::attribution(bool execution_view) const {
    const auto& trades = execution_view ? exec_trades : pred_trades;
    std::map<std::string, ZoneAttribution> out;
    for (const auto& t : trades) {
        auto& a = out[t.zone];
        ++a.hours_active;
        a.avg_abs_q += std::abs(t.q);
        a.pnl += t.pnl;
    }
    for (auto& [zone, a] : out)
        if (a.hours_active) a.avg_abs_q /= static_cast<double>(a.hours_active);
    return out;
}

std::map<int, double> BacktestReport::yearly_pnl(bool execution_view) const {
    const auto& trades = execution_view ? exec_trades : pred_trades;
    std::map<int, double> out;
    for (const auto& t : trades) out[t.timestamp.local_year()] += t.pnl;
    return out;
}

double BacktestReport::total_pnl(bool execution_view) const {
    const auto& trades = execution_view ? exec_trades : pred_trades;
    double s = 0.0;
    for (const auto& t : trades) s += t.pnl;
    return s;
}

namespace {

int spike_label(double dart, Side side, double gamma) {
    return side == Side::INC ? (dart <= -gamma ? 1 : 0) : (dart >= gamma ? 1 : 0);
}

void fill_metrics(BacktestReport& report, const std::vector<SpikeModel>& models,
                  const std::vector<LabeledObservation>& test) {
    for (const auto& model : models) {
        std::vector<int> signals, labels;
        for (const auto& o : test) {
            if (o.zone != model.zone) continue;
            signals.push_back(predict(model, o.x) >= model.tau ? 1 : 0);
            labels.push_back(spike_label(o.realized_dart, model.side, model.gamma));
        }
        if (signals.empty()) continue;
        auto& dest = model.side == Side::INC ? report.metrics_inc : report.metrics_dec;
        dest[model.zone] = classification_metrics(signals, labels);
    }
}

void fill_alignment(BacktestReport& report, const std::vector<SpikeModel>& models,
                    const std::vector<LabeledObservation>& test, double top_inc, double top_dec) {
    for (Side side : {Side::INC, Side::DEC}) {
        std::vector<Timestamp> trades;
        for (const auto& t : report.pred_trades)
            if (t.side == side) trades.push_back(t.timestamp);
        std::vector<SpikeHour> spikes;
        for (const auto& model : models) {
            if (model.side != side) continue;
            for (const auto& o : test) {
                if (o.zone != model.zone) continue;
                if (spike_label(o.realized_dart, side, model.gamma))
                    spikes.push_back({o.timestamp, std::abs(o.realized_dart)});
            }
        }
        try {
            auto res = spike_alignment(trades, spikes, AlignmentAxis::HourOfDay,
                                       side == Side::INC ? top_inc : top_dec);
            (side == Side::INC ? report.alignment_inc : report.alignment_dec) = res;
        } catch (const EmptyTrades&) {
            // no trades or no realized spikes on this side; diagnostic absent
        }
    }
}

}  // namespace

BacktestReport run_benchmark(const std::vector<SpikeModel>& models,
                             const std::vector<LabeledObservation>& test, Side side) {
    BacktestReport report;
    std::set<std::int64_t> hours;
    for (const auto& o : test) hours.insert(o.timestamp.epoch_sec);
    report.n_test_hours = hours.size();

    std::vector<SpikeModel> side_models;
    for (const auto& m : models)
        if (m.side == side) side_models.push_back(m);

    for (const auto& o : test) {
        for (const auto& model : side_models) {
            if (o.zone != model.zone) continue;
            if (predict(model, o.x) < model.tau) continue;
            TradeRecord t;
            t.timestamp = o.timestamp;
            t.zone = o.zone;
            t.side = side;
            t.q = side == Side::INC ? 1.0 : -1.0;
            t.r = -o.realized_dart;  // per signed MWh
            t.impact_cost = 0.0;
            t.pnl = t.q * t.r;
            report.exec_trades.push_back(t);
            report.pred_trades.push_back(t);
        }
    }
    fill_metrics(report, side_models, test);
    fill_alignment(report, side_models, test, 0.20, 0.05);
    return report;
}

BacktestReport run_strategy(const StrategyInputs& inputs,
                            const std::vector<LabeledObservation>& test,
                            const MarketCalendar& calendar, StrategyMode mode) {
    if (inputs.params.k_e_plus.empty() || inputs.params.k_e_minus.empty())
        throw MissingCalibration("impact parameters are not calibrated");

    std::map<PayoffKey, const SpikeModel*> model_of;
    for (const auto& m : inputs.models) model_of[{m.zone, m.side}] = &m;

    // Group test observations by hour, zones sorted for determinism.
    std::map<std::int64_t, std::vector<const LabeledObservation*>> hours;
    for (const auto& o : test) hours[o.timestamp.epoch_sec].push_back(&o);
    for (auto& [epoch, obs] : hours)
        std::sort(obs.begin(), obs.end(),
                  [](const LabeledObservation* a, const LabeledObservation* b) {
                      return a->zone < b->zone;
                  });

    BacktestReport report;
    report.n_test_hours = hours.size();
    report.bucket_stats = inputs.admissible_buckets;

    for (const auto& [epoch, obs] : hours) {
        const Timestamp ts = obs.front()->timestamp;
        const Bucket bucket = calendar.bucket_of(ts);

        ExpectedPayoffs payoffs;
        std::vector<double> darts;
        for (const auto* o : obs) {
            // Pick the fired, eligible side with the larger validation edge.
            const PayoffEntry* chosen = nullptr;
            PayoffEntry cand;
            for (Side side : {Side::INC, Side::DEC}) {
                auto mit = model_of.find({o->zone, side});
                if (mit == model_of.end()) continue;
                const SpikeModel& model = *mit->second;
                if (predict(model, o->x) < model.tau) continue;
                auto pit = inputs.payoffs.find({o->zone, side});
                if (pit == inputs.payoffs.end() || !pit->second.eligible) continue;
                double edge = pit->second.mean_edge;
                if (mode == StrategyMode::Restricted) {
                    const SigKey key{o->zone, bucket.first, bucket.second, side};
                    auto bit = inputs.admissible_buckets.find(key);
                    if (bit == inputs.admissible_buckets.end() || !bit->second.admitted) continue;
                    auto bp = inputs.bucket_payoffs.find(
                        {o->zone, side, bucket.first, bucket.second});
                    if (bp != inputs.bucket_payoffs.end() && bp->second.trades > 0 &&
                        bp->second.mean_edge > 0)
                        edge = bp->second.mean_edge;
                }
                if (!chosen || edge > chosen->edge) {
                    cand = PayoffEntry{o->zone, side, edge};
                    chosen = &cand;
                }
            }
            if (chosen) {
                payoffs.entries.push_back(*chosen);
                darts.push_back(o->realized_dart);
            }
        }
        if (payoffs.entries.empty()) continue;

        // Prediction view: unit size in the predicted direction, no impact.
        for (std::size_t i = 0; i < payoffs.entries.size(); ++i) {
            const auto& e = payoffs.entries[i];
            TradeRecord t;
            t.timestamp = ts;
            t.zone = e.zone;
            t.side = e.side;
            t.q = e.side == Side::INC ? 1.0 : -1.0;
            t.r = -darts[i];
            t.impact_cost = 0.0;
            t.pnl = t.q * t.r;
            report.pred_trades.push_back(t);
        }

        // Execution view: jointly optimized quantities with impact.
        TradePlan plan;
        try {
            if (inputs.unit_size) {
                plan.q = std::vector<double>(payoffs.entries.size(), 0.0);
                for (std::size_t i = 0; i < plan.q.size(); ++i)
                    plan.q[i] = payoffs.entries[i].side == Side::INC ? 1.0 : -1.0;
                plan.net_position = 0.0;
                for (double v : plan.q) plan.net_position += v;
                plan.regime = plan.net_position > 0   ? Regime::NetBuy
                              : plan.net_position < 0 ? Regime::NetSell
                                                      : Regime::NetFlat;
            } else {
                const SizingProblem problem = make_problem(payoffs, inputs.params, bucket);
                plan = mode == StrategyMode::Unconstrained
                           ? optimize(problem)
                           : optimize_clipped(problem, payoffs.hint_signs());
            }
        } catch (const MissingCoefficient& e) {
            throw MissingCalibration(e.what());
        }

        const double S = plan.net_position;
        const double ke =
            S > 0 ? inputs.params.ke(bucket, true) : S < 0 ? inputs.params.ke(bucket, false) : 0.0;
        PlannedHour ph;
        ph.timestamp = ts;
        for (const auto& e : payoffs.entries) ph.zones.push_back(e.zone);
        ph.plan = plan;
        report.plans.push_back(ph);

        for (std::size_t i = 0; i < payoffs.entries.size(); ++i) {
            const double q = plan.q[i];
            if (q == 0.0) continue;
            TradeRecord t;
            t.timestamp = ts;
            t.zone = payoffs.entries[i].zone;
            t.q = q;
            t.side = q > 0 ? Side::INC : Side::DEC;
            t.r = -darts[i];
            t.impact_cost = ke * S + inputs.params.kz(t.zone) * q;
            t.pnl = q * (t.r - t.impact_cost);
            report.exec_trades.push_back(t);
        }
    }

    fill_metrics(report, inputs.models, test);
    fill_alignment(report, inputs.models, test, inputs.top_fraction_inc, inputs.top_fraction_dec);
    return report;
}

std::string file_hash_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for hashing");
    std::uint64_t h = 1469598103934665603ULL;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
        if (!in) break;
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

namespace {

std::string fmt_opt(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

void write_trades(const std::string& path, const std::vector<TradeRecord>& trades) {
    CsvTable t;
    t.header = {"timestamp", "zone", "q_mwh", "side", "r", "impact_cost", "pnl"};
    for (const auto& tr : trades)
        t.rows.push_back({format_timestamp(tr.timestamp), tr.zone, format_double(tr.q),
                          to_string(tr.side), format_double(tr.r), format_double(tr.impact_cost),
                          format_double(tr.pnl)});
    write_csv(path, t);
}

void write_attribution(const std::string& path, const BacktestReport& report,
                       bool execution_view) {
    CsvTable t;
    t.header = {"zone", "hours_active", "avg_abs_q_mwh", "pnl_usd"};
    const auto attr = report.attribution(execution_view);
    double total = 0.0;
    std::size_t hours = 0;
    for (const auto& [zone, a] : attr) {
        t.rows.push_back({zone, std::to_string(a.hours_active), format_double(a.avg_abs_q),
                          format_double(a.pnl)});
        total += a.pnl;
        hours += a.hours_active;
    }
    t.rows.push_back({"TOTAL", std::to_string(hours), "", format_double(total)});
    write_csv(path, t);
}

void write_metrics(const std::string& path,
                   const std::map<std::string, ClassificationMetrics>& metrics) {
    CsvTable t;
    t.header = {"zone", "precision", "recall", "f1", "tp", "fp", "fn", "tn"};
    for (const auto& [zone, m] : metrics)
        t.rows.push_back({zone, fmt_opt(m.precision), fmt_opt(m.recall), fmt_opt(m.f1),
                          std::to_string(m.counts.tp), std::to_string(m.counts.fp),
                          std::to_string(m.counts.fn), std::to_string(m.counts.tn)});
    write_csv(path, t);
}

}  // namespace

std::vector<std::string> emit_report(const BacktestReport& report, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::vector<std::string> files;
    auto path = [&](const char* name) {
        files.push_back((fs::path(out_dir) / name).string());
        return files.back();
    };

    // Cumulative P&L series over the union of trade hours.
    {
        std::map<std::int64_t, std::array<double, 4>> by_hour;  // exec_inc, exec_dec, pred_inc, pred_dec
        std::map<std::int64_t, Timestamp> ts_of;
        for (const auto& t : report.exec_trades) {
            by_hour[t.timestamp.epoch_sec][t.side == Side::INC ? 0 : 1] += t.pnl;
            ts_of[t.timestamp.epoch_sec] = t.timestamp;
        }
        for (const auto& t : report.pred_trades) {
            by_hour[t.timestamp.epoch_sec][t.side == Side::INC ? 2 : 3] += t.pnl;
            ts_of[t.timestamp.epoch_sec] = t.timestamp;
        }
        CsvTable t;
        t.header = {"timestamp", "exec_inc_cum", "exec_dec_cum", "exec_total_cum",
                    "pred_inc_cum", "pred_dec_cum", "pred_total_cum"};
        std::array<double, 4> cum{};
        for (const auto& [epoch, v] : by_hour) {
            for (int i = 0; i < 4; ++i) cum[i] += v[i];
            t.rows.push_back({format_timestamp(ts_of[epoch]), format_double(cum[0]),
                              format_double(cum[1]), format_double(cum[0] + cum[1]),
                              format_double(cum[2]), format_double(cum[3]),
                              format_double(cum[2] + cum[3])});
        }
        write_csv(path("pnl_series.csv"), t);
    }

    write_trades(path("trades_execution.csv"), report.exec_trades);
    write_trades(path("trades_prediction.csv"), report.pred_trades);
    write_attribution(path("attribution_execution.csv"), report, true);
    write_attribution(path("attribution_prediction.csv"), report, false);

    {
        CsvTable t;
        t.header = {"year", "exec_pnl_usd", "pred_pnl_usd"};
        auto exec_y = report.yearly_pnl(true);
        auto pred_y = report.yearly_pnl(false);
        std::set<int> years;
        for (const auto& [y, v] : exec_y) years.insert(y);
        for (const auto& [y, v] : pred_y) years.insert(y);
        for (int y : years)
            t.rows.push_back({std::to_string(y),
                              format_double(exec_y.count(y) ? exec_y[y] : 0.0),
                              format_double(pred_y.count(y) ? pred_y[y] : 0.0)});
        write_csv(path("yearly.csv"), t);
    }

    write_metrics(path("metrics_inc.csv"), report.metrics_inc);
    write_metrics(path("metrics_dec.csv"), report.metrics_dec);

    {
        CsvTable t;
        t.header = {"side", "js_top", "js_all"};
        if (report.alignment_inc)
            t.rows.push_back({"INC", format_double(report.alignment_inc->js_top),
                              format_double(report.alignment_inc->js_all)});
        if (report.alignment_dec)
            t.rows.push_back({"DEC", format_double(report.alignment_dec->js_top),
                              format_double(report.alignment_dec->js_all)});
        write_csv(path("js_divergence.csv"), t);
    }

    {
        CsvTable t;
        t.header = {"side", "series", "bin", "mass"};
        auto dump = [&](const char* side, const AlignmentResult& a) {
            auto series = [&](const char* name, const std::vector<double>& h) {
                for (std::size_t i = 0; i < h.size(); ++i)
                    t.rows.push_back({side, name, std::to_string(i), format_double(h[i])});
            };
            series("trades", a.trade_hist);
            series("top_spikes", a.top_hist);
            series("all_spikes", a.all_hist);
        };
        if (report.alignment_inc) dump("INC", *report.alignment_inc);
        if (report.alignment_dec) dump("DEC", *report.alignment_dec);
        write_csv(path("histograms.csv"), t);
    }

    {
        CsvTable t;
        t.header = {"zone", "season", "band", "side", "mean_pnl", "tstat", "n", "admitted"};
        for (const auto& [key, s] : report.bucket_stats) {
            t.rows.push_back({std::get<0>(key), to_string(std::get<1>(key)),
                              to_string(std::get<2>(key)), to_string(std::get<3>(key)),
                              format_double(s.mean), format_double(s.tstat), std::to_string(s.n),
                              s.admitted ? "1" : "0"});
        }
        write_csv(path("buckets.csv"), t);
    }

    if (!report.plans.empty()) save_plans(path("trade_plans.csv"), report.plans);

    return files;
}

}  // namespace dartkit

#include "dartkit/sizing.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dartkit/csv.hpp"
#include "dartkit/errors.hpp"

namespace dartkit {

std::string to_string(Regime r) {
    switch (r) {
        case Regime::NetBuy: return "net_buy";
        case Regime::NetSell: return "net_sell";
        case Regime::NetFlat: return "net_flat";
    }
    return "?";
}

std::vector<double> ExpectedPayoffs::signed_x() const {
    std::vector<double> x;
    x.reserve(entries.size());
    for (const auto& e : entries) x.push_back(e.side == Side::INC ? e.edge : -e.edge);
    return x;
}

std::vector<int> ExpectedPayoffs::hint_signs() const {
    std::vector<int> s;
    s.reserve(entries.size());
    for (const auto& e : entries) s.push_back(e.side == Side::INC ? 1 : -1);
    return s;
}

SizingProblem make_problem(const ExpectedPayoffs& payoffs, const ImpactParams& params,
                           Bucket bucket) {
    SizingProblem p;
    p.x = payoffs.signed_x();
    for (const auto& e : payoffs.entries) p.kz.push_back(params.kz(e.zone));
    p.ke_plus = params.ke(bucket, true);
    p.ke_minus = params.ke(bucket, false);
    return p;
}

double objective(const SizingProblem& p, const std::vector<double>& q) {
    if (q.size() != p.x.size()) throw DimensionMismatch("objective: q vs x length");
    double S = 0.0, lin = 0.0, local = 0.0;
    for (std::size_t z = 0; z < q.size(); ++z) {
        S += q[z];
        lin += p.x[z] * q[z];
        local += p.kz[z] * q[z] * q[z];
    }
    const double ke = S >= 0 ? p.ke_plus : p.ke_minus;
    return lin - ke * S * S - local;
}

namespace {

void check_kz(const std::vector<double>& x, const std::vector<double>& kz) {
    if (x.size() != kz.size()) throw DimensionMismatch("x vs kz length");
    if (x.empty()) throw MissingCoefficient("sizing requires at least one zone");
    for (double k : kz)
        if (!(k > 0) || !std::isfinite(k)) throw MissingCoefficient("k_z must be positive finite");
}

// Closed-form interior solution restricted to a free set; clamped zones
// hold q = 0 and contribute nothing to H or N.
RegimeSolution solve_regime_masked(const std::vector<double>& x, const std::vector<double>& kz,
                                   double ke, const std::vector<bool>& free) {
    RegimeSolution sol;
    sol.q.assign(x.size(), 0.0);
    double H = 0.0, N = 0.0;
    for (std::size_t z = 0; z < x.size(); ++z) {
        if (!free[z]) continue;
        H += 1.0 / kz[z];
        N += x[z] / kz[z];
    }
    if (H == 0.0) return sol;
    const double S = (N / 2.0) / (1.0 + ke * H);
    for (std::size_t z = 0; z < x.size(); ++z)
        if (free[z]) sol.q[z] = (x[z] - 2.0 * ke * S) / (2.0 * kz[z]);
    sol.net_position = S;
    return sol;
}

// Equality-constrained (sum q = 0) optimum over the free set; the Lagrange
// multiplier is N/H. Fewer than two free zones pin everything at zero.
struct FlatSolution {
    std::vector<double> q;
    double lambda = 0.0;
    bool pinned = false;
};

FlatSolution solve_flat_masked(const std::vector<double>& x, const std::vector<double>& kz,
                               const std::vector<bool>& free) {
    FlatSolution sol;
    sol.q.assign(x.size(), 0.0);
    std::size_t nfree = 0;
    double H = 0.0, N = 0.0;
    for (std::size_t z = 0; z < x.size(); ++z) {
        if (!free[z]) continue;
        ++nfree;
        H += 1.0 / kz[z];
        N += x[z] / kz[z];
    }
    if (nfree < 2) {
        sol.pinned = true;
        return sol;
    }
    sol.lambda = N / H;
    for (std::size_t z = 0; z < x.size(); ++z)
        if (free[z]) sol.q[z] = (x[z] - sol.lambda) / (2.0 * kz[z]);
    return sol;
}

}  // namespace

RegimeSolution solve_regime(const std::vector<double>& x, const std::vector<double>& kz,
                            double ke) {
    check_kz(x, kz);
    return solve_regime_masked(x, kz, ke, std::vector<bool>(x.size(), true));
}

std::vector<double> solve_net_flat(const std::vector<double>& x, const std::vector<double>& kz) {
    check_kz(x, kz);
    return solve_flat_masked(x, kz, std::vector<bool>(x.size(), true)).q;
}

TradePlan optimize(const SizingProblem& p) {
    check_kz(p.x, p.kz);
    TradePlan best;
    best.q = solve_net_flat(p.x, p.kz);
    best.net_position = 0.0;
    best.regime = Regime::NetFlat;
    best.objective = objective(p, best.q);

    const RegimeSolution buy = solve_regime(p.x, p.kz, p.ke_plus);
    if (buy.net_position > 0) {
        const double f = objective(p, buy.q);
        if (f > best.objective) {
            best = TradePlan{buy.q, buy.net_position, Regime::NetBuy, f};
        }
    }
    const RegimeSolution sell = solve_regime(p.x, p.kz, p.ke_minus);
    if (sell.net_position < 0) {
        const double f = objective(p, sell.q);
        if (f > best.objective) {
            best = TradePlan{sell.q, sell.net_position, Regime::NetSell, f};
        }
    }
    return best;
}

namespace {

constexpr double kSignEps = 1e-12;

// Active-set iteration for one regime under per-zone sign constraints.
// Violating zones are clamped to zero; a clamped zone whose KKT multiplier
// turns profitable is released again. Visited sets guard against cycling.
template <typename Solve, typename Grad>
std::vector<double> active_set(const std::vector<int>& signs, std::size_t n, Solve solve,
                               Grad grad_at_zero) {
    std::vector<bool> free(n, true);
    std::set<std::vector<bool>> visited;
    std::vector<double> q(n, 0.0);
    const int max_iter = static_cast<int>(4 * n + 16);
    for (int it = 0; it < max_iter; ++it) {
        visited.insert(free);
        q = solve(free);
        bool clamped_any = false;
        for (std::size_t z = 0; z < n; ++z) {
            if (free[z] && signs[z] * q[z] < -kSignEps) {
                free[z] = false;
                q[z] = 0.0;
                clamped_any = true;
            }
        }
        if (clamped_any) continue;
        // KKT check: release the first clamped zone that wants back in.
        std::ptrdiff_t release = -1;
        for (std::size_t z = 0; z < n; ++z) {
            if (!free[z] && signs[z] * grad_at_zero(free, z) > kSignEps) {
                release = static_cast<std::ptrdiff_t>(z);
                break;
            }
        }
        if (release < 0) break;
        auto next = free;
        next[release] = true;
        if (visited.count(next)) break;
        free = next;
    }
    // Snap residual constraint noise.
    for (std::size_t z = 0; z < n; ++z)
        if (signs[z] * q[z] < 0) q[z] = 0.0;
    return q;
}

}  // namespace

TradePlan optimize_clipped(const SizingProblem& p, const std::vector<int>& hint_signs) {
    check_kz(p.x, p.kz);
    if (hint_signs.size() != p.x.size()) throw DimensionMismatch("hint_signs vs x length");
    const std::size_t n = p.x.size();

    auto sum = [](const std::vector<double>& q) {
        double s = 0.0;
        for (double v : q) s += v;
        return s;
    };

    TradePlan best;
    best.q.assign(n, 0.0);
    best.regime = Regime::NetFlat;
    best.objective = 0.0;

    // Net-flat candidate.
    {
        auto solve = [&](const std::vector<bool>& free) {
            return solve_flat_masked(p.x, p.kz, free).q;
        };
        auto grad = [&](const std::vector<bool>& free, std::size_t z) {
            const FlatSolution s = solve_flat_masked(p.x, p.kz, free);
            return s.pinned ? 0.0 : p.x[z] - s.lambda;
        };
        std::vector<double> q = active_set(hint_signs, n, solve, grad);
        const double f = objective(p, q);
        if (f > best.objective) best = TradePlan{q, 0.0, Regime::NetFlat, f};
    }
    // Interior candidates per energy regime.
    for (bool net_buy : {true, false}) {
        const double ke = net_buy ? p.ke_plus : p.ke_minus;
        auto solve = [&](const std::vector<bool>& free) {
            return solve_regime_masked(p.x, p.kz, ke, free).q;
        };
        auto grad = [&](const std::vector<bool>& free, std::size_t z) {
            const RegimeSolution s = solve_regime_masked(p.x, p.kz, ke, free);
            return p.x[z] - 2.0 * ke * s.net_position;
        };
        std::vector<double> q = active_set(hint_signs, n, solve, grad);
        const double S = sum(q);
        if ((net_buy && !(S > 0)) || (!net_buy && !(S < 0))) continue;
        const double f = objective(p, q);
        if (f > best.objective) {
            best = TradePlan{q, S, net_buy ? Regime::NetBuy : Regime::NetSell, f};
        }
    }
    best.net_position = sum(best.q);
    best.objective = objective(p, best.q);
    return best;
}

std::map<PayoffKey, PayoffEstimate> estimate_payoffs(
    const std::vector<SpikeModel>& models, const std::vector<LabeledObservation>& validation) {
    std::map<PayoffKey, PayoffEstimate> out;
    for (const auto& model : models) {
        PayoffEstimate est;
        double total = 0.0;
        for (const auto& o : validation) {
            if (o.zone != model.zone) continue;
            if (predict(model, o.x) < model.tau) continue;
            total += unit_edge(o.realized_dart, model.side);
            ++est.trades;
        }
        if (est.trades > 0) est.mean_edge = total / static_cast<double>(est.trades);
        est.eligible = est.trades > 0 && est.mean_edge > 0;
        out[{model.zone, model.side}] = est;
    }
    return out;
}

std::map<BucketPayoffKey, PayoffEstimate> estimate_payoffs_by_bucket(
    const std::vector<SpikeModel>& models, const std::vector<LabeledObservation>& validation,
    const MarketCalendar& calendar) {
    std::map<BucketPayoffKey, double> totals;
    std::map<BucketPayoffKey, std::size_t> counts;
    for (const auto& model : models) {
        for (const auto& o : validation) {
            if (o.zone != model.zone) continue;
            if (predict(model, o.x) < model.tau) continue;
            const Bucket b = calendar.bucket_of(o.timestamp);
            const BucketPayoffKey key{model.zone, model.side, b.first, b.second};
            totals[key] += unit_edge(o.realized_dart, model.side);
            counts[key] += 1;
        }
    }
    std::map<BucketPayoffKey, PayoffEstimate> out;
    for (const auto& [key, n] : counts) {
        PayoffEstimate est;
        est.trades = n;
        est.mean_edge = totals[key] / static_cast<double>(n);
        est.eligible = est.mean_edge > 0;
        out[key] = est;
    }
    return out;
}

void save_plans(const std::string& path, const std::vector<PlannedHour>& plans) {
    CsvTable t;
    t.header = {"timestamp", "zone", "q_mwh", "regime", "objective"};
    for (const auto& ph : plans) {
        for (std::size_t z = 0; z < ph.zones.size(); ++z) {
            t.rows.push_back({format_timestamp(ph.timestamp), ph.zones[z],
                              format_double(ph.plan.q[z]), to_string(ph.plan.regime),
                              format_double(ph.plan.objective)});
        }
    }
    write_csv(path, t);
}

}  // namespace dartkit

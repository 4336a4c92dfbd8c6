#include "dartkit/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "dartkit/errors.hpp"

#include <nlohmann/json.hpp>

namespace dartkit {

std::string to_string(Side s) { return s == Side::INC ? "INC" : "DEC"; }

Side parse_side(const std::string& s) {
    if (s == "INC") return Side::INC;
    if (s == "DEC") return Side::DEC;
    throw ConfigError("unknown side '" + s + "'");
}

double sigmoid(double u) {
    if (u >= 0) {
        const double e = std::exp(-u);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(u);
    return e / (1.0 + e);
}

namespace {

// log(1 + exp(v)) without overflow.
double softplus(double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); }

double logit(const std::vector<double>& beta, const std::vector<double>& x) {
    double u = beta[0];
    for (std::size_t j = 0; j + 1 < beta.size(); ++j) u += beta[j + 1] * x[j];
    return u;
}

}  // namespace

LossGrad cross_entropy_loss(const std::vector<double>& beta,
                            const std::vector<LabeledObservation>& data, Side side, double l2) {
    if (data.empty()) throw EmptySeries("cross_entropy_loss requires observations");
    if (beta.size() != data.front().x.size() + 1)
        throw DimensionMismatch("beta length " + std::to_string(beta.size()) +
                                " vs feature dimension " + std::to_string(data.front().x.size()));
    LossGrad out;
    out.gradient.assign(beta.size(), 0.0);
    for (const auto& o : data) {
        const double u = logit(beta, o.x);
        const int y = label_of(o, side);
        // -y log p - (1-y) log(1-p) with p = sigmoid(u)
        out.loss += y ? softplus(-u) : softplus(u);
        const double resid = sigmoid(u) - y;
        out.gradient[0] += resid;
        for (std::size_t j = 0; j < o.x.size(); ++j) out.gradient[j + 1] += resid * o.x[j];
    }
    if (l2 > 0) {
        for (std::size_t j = 1; j < beta.size(); ++j) {  // intercept unpenalized
            out.loss += l2 * beta[j] * beta[j];
            out.gradient[j] += 2.0 * l2 * beta[j];
        }
    }
    if (!std::isfinite(out.loss)) throw NonFinite("cross-entropy loss diverged");
    return out;
}

SpikeModel fit(const std::vector<LabeledObservation>& train, Side side,
               const FitOptions& options) {
    if (train.empty()) throw EmptySeries("fit requires training observations");
    bool any0 = false, any1 = false;
    for (const auto& o : train) (label_of(o, side) ? any1 : any0) = true;
    if (!any0 || !any1)
        throw SingleClassData("training window has a single label class for side " +
                              to_string(side));

    SpikeModel model;
    model.zone = train.front().zone;
    model.side = side;
    model.beta.assign(train.front().x.size() + 1, 0.0);
    model.meta.n_train = train.size();

    LossGrad lg = cross_entropy_loss(model.beta, train, side, options.l2);
    double step = 1.0 / static_cast<double>(train.size());
    int it = 0;
    for (; it < options.max_iters; ++it) {
        double gmax = 0.0, gnorm2 = 0.0;
        for (double g : lg.gradient) {
            gmax = std::max(gmax, std::abs(g));
            gnorm2 += g * g;
        }
        if (gmax <= options.tol) {
            model.meta.converged = true;
            break;
        }
        // Backtracking line search on the Armijo condition.
        double t = step * 4.0;  // allow the step to grow again after shrinking
        std::vector<double> cand(model.beta.size());
        LossGrad next;
        for (int bt = 0; bt < 60; ++bt) {
            for (std::size_t j = 0; j < cand.size(); ++j)
                cand[j] = model.beta[j] - t * lg.gradient[j];
            next = cross_entropy_loss(cand, train, side, options.l2);
            if (next.loss <= lg.loss - 1e-4 * t * gnorm2) break;
            t *= 0.5;
        }
        if (next.loss > lg.loss) break;  // no descent step found
        model.beta = cand;
        lg = std::move(next);
        step = t;
        if (!std::isfinite(lg.loss)) throw NonFinite("fit diverged");
    }
    model.meta.iterations = it;
    model.meta.final_loss = lg.loss;
    return model;
}

double predict(const SpikeModel& model, const std::vector<double>& x) {
    if (model.beta.size() != x.size() + 1)
        throw DimensionMismatch("predict: beta length " + std::to_string(model.beta.size()) +
                                " vs x length " + std::to_string(x.size()));
    return sigmoid(logit(model.beta, x));
}

TuneResult tune_thresholds(const std::vector<LabeledObservation>& train,
                           const std::vector<LabeledObservation>& validation, Side side,
                           const std::vector<double>& gamma_grid,
                           const std::vector<double>& tau_grid, const FitOptions& options) {
    if (gamma_grid.empty() || tau_grid.empty()) throw EmptyGrid("empty gamma or tau grid");
    if (train.empty() || validation.empty())
        throw EmptySeries("tune_thresholds requires train and validation data");
    // Split hygiene: validation must start after the last training hour.
    Timestamp train_max = train.front().timestamp, val_min = validation.front().timestamp;
    for (const auto& o : train) train_max = std::max(train_max, o.timestamp);
    for (const auto& o : validation) val_min = std::min(val_min, o.timestamp);
    if (!(train_max < val_min))
        throw SplitOverlap("validation split overlaps the training split");

    bool found = false;
    bool fit_ok = false;
    TuneResult best;
    auto relabel = [](std::vector<LabeledObservation> obs, double gamma, Side s) {
        for (auto& o : obs) {
            if (s == Side::INC)
                o.y_neg = o.realized_dart <= -gamma ? 1 : 0;
            else
                o.y_pos = o.realized_dart >= gamma ? 1 : 0;
        }
        return obs;
    };

    for (double gamma : gamma_grid) {
        SpikeModel model;
        try {
            model = fit(relabel(train, gamma, side), side, options);
        } catch (const SingleClassData&) {
            continue;  // no spikes at this threshold in the train window
        }
        fit_ok = true;
        std::vector<double> probs;
        probs.reserve(validation.size());
        for (const auto& o : validation) probs.push_back(predict(model, o.x));
        for (double tau : tau_grid) {
            double pnl = 0.0;
            for (std::size_t i = 0; i < validation.size(); ++i)
                if (probs[i] >= tau) pnl += unit_edge(validation[i].realized_dart, side);
            const bool better =
                !found || pnl > best.pnl ||
                (pnl == best.pnl && (tau > best.tau || (tau == best.tau && gamma > best.gamma)));
            if (better) {
                found = true;
                best.gamma = gamma;
                best.tau = tau;
                best.pnl = pnl;
                best.model = model;
                best.model.gamma = gamma;
                best.model.tau = tau;
            }
        }
    }
    if (!fit_ok)
        throw SingleClassData("no gamma in the grid yields two label classes in training data");
    return best;
}

void save_model(const std::string& path, const SpikeModel& model) {
    nlohmann::json j;
    j["zone"] = model.zone;
    j["side"] = to_string(model.side);
    j["gamma"] = model.gamma;
    j["tau"] = model.tau;
    j["d"] = model.beta.size();
    j["beta"] = model.beta;
    j["train_meta"] = {{"iterations", model.meta.iterations},
                       {"final_loss", model.meta.final_loss},
                       {"converged", model.meta.converged},
                       {"n_train", model.meta.n_train}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

SpikeModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    nlohmann::json j;
    in >> j;
    SpikeModel m;
    m.zone = j.at("zone").get<std::string>();
    m.side = parse_side(j.at("side").get<std::string>());
    m.gamma = j.at("gamma").get<double>();
    m.tau = j.at("tau").get<double>();
    m.beta = j.at("beta").get<std::vector<double>>();
    const auto& tm = j.at("train_meta");
    m.meta.iterations = tm.at("iterations").get<int>();
    m.meta.final_loss = tm.at("final_loss").get<double>();
    m.meta.converged = tm.at("converged").get<bool>();
    m.meta.n_train = tm.at("n_train").get<std::size_t>();
    return m;
}

}  // namespace dartkit

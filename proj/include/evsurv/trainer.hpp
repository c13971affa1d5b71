#pragma once

// Full-batch (or minibatch) Adam fitting with a plateau learning-rate schedule,
// early stopping on validation loss and best-checkpoint selection.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "evsurv/dataset.hpp"
#include "evsurv/loss.hpp"
#include "evsurv/model.hpp"

namespace evsurv {

struct TrainConfig {
    std::size_t epochs = 500;
    double lr = 0.1;
    std::size_t lr_plateau_patience = 100;
    double lr_decay = 0.1;
    std::size_t early_stop_patience = 20;
    std::size_t K = 40;
    double eta = 0.1;
    double eps_rel = 1e-4;  // eps = eps_rel * y_sd
    double xi = 0.0;
    double rho = 0.0;
    double prob_floor = LossHyper{}.prob_floor;
    std::uint64_t seed = 0;
    std::size_t batch = 0;  // 0 = full batch

    void check() const {
        if (epochs == 0 || lr_plateau_patience == 0 || early_stop_patience == 0 || K == 0)
            throw std::invalid_argument("TrainConfig: counts must be >= 1");
        if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be positive");
        if (!(lr_decay > 0.0 && lr_decay < 1.0)) throw std::invalid_argument("TrainConfig: lr_decay must lie in (0, 1)");
        if (!(eps_rel > 0.0)) throw std::invalid_argument("TrainConfig: eps_rel must be positive");
        hyper(1.0).check();
    }

    LossHyper hyper(double y_sd) const { return {eta, eps_rel * y_sd, xi, rho, prob_floor}; }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = {{"epochs", c.epochs},
         {"lr", c.lr},
         {"lr_plateau_patience", c.lr_plateau_patience},
         {"lr_decay", c.lr_decay},
         {"early_stop_patience", c.early_stop_patience},
         {"K", c.K},
         {"eta", c.eta},
         {"eps_rel", c.eps_rel},
         {"xi", c.xi},
         {"rho", c.rho},
         {"prob_floor", c.prob_floor},
         {"seed", c.seed},
         {"batch", c.batch}};
}

/// Unknown keys are rejected so that typos in config files do not pass silently.
inline void from_json(const nlohmann::json& j, TrainConfig& c) {
    if (!j.is_object()) throw std::invalid_argument("train config must be an object");
    for (const auto& [key, value] : j.items()) {
        if (key == "epochs") c.epochs = value.get<std::size_t>();
        else if (key == "lr") c.lr = value.get<double>();
        else if (key == "lr_plateau_patience") c.lr_plateau_patience = value.get<std::size_t>();
        else if (key == "lr_decay") c.lr_decay = value.get<double>();
        else if (key == "early_stop_patience") c.early_stop_patience = value.get<std::size_t>();
        else if (key == "K") c.K = value.get<std::size_t>();
        else if (key == "eta") c.eta = value.get<double>();
        else if (key == "eps_rel") c.eps_rel = value.get<double>();
        else if (key == "xi") c.xi = value.get<double>();
        else if (key == "rho") c.rho = value.get<double>();
        else if (key == "prob_floor") c.prob_floor = value.get<double>();
        else if (key == "seed") c.seed = value.get<std::uint64_t>();
        else if (key == "batch") {
            if (value.is_string() && value.get<std::string>() == "full") c.batch = 0;
            else c.batch = value.get<std::size_t>();
        } else
            throw std::invalid_argument("unknown train config key '" + key + "'");
    }
}

/// Row e holds costs of the parameters entering epoch e (row 0 = initialization).
struct TrainHistory {
    std::vector<double> train_cost;
    std::vector<double> val_cost;
    std::vector<double> lr;
    std::vector<double> wall_time;  // seconds since start
    std::size_t best_epoch = 0;

    std::size_t size() const { return train_cost.size(); }

    void write_csv(std::ostream& os) const {
        os << "epoch,train_cost,val_cost,lr\n";
        for (std::size_t e = 0; e < size(); ++e)
            os << e << ',' << detail::format_double(train_cost[e]) << ',' << detail::format_double(val_cost[e]) << ','
               << detail::format_double(lr[e]) << '\n';
    }
    void write_csv(const std::string& path) const {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
        write_csv(os);
    }
};

/// Non-finite cost or gradient during training.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Split {
    std::vector<std::size_t> train, val, test;
};

inline Split split_indices(std::size_t n, std::array<double, 3> fractions, std::uint64_t seed) {
    if (n < 5) throw std::invalid_argument("split_dataset: need at least 5 records");
    for (double f : fractions)
        if (!(f >= 0.0)) throw std::invalid_argument("split_dataset: fractions must be nonnegative");
    if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9)
        throw std::invalid_argument("split_dataset: fractions must sum to 1");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(fractions[0] * n));
    const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::llround(fractions[1] * n)));
    Split s;
    s.train.assign(idx.begin(), idx.begin() + n_train);
    s.val.assign(idx.begin() + n_train, idx.begin() + n_train + n_val);
    s.test.assign(idx.begin() + n_train + n_val, idx.end());
    return s;
}

struct DataSplit {
    Dataset train, val, test;
};

inline DataSplit split_dataset(const Dataset& data, std::array<double, 3> fractions = {0.6, 0.2, 0.2},
                               std::uint64_t seed = 0) {
    const Split s = split_indices(data.size(), fractions, seed);
    return {data.subset(s.train), data.subset(s.val), data.subset(s.test)};
}

/// Unregularized mean loss.
inline double evaluate_cost(const ModelParams& m, const Standardizer& s, const Dataset& data, LossHyper hyper) {
    hyper.xi = 0.0;
    hyper.rho = 0.0;
    return total_cost(m, s, data, hyper);
}

struct TrainResult {
    ModelParams params;
    Standardizer standardizer;
    TrainHistory history;
    LossHyper hyper;
};

namespace detail {

struct Adam {
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::vector<double> m, v;
    std::size_t t = 0;

    void step(ModelParams& params, const ModelParams& grad, double lr) {
        auto pb = params.blocks();
        const auto gb = grad.blocks();
        if (m.empty()) {
            m.assign(params.count(), 0.0);
            v.assign(params.count(), 0.0);
        }
        ++t;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        std::size_t i = 0;
        for (std::size_t b = 0; b < pb.size(); ++b)
            for (std::size_t j = 0; j < pb[b]->size(); ++j, ++i) {
                const double g = (*gb[b])[j];
                m[i] = beta1 * m[i] + (1.0 - beta1) * g;
                v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
                (*pb[b])[j] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
            }
    }
};

inline bool all_finite(const ModelParams& g) {
    for (const auto* block : g.blocks())
        for (double v : *block)
            if (!std::isfinite(v)) return false;
    return true;
}

inline PreparedData rows_of(const PreparedData& all, std::span<const std::size_t> idx) {
    PreparedData out;
    out.n = idx.size();
    out.p = all.p;
    for (auto i : idx) {
        const auto r = all.row(i);
        out.z.insert(out.z.end(), r.begin(), r.end());
        out.y.push_back(all.y[i]);
        out.d.push_back(all.d[i]);
    }
    return out;
}

}  // namespace detail

/// Fits from a given starting point; the standardizer must already be fitted.
inline TrainResult train_from(ModelParams start, const Standardizer& st, const Dataset& train_data,
                              const Dataset& val_data, const TrainConfig& cfg) {
    cfg.check();
    if (train_data.empty() || val_data.empty()) throw std::invalid_argument("train: empty split");
    const LossHyper hyper = cfg.hyper(st.y_sd);
    LossHyper val_hyper = hyper;
    val_hyper.xi = val_hyper.rho = 0.0;
    const PreparedData tr = prepare(train_data, st);
    const PreparedData va = prepare(val_data, st);
    start.check();
    if (tr.p != start.p) throw std::invalid_argument("train: model and data dimensions differ");

    TrainResult out{start, st, {}, hyper};
    ModelParams m = std::move(start);
    detail::Adam adam;
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(tr.n);
    std::iota(order.begin(), order.end(), 0);
    const bool minibatch = cfg.batch > 0 && cfg.batch < tr.n;

    double lr = cfg.lr;
    double best_train = std::numeric_limits<double>::infinity();
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t since_train_gain = 0, since_val_gain = 0;
    const auto t0 = std::chrono::steady_clock::now();

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double train_cost = 0.0, val_cost = 0.0;
        ModelParams grad;
        try {
            if (!minibatch) grad = grad_total_cost(m, tr, hyper, &train_cost);
            else train_cost = total_cost(m, tr, hyper);
            val_cost = total_cost(m, va, val_hyper);
        } catch (const std::logic_error& e) {
            // parameters left the valid domain (NaN or infinite output GRFN)
            throw DivergenceError("numeric failure at epoch " + std::to_string(epoch) + ": " + e.what());
        }
        if (!std::isfinite(train_cost) || !std::isfinite(val_cost))
            throw DivergenceError("non-finite cost at epoch " + std::to_string(epoch));

        out.history.train_cost.push_back(train_cost);
        out.history.val_cost.push_back(val_cost);
        out.history.lr.push_back(lr);
        out.history.wall_time.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());

        if (val_cost < best_val) {
            best_val = val_cost;
            out.params = m;
            out.history.best_epoch = epoch;
            since_val_gain = 0;
        } else if (++since_val_gain >= cfg.early_stop_patience) {
            break;
        }
        if (train_cost < best_train) {
            best_train = train_cost;
            since_train_gain = 0;
        } else if (++since_train_gain >= cfg.lr_plateau_patience) {
            lr *= cfg.lr_decay;
            since_train_gain = 0;
        }

        if (!minibatch) {
            if (!detail::all_finite(grad)) throw DivergenceError("non-finite gradient at epoch " + std::to_string(epoch));
            adam.step(m, grad, lr);
        } else {
            std::shuffle(order.begin(), order.end(), rng);
            for (std::size_t b = 0; b < tr.n; b += cfg.batch) {
                const std::span<const std::size_t> idx(order.data() + b, std::min(cfg.batch, tr.n - b));
                const ModelParams g = grad_total_cost(m, detail::rows_of(tr, idx), hyper);
                if (!detail::all_finite(g))
                    throw DivergenceError("non-finite gradient at epoch " + std::to_string(epoch));
                adam.step(m, g, lr);
            }
        }
    }
    return out;
}

inline TrainResult train(const Dataset& train_data, const Dataset& val_data, const TrainConfig& cfg) {
    cfg.check();
    if (train_data.empty() || val_data.empty()) throw std::invalid_argument("train: empty split");
    auto [m, st] = init_params(train_data, std::min(cfg.K, train_data.size()), cfg.seed);
    return train_from(std::move(m), st, train_data, val_data, cfg);
}

}  // namespace evsurv

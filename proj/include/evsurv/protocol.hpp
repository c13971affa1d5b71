#pragma once

// Repeated random-split experiment: split, train, evaluate on the test fold,
// then mean and standard error over splits.

#include <cmath>
#include <cstdint>
#include <future>
#include <ostream>
#include <vector>

#include "evsurv/metrics.hpp"
#include "evsurv/trainer.hpp"

namespace evsurv {

struct SplitOutcome {
    std::uint64_t seed = 0;
    EvalSummary summary;
    std::size_t best_epoch = 0;
    std::size_t epochs_run = 0;
};

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& v) {
    MeanSe out;
    if (v.empty()) return out;
    for (double x : v) out.mean += x;
    out.mean /= static_cast<double>(v.size());
    if (v.size() < 2) return out;
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    return out;
}

struct ProtocolResult {
    std::vector<SplitOutcome> splits;
    MeanSe ctd, ibs, ibll;
    SurvivalMode mode = SurvivalMode::mid;

    void write_splits_csv(std::ostream& os) const {
        os << "seed,ctd,ibs,ibll,best_epoch,epochs_run\n";
        for (const auto& s : splits)
            os << s.seed << ',' << detail::format_double(s.summary.ctd) << ',' << detail::format_double(s.summary.ibs)
               << ',' << detail::format_double(s.summary.ibll) << ',' << s.best_epoch << ',' << s.epochs_run << '\n';
    }
    void write_summary_csv(std::ostream& os) const {
        os << "metric,mean,se,n_splits,mode\n";
        auto row = [&](const char* name, const MeanSe& m) {
            os << name << ',' << detail::format_double(m.mean) << ',' << detail::format_double(m.se) << ','
               << splits.size() << ',' << to_string(mode) << '\n';
        };
        row("ctd", ctd);
        row("ibs", ibs);
        row("ibll", ibll);
    }
};

/// Split `seed` trains with cfg.seed = seed, so every split is reproducible
/// on its own. With `parallel`, splits run on separate threads; results do
/// not depend on it.
inline SplitOutcome run_split(const Dataset& data, TrainConfig cfg, std::uint64_t seed, SurvivalMode mode,
                              std::array<double, 3> fractions = {0.6, 0.2, 0.2}) {
    const DataSplit ds = split_dataset(data, fractions, seed);
    cfg.seed = seed;
    const TrainResult r = train(ds.train, ds.val, cfg);
    const EvalReport rep = evaluate_model(r.params, r.standardizer, ds.test, mode, false);
    return {seed, rep.summary, r.history.best_epoch, r.history.size()};
}

inline ProtocolResult run_protocol(const Dataset& data, const TrainConfig& cfg, const std::vector<std::uint64_t>& seeds,
                                   SurvivalMode mode = SurvivalMode::mid, bool parallel = false,
                                   std::array<double, 3> fractions = {0.6, 0.2, 0.2}) {
    if (seeds.empty()) throw std::invalid_argument("run_protocol: no seeds");
    cfg.check();
    ProtocolResult out;
    out.mode = mode;
    if (parallel) {
        std::vector<std::future<SplitOutcome>> jobs;
        for (auto s : seeds)
            jobs.push_back(std::async(std::launch::async, [&, s] { return run_split(data, cfg, s, mode, fractions); }));
        for (auto& j : jobs) out.splits.push_back(j.get());
    } else {
        for (auto s : seeds) out.splits.push_back(run_split(data, cfg, s, mode, fractions));
    }
    std::vector<double> c, b, l;
    for (const auto& s : out.splits) {
        c.push_back(s.summary.ctd);
        b.push_back(s.summary.ibs);
        l.push_back(s.summary.ibll);
    }
    out.ctd = mean_se(c);
    out.ibs = mean_se(b);
    out.ibll = mean_se(l);
    return out;
}

}  // namespace evsurv

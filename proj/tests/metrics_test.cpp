#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "evsurv/metrics.hpp"
#include "evsurv/simulate.hpp"
#include "evsurv/trainer.hpp"

using namespace evsurv;

namespace {

SurvivalGrid grid_from(const std::vector<double>& times, const std::vector<std::vector<double>>& rows) {
    SurvivalGrid g;
    g.times = times;
    for (const auto& r : rows) g.surv.insert(g.surv.end(), r.begin(), r.end());
    return g;
}

// Exponential survival rows exp(-rate_i t) on the given times.
SurvivalGrid exp_grid(const std::vector<double>& times, const std::vector<double>& rates) {
    SurvivalGrid g;
    g.times = times;
    for (double r : rates)
        for (double t : times) g.surv.push_back(std::exp(-r * t));
    return g;
}

// O(n^2) product-limit without grouping tricks.
double naive_km(const std::vector<double>& times, const std::vector<int>& events, double t) {
    double s = 1.0;
    std::vector<double> seen;
    for (double u : times) {
        if (u > t || std::find(seen.begin(), seen.end(), u) != seen.end()) continue;
        seen.push_back(u);
        double d = 0, at_risk = 0;
        for (std::size_t i = 0; i < times.size(); ++i) {
            at_risk += times[i] >= u;
            d += times[i] == u && events[i] == 1;
        }
        s *= 1.0 - d / at_risk;
    }
    return s;
}

}  // namespace

TEST(KaplanMeier, HandExample) {
    const std::vector<double> t{1, 2, 3};
    const std::vector<int> d{1, 0, 1};
    const auto S = kaplan_meier(t, d);
    EXPECT_DOUBLE_EQ(S(1.0), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(S(2.0), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(S(3.0), 0.0);
    EXPECT_DOUBLE_EQ(S(0.5), 1.0);
    EXPECT_DOUBLE_EQ(S.left_limit(3.0), 2.0 / 3.0);
}

TEST(KaplanMeier, AllCensoredAndNoCensoring) {
    const std::vector<double> t{0.5, 1.5, 1.5, 4.0, 7.0};
    const auto S = kaplan_meier(t, std::vector<int>(5, 0));
    for (double u : {0.1, 1.5, 9.0}) EXPECT_EQ(S(u), 1.0);
    const auto E = kaplan_meier(t, std::vector<int>(5, 1));
    for (double u : t) {
        double ecdf = 0.0;
        for (double v : t) ecdf += (v <= u) / 5.0;
        EXPECT_NEAR(1.0 - E(u), ecdf, 1e-15);
    }
    EXPECT_THROW(kaplan_meier(std::vector<double>{}, std::vector<int>{}), std::invalid_argument);
}

TEST(KaplanMeier, MatchesNaiveWithTies) {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> ti(1, 30), ev(0, 1);
    std::vector<double> t;
    std::vector<int> d;
    for (int i = 0; i < 200; ++i) {
        t.push_back(ti(rng));
        d.push_back(ev(rng));
    }
    const auto S = kaplan_meier(t, d);
    for (double u = 0.5; u < 32; u += 0.5) EXPECT_NEAR(S(u), naive_km(t, d, u), 1e-12);
}

TEST(Concordance, ConstantOrderedReversed) {
    const std::vector<double> t{1, 2, 3, 4, 5};
    const std::vector<int> d{1, 1, 0, 1, 1};
    const std::vector<double> rates_true{5, 4, 3, 2, 1};
    EXPECT_DOUBLE_EQ(c_index_td(exp_grid(t, rates_true), t, d), 1.0);
    EXPECT_DOUBLE_EQ(c_index_td(exp_grid(t, {1, 2, 3, 4, 5}), t, d), 0.0);
    EXPECT_EQ(c_index_td(exp_grid(t, {2, 2, 2, 2, 2}), t, d), 0.5);
    EXPECT_THROW(c_index_td(exp_grid(t, rates_true), t, std::vector<int>(5, 0)), std::domain_error);
}

TEST(Concordance, MonotoneTransformInvariance) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.1, 3.0);
    std::vector<double> t, rates;
    std::vector<int> d;
    for (int i = 0; i < 80; ++i) {
        t.push_back(u(rng));
        rates.push_back(u(rng));
        d.push_back(u(rng) < 2.0);
    }
    SurvivalGrid g = exp_grid(unique_times(t), rates);
    const double c = c_index_td(g, t, d);
    for (auto& v : g.surv) v = std::pow(v, 3.0) * 0.5;
    EXPECT_EQ(c_index_td(g, t, d), c);
}

TEST(Brier, PerfectAndHalf) {
    const std::vector<double> t{1, 2, 3, 4};
    const std::vector<int> d{1, 1, 1, 1};
    const auto G = censoring_km(t, d);
    const double at = 2.5;
    // survivors past 2.5 predicted 1, failures predicted 0
    const auto perfect = grid_from(t, {{0, 0, 0, 0}, {1, 0, 0, 0}, {1, 1, 1, 1}, {1, 1, 1, 1}});
    EXPECT_EQ(brier_score(at, perfect, t, d, G), 0.0);
    const auto half = grid_from(t, std::vector<std::vector<double>>(4, std::vector<double>(4, 0.5)));
    EXPECT_DOUBLE_EQ(brier_score(at, half, t, d, G), 0.25);
    EXPECT_DOUBLE_EQ(binomial_ll(at, half, t, d, G), std::log(0.5));
    EXPECT_DOUBLE_EQ(integrated_brier(half, t, d, G, 1.0, 4.0), 0.25);
    EXPECT_NEAR(integrated_bll(half, t, d, G, 1.0, 4.0), std::log(0.5), 1e-15);
    // a true survivor predicted 1 contributes log 1 = 0; predicted 0 hits the clamp
    const auto surv1 = grid_from(t, {{0, 0, 0, 0}, {1, 0, 0, 0}, {1, 1, 1, 1}, {1, 0, 0, 0}});
    EXPECT_DOUBLE_EQ(binomial_ll(at, surv1, t, d, G), std::log(kMetricLogFloor) / 4);
}

TEST(Brier, UncensoredEqualsPlainMean) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.1, 5.0);
    std::vector<double> t, rates;
    for (int i = 0; i < 60; ++i) {
        t.push_back(u(rng));
        rates.push_back(u(rng) / 5.0);
    }
    const std::vector<int> d(t.size(), 1);
    const auto times = unique_times(t);
    const auto g = exp_grid(times, rates);
    const auto G = censoring_km(t, d);
    for (double at : {0.5, 1.7, 3.3}) {
        double plain = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double s = g.value(i, at);
            plain += (t[i] <= at ? s * s : (1 - s) * (1 - s)) / t.size();
        }
        EXPECT_NEAR(brier_score(at, g, t, d, G), plain, 1e-14);
    }
}

TEST(Brier, IpcwMatchesBruteForce) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.1, 5.0);
    std::vector<double> t, rates;
    std::vector<int> d;
    for (int i = 0; i < 70; ++i) {
        t.push_back(std::round(u(rng) * 4) / 4);
        rates.push_back(u(rng) / 5.0);
        d.push_back(u(rng) < 3.5);
    }
    const auto times = unique_times(t);
    const auto g = exp_grid(times, rates);
    const auto G = censoring_km(t, d);
    std::vector<int> flipped;
    for (int e : d) flipped.push_back(1 - e);
    const double floor = 1.0 / (t.size() + 1);
    for (double at : {0.6, 2.0, 3.9}) {
        double bs = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double s = g.value(i, at);
            if (t[i] <= at && d[i] == 1)
                bs += s * s / std::max(naive_km(t, flipped, t[i] - 1e-9), floor);
            else if (t[i] > at)
                bs += (1 - s) * (1 - s) / std::max(naive_km(t, flipped, at), floor);
        }
        EXPECT_NEAR(brier_score(at, g, t, d, G), bs / t.size(), 1e-12);
    }
}

TEST(Brier, IntegratedConvergesUnderRefinement) {
    std::mt19937_64 rng(5);
    std::exponential_distribution<double> ex(0.5);
    std::uniform_real_distribution<double> u(0.2, 1.0);
    std::vector<double> t, rates;
    for (int i = 0; i < 400; ++i) {
        rates.push_back(u(rng));
        t.push_back(ex(rng) / rates.back());
    }
    const std::vector<int> d(t.size(), 1);
    const auto g = exp_grid(unique_times(t), rates);
    const auto G = censoring_km(t, d);
    const double lo = *std::min_element(t.begin(), t.end()), hi = *std::max_element(t.begin(), t.end());
    EXPECT_LT(std::abs(integrated_brier(g, t, d, G, lo, hi, 100) - integrated_brier(g, t, d, G, lo, hi, 1000)), 1e-3);
}

TEST(Grid, OrderingVacuousMonotone) {
    const Dataset data = gen_illustrative(120, 0.4, 6);
    auto [m, s] = init_params(data, 4, 1);
    const auto times = unique_times(data.durations());
    const auto lo = survival_grid(m, s, data, times, SurvivalMode::lower);
    const auto mid = survival_grid(m, s, data, times, SurvivalMode::mid);
    const auto up = survival_grid(m, s, data, times, SurvivalMode::upper);
    for (std::size_t k = 0; k < lo.surv.size(); ++k) {
        EXPECT_LE(lo.surv[k], mid.surv[k]);
        EXPECT_LE(mid.surv[k], up.surv[k]);
    }
    for (std::size_t i = 0; i < mid.rows(); ++i)
        for (std::size_t gidx = 1; gidx < times.size(); ++gidx) EXPECT_LE(mid.at(i, gidx), mid.at(i, gidx - 1));

    ModelParams vac = m;
    std::fill(vac.log_h.begin(), vac.log_h.end(), -1e4);
    const auto vl = survival_grid(vac, s, data, times, SurvivalMode::lower);
    const auto vm = survival_grid(vac, s, data, times, SurvivalMode::mid);
    const auto vu = survival_grid(vac, s, data, times, SurvivalMode::upper);
    for (std::size_t k = 0; k < vl.surv.size(); ++k) {
        EXPECT_EQ(vl.surv[k], 0.0);
        EXPECT_EQ(vm.surv[k], 0.5);
        EXPECT_EQ(vu.surv[k], 1.0);
    }
    const auto report = evaluate_model(vac, s, data);
    EXPECT_EQ(report.summary.ctd, 0.5);
    EXPECT_THROW(survival_grid(m, s, data, {2.0, 1.0}), std::invalid_argument);
    EXPECT_EQ(parse_survival_mode("upper"), SurvivalMode::upper);
    EXPECT_THROW(parse_survival_mode("median"), std::invalid_argument);
}

TEST(Calibration, Properties) {
    const DataSplit ds = split_dataset(gen_illustrative(400, 0.3, 7), {0.6, 0.2, 0.2}, 7);
    TrainConfig cfg;
    cfg.K = 6;
    cfg.epochs = 60;
    const TrainResult r = train(ds.train, ds.val, cfg);
    std::vector<double> alphas{1e-9, 0.05, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99};
    const auto c = calibration_curve(r.params, r.standardizer, ds.test, alphas);
    EXPECT_EQ(c.coverage_bpi[0], 0.0);
    EXPECT_EQ(c.coverage_prob[0], 0.0);
    for (std::size_t a = 1; a < alphas.size(); ++a) {
        EXPECT_GE(c.coverage_bpi[a], c.coverage_bpi[a - 1]);
        EXPECT_GE(c.coverage_prob[a], c.coverage_prob[a - 1]);
        EXPECT_GE(c.coverage_bpi[a], c.coverage_prob[a]);
    }
    std::size_t uncensored = 0;
    for (const auto& rec : ds.test.records) uncensored += rec.event;
    EXPECT_EQ(c.n_eval, uncensored);
    // per record: the BPI is at least as wide as the probabilistic interval
    for (const auto& rec : ds.test.records) {
        const Grfn g = forward(r.params, r.standardizer, rec.x).grfn;
        for (double a : alphas) {
            const double rb = belief_prediction_interval(g, a).width() / 2;
            const double rp = norm_quantile(0.5 * (1 + a)) * std::sqrt(g.sigma2 + 1 / g.h);
            EXPECT_GE(rb, rp * (1 - 1e-9));
        }
    }
    ModelParams vac = r.params;
    std::fill(vac.log_h.begin(), vac.log_h.end(), -1e4);
    EXPECT_THROW(calibration_curve(vac, r.standardizer, ds.test, {0.5}), std::domain_error);
}

TEST(Report, CsvBlocks) {
    const Dataset data = gen_illustrative(60, 0.3, 8);
    auto [m, s] = init_params(data, 3, 1);
    const auto rep = evaluate_model(m, s, data, SurvivalMode::lower);
    EXPECT_GE(rep.summary.ctd, 0.0);
    EXPECT_LE(rep.summary.ctd, 1.0);
    EXPECT_GE(rep.summary.ibs, 0.0);
    std::ostringstream a, b, c;
    rep.write_summary_csv(a);
    rep.write_calibration_csv(b);
    rep.write_grid_csv(c);
    EXPECT_NE(a.str().find(",lower,"), std::string::npos);
    EXPECT_EQ(b.str().substr(0, 5), "alpha");
    EXPECT_EQ(c.str().substr(0, 9), "record_id");
    const auto hm = survival_heatmap(m, s, data, 0, 21);
    EXPECT_EQ(hm.lower.size(), 21u * 21u);
    for (std::size_t k = 0; k < hm.lower.size(); ++k) EXPECT_LE(hm.lower[k], hm.upper[k]);
}

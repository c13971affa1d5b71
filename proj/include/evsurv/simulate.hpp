#pragma once

// Synthetic survival datasets: the one-dimensional illustrative problem and
// the exponential-Cox style LPH / NLPH / NLNPH generators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "evsurv/dataset.hpp"

namespace evsurv {

namespace detail {

inline double median(std::vector<double> v) {
    const std::size_t n = v.size();
    std::sort(v.begin(), v.end());
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// End-of-study censoring at the sample median of the event times.
inline void censor_at_median(Dataset& data) {
    std::vector<double> times;
    for (const auto& r : data.records) times.push_back(*r.t_true);
    const double end = median(times);
    for (auto& r : data.records) {
        r.event = *r.t_true <= end ? 1 : 0;
        r.t_star = std::min(*r.t_true, end);
    }
}

}  // namespace detail

/// Regression function of the illustrative problem, on the log-time scale.
inline double illustrative_log_mean(double x) {
    const double c = std::cos(3.0 * x);
    return 1.5 * x + 2.0 * c * c * c;
}

/// Standard deviation of log T given x for the illustrative problem.
inline double illustrative_log_sd(double x) { return (x * x + 5.0) / (3.0 * std::sqrt(5.0)); }

/// X ~ U[-2, 2], log T = 1.5X + 2cos(3X)^3 + (X^2+5)/(3 sqrt 5) V. Each record
/// is selected for censoring with probability `censor_prob`; selected records
/// get a censoring time tau ~ U(0, max T) and are observed at min(T, tau) with
/// event = 0.
inline Dataset gen_illustrative(std::size_t n, double censor_prob, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("gen_illustrative: n must be positive");
    if (!(censor_prob >= 0.0 && censor_prob <= 1.0))
        throw std::invalid_argument("gen_illustrative: censor_prob must lie in [0, 1]");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> xdist(-2.0, 2.0);
    std::normal_distribution<double> noise(0.0, 1.0);

    Dataset data{{"f0"}, {}};
    double t_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = xdist(rng);
        const double t = std::exp(illustrative_log_mean(x) + illustrative_log_sd(x) * noise(rng));
        t_max = std::max(t_max, t);
        data.records.push_back({{x}, t, 1, t});
    }
    std::bernoulli_distribution select(censor_prob);
    std::uniform_real_distribution<double> tau_dist(0.0, t_max);
    for (auto& r : data.records) {
        if (!select(rng)) continue;
        double tau = tau_dist(rng);
        while (tau <= 0.0) tau = tau_dist(rng);
        r.event = 0;
        r.t_star = std::min(*r.t_true, tau);
    }
    return data;
}

enum class CoxKind { LPH, NLPH };

inline constexpr std::size_t kCoxCovariates = 10;

/// True log-risk g(x) of the exponential Cox generators.
inline double cox_log_risk(CoxKind kind, std::span<const double> x) {
    if (kind == CoxKind::LPH) return x[0] + 2.0 * x[1];
    constexpr double lambda_max = 5.0;
    constexpr double r = 0.5;
    return std::log(lambda_max) * std::exp(-(x[0] * x[0] + x[1] * x[1]) / (2.0 * r * r));
}

/// Ten U[-1, 1] covariates, T ~ Exp(lambda0 exp(g(x))), censored at the
/// sample median of T.
inline Dataset gen_cox_exponential(std::size_t n, CoxKind kind, double lambda0, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("gen_cox_exponential: n must be positive");
    if (!(lambda0 > 0.0)) throw std::invalid_argument("gen_cox_exponential: lambda0 must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> xdist(-1.0, 1.0);
    std::uniform_real_distribution<double> udist(0.0, 1.0);

    Dataset data{default_feature_names(kCoxCovariates), {}};
    data.records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        SurvivalRecord r;
        r.x.resize(kCoxCovariates);
        for (auto& v : r.x) v = xdist(rng);
        double u = udist(rng);
        while (u <= 0.0) u = udist(rng);
        const double t = -std::log(u) / (lambda0 * std::exp(cox_log_risk(kind, r.x)));
        r.t_true = t;
        r.t_star = t;
        data.records.push_back(std::move(r));
    }
    detail::censor_at_median(data);
    return data;
}

/// Time-varying log-risk g(t, x) = g1(x) + g2(x) t.
struct TimeVaryingLogRisk {
    std::function<double(std::span<const double>)> g1;
    std::function<double(std::span<const double>)> g2;

    double operator()(double t, std::span<const double> x) const { return g1(x) + g2(x) * t; }

    /// Stand-in default: a Gaussian bump in (x0, x1) plus a hazard that
    /// grows over time at a rate set by |x2|.
    static TimeVaryingLogRisk standard() {
        return {[](std::span<const double> x) {
                    return std::log(5.0) * std::exp(-(x[0] * x[0] + x[1] * x[1]) / 0.5);
                },
                [](std::span<const double> x) { return 0.02 * std::abs(x[2]); }};
    }
    static TimeVaryingLogRisk constant(double c) {
        return {[c](std::span<const double>) { return c; }, [](std::span<const double>) { return 0.0; }};
    }
};

/// Cumulative hazard lambda0 * int_0^t exp(g(s, x)) ds by adaptive Gauss-Kronrod.
inline double cumulative_hazard(const TimeVaryingLogRisk& g, std::span<const double> x, double lambda0, double t) {
    if (t <= 0.0) return 0.0;
    auto rate = [&](double s) {
        const double v = g(s, x);
        if (!std::isfinite(v)) throw std::domain_error("log-risk is not finite");
        return std::exp(v);
    };
    return lambda0 * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(rate, 0.0, t, 15, 1e-13);
}

/// Solves cumulative_hazard(t) = target with safeguarded Newton steps.
inline double invert_cumulative_hazard(const TimeVaryingLogRisk& g, std::span<const double> x, double lambda0,
                                       double target, double horizon) {
    auto hazard = [&](double t) {
        const double v = g(t, x);
        if (!std::isfinite(v)) throw std::domain_error("log-risk is not finite");
        return lambda0 * std::exp(v);
    };
    double lo = 0.0;
    double hi = target / hazard(0.0);
    while (cumulative_hazard(g, x, lambda0, hi) < target) {
        lo = hi;
        hi *= 2.0;
        if (hi > horizon) return horizon;
    }
    double t = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double f = cumulative_hazard(g, x, lambda0, t) - target;
        if (std::abs(f) <= 1e-10 * std::max(1.0, target)) break;
        (f < 0.0 ? lo : hi) = t;
        double next = t - f / hazard(t);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (hi - lo <= 1e-8 * std::max(1.0, t)) break;
        t = next;
    }
    return t;
}

/// Nonproportional hazards generator: T solves Lambda(T | x) = -log U for
/// ten U[-1, 1] covariates, then end-of-study censoring at the sample median.
inline Dataset gen_nlnph(std::size_t n, double lambda0, const TimeVaryingLogRisk& g, std::uint64_t seed,
                         double horizon = 1e7) {
    if (n == 0) throw std::invalid_argument("gen_nlnph: n must be positive");
    if (!(lambda0 > 0.0)) throw std::invalid_argument("gen_nlnph: lambda0 must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> xdist(-1.0, 1.0);
    std::uniform_real_distribution<double> udist(0.0, 1.0);

    Dataset data{default_feature_names(kCoxCovariates), {}};
    data.records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        SurvivalRecord r;
        r.x.resize(kCoxCovariates);
        for (auto& v : r.x) v = xdist(rng);
        double u = udist(rng);
        while (u <= 0.0) u = udist(rng);
        const double t = invert_cumulative_hazard(g, r.x, lambda0, -std::log(u), horizon);
        r.t_true = t;
        r.t_star = t;
        data.records.push_back(std::move(r));
    }
    detail::censor_at_median(data);
    return data;
}

}  // namespace evsurv

#pragma once

// Survival metrics: Kaplan-Meier, Antolini's time-dependent concordance,
// IPCW Brier score and binomial log-likelihood (plus integrated forms),
// survival grids from a fitted model and BPI calibration curves.

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "evsurv/dataset.hpp"
#include "evsurv/grfn.hpp"
#include "evsurv/model.hpp"
#include "evsurv/normal.hpp"

namespace evsurv {

/// Right-continuous step function equal to 1 before the first knot.
struct StepFunction {
    std::vector<double> knots;
    std::vector<double> values;

    double operator()(double t) const {
        const auto it = std::upper_bound(knots.begin(), knots.end(), t);
        return it == knots.begin() ? 1.0 : values[static_cast<std::size_t>(it - knots.begin()) - 1];
    }
    /// Limit from the left at t.
    double left_limit(double t) const {
        const auto it = std::lower_bound(knots.begin(), knots.end(), t);
        return it == knots.begin() ? 1.0 : values[static_cast<std::size_t>(it - knots.begin()) - 1];
    }
};

inline StepFunction kaplan_meier(std::span<const double> times, std::span<const int> events) {
    if (times.empty()) throw std::invalid_argument("kaplan_meier: empty input");
    if (times.size() != events.size()) throw std::invalid_argument("kaplan_meier: size mismatch");
    std::vector<std::size_t> order(times.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (!(times[i] > 0.0)) throw std::invalid_argument("kaplan_meier: times must be positive");
        order[i] = i;
    }
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return times[a] < times[b]; });
    StepFunction out;
    double s = 1.0;
    std::size_t at_risk = times.size();
    for (std::size_t i = 0; i < order.size();) {
        const double t = times[order[i]];
        std::size_t deaths = 0, leaving = 0;
        for (; i < order.size() && times[order[i]] == t; ++i, ++leaving) deaths += events[order[i]] == 1;
        s *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
        at_risk -= leaving;
        out.knots.push_back(t);
        out.values.push_back(s);
    }
    return out;
}

/// Kaplan-Meier estimate of the censoring survival function.
inline StepFunction censoring_km(std::span<const double> times, std::span<const int> events) {
    std::vector<int> flipped(events.size());
    for (std::size_t i = 0; i < events.size(); ++i) flipped[i] = 1 - events[i];
    return kaplan_meier(times, flipped);
}

enum class SurvivalMode { lower, mid, upper };

inline std::string to_string(SurvivalMode m) {
    switch (m) {
        case SurvivalMode::lower: return "lower";
        case SurvivalMode::upper: return "upper";
        default: return "mid";
    }
}

inline SurvivalMode parse_survival_mode(const std::string& s) {
    if (s == "lower") return SurvivalMode::lower;
    if (s == "mid") return SurvivalMode::mid;
    if (s == "upper") return SurvivalMode::upper;
    throw std::invalid_argument("unknown survival mode '" + s + "' (expected lower, mid or upper)");
}

/// n x G survival predictions on a common ascending time grid (row-major).
struct SurvivalGrid {
    std::vector<double> times;
    std::vector<double> surv;
    SurvivalMode mode = SurvivalMode::mid;

    std::size_t rows() const { return times.empty() ? 0 : surv.size() / times.size(); }
    double at(std::size_t i, std::size_t g) const { return surv[i * times.size() + g]; }
    /// Stepwise value of row i at time t (1 before the first grid time).
    double value(std::size_t i, double t) const {
        const auto it = std::upper_bound(times.begin(), times.end(), t);
        return it == times.begin() ? 1.0 : at(i, static_cast<std::size_t>(it - times.begin()) - 1);
    }
};

/// Sorted distinct values.
inline std::vector<double> unique_times(std::span<const double> durations) {
    std::vector<double> t(durations.begin(), durations.end());
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
}

inline SurvivalGrid survival_grid(const ModelParams& m, const Standardizer& s, const Dataset& data,
                                  std::vector<double> times, SurvivalMode mode = SurvivalMode::mid) {
    for (std::size_t g = 0; g < times.size(); ++g) {
        if (!(times[g] > 0.0)) throw std::invalid_argument("survival_grid: times must be positive");
        if (g && !(times[g] > times[g - 1])) throw std::invalid_argument("survival_grid: times must be ascending");
    }
    SurvivalGrid out{std::move(times), {}, mode};
    out.surv.reserve(data.size() * out.times.size());
    for (const auto& r : data.records) {
        const Grfn g = forward(m, s, r.x).grfn;
        for (double t : out.times) {
            const auto [lo, up] = survival_bounds(g, t);
            out.surv.push_back(mode == SurvivalMode::lower ? lo : mode == SurvivalMode::upper ? up : 0.5 * (lo + up));
        }
    }
    return out;
}

/// Antolini's Ctd. Pair (i, j) is comparable when d_i = 1 and T_i < T_j, or
/// T_i = T_j with j censored; tied survival values score 1/2.
inline double c_index_td(const SurvivalGrid& grid, std::span<const double> durations, std::span<const int> events) {
    const std::size_t n = durations.size();
    if (grid.rows() != n || events.size() != n) throw std::invalid_argument("c_index_td: size mismatch");
    double score = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (events[i] != 1) continue;
        const double ti = durations[i];
        const double si = grid.value(i, ti);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            if (!(durations[j] > ti || (durations[j] == ti && events[j] == 0))) continue;
            const double sj = grid.value(j, ti);
            pairs += 1.0;
            score += si < sj ? 1.0 : (si == sj ? 0.5 : 0.0);
        }
    }
    if (pairs == 0.0) throw std::domain_error("c_index_td: no comparable pairs");
    return score / pairs;
}

namespace detail {

inline double clamped_g(double v, std::size_t n) {
    return std::max(v, 1.0 / static_cast<double>(n + 1));
}

// Shared IPCW sum: event-before-t term and survivor term.
template <class EventTerm, class SurvivorTerm>
double ipcw_mean(double t, const SurvivalGrid& grid, std::span<const double> durations, std::span<const int> events,
                 const StepFunction& G, EventTerm ev, SurvivorTerm sv) {
    const std::size_t n = durations.size();
    if (grid.rows() != n || events.size() != n) throw std::invalid_argument("ipcw metric: size mismatch");
    const double g_t = clamped_g(G(t), n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = grid.value(i, t);
        if (durations[i] <= t && events[i] == 1)
            sum += ev(s) / clamped_g(G.left_limit(durations[i]), n);
        else if (durations[i] > t)
            sum += sv(s) / g_t;
    }
    return sum / static_cast<double>(n);
}

inline std::vector<double> linspace(double a, double b, std::size_t k) {
    std::vector<double> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = k == 1 ? a : a + (b - a) * static_cast<double>(i) / (k - 1);
    return out;
}

}  // namespace detail

inline constexpr double kMetricLogFloor = 1e-7;

inline double brier_score(double t, const SurvivalGrid& grid, std::span<const double> durations,
                          std::span<const int> events, const StepFunction& G) {
    return detail::ipcw_mean(
        t, grid, durations, events, G, [](double s) { return s * s; }, [](double s) { return (1.0 - s) * (1.0 - s); });
}

inline double binomial_ll(double t, const SurvivalGrid& grid, std::span<const double> durations,
                          std::span<const int> events, const StepFunction& G, double log_floor = kMetricLogFloor) {
    auto lg = [log_floor](double v) { return std::log(std::max(v, log_floor)); };
    return detail::ipcw_mean(
        t, grid, durations, events, G, [&](double s) { return lg(1.0 - s); }, [&](double s) { return lg(s); });
}

/// Mean of BS(t) over `points` equally spaced times in [t1, t2].
inline double integrated_brier(const SurvivalGrid& grid, std::span<const double> durations,
                               std::span<const int> events, const StepFunction& G, double t1, double t2,
                               std::size_t points = 100) {
    if (!(t1 < t2)) throw std::invalid_argument("integrated_brier: need t1 < t2");
    double sum = 0.0;
    for (double t : detail::linspace(t1, t2, points)) sum += brier_score(t, grid, durations, events, G);
    return sum / static_cast<double>(points);
}

inline double integrated_bll(const SurvivalGrid& grid, std::span<const double> durations, std::span<const int> events,
                             const StepFunction& G, double t1, double t2, std::size_t points = 100,
                             double log_floor = kMetricLogFloor) {
    if (!(t1 < t2)) throw std::invalid_argument("integrated_bll: need t1 < t2");
    double sum = 0.0;
    for (double t : detail::linspace(t1, t2, points)) sum += binomial_ll(t, grid, durations, events, G, log_floor);
    return sum / static_cast<double>(points);
}

struct CalibrationCurve {
    std::vector<double> alphas;
    std::vector<double> coverage_bpi;
    std::vector<double> coverage_prob;
    std::size_t n_eval = 0;
    std::size_t n_excluded = 0;  // vacuous predictions
};

inline std::vector<double> default_alphas() {
    std::vector<double> a;
    for (int i = 1; i <= 9; ++i) a.push_back(i / 10.0);
    return a;
}

/// Coverage of log durations by the belief prediction interval and by the
/// central interval of N(mu, sigma2 + 1/h) at each level. Uses uncensored
/// records, or every record's true duration when `use_true_durations`.
inline CalibrationCurve calibration_curve(const ModelParams& m, const Standardizer& s, const Dataset& data,
                                          std::vector<double> alphas, bool use_true_durations = false) {
    for (double a : alphas)
        if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("calibration_curve: alphas must lie in (0, 1)");
    std::sort(alphas.begin(), alphas.end());
    CalibrationCurve out;
    out.alphas = alphas;
    out.coverage_bpi.assign(alphas.size(), 0.0);
    out.coverage_prob.assign(alphas.size(), 0.0);
    for (const auto& r : data.records) {
        double t;
        if (use_true_durations && r.t_true) t = *r.t_true;
        else if (r.event == 1) t = r.t_star;
        else continue;
        const Grfn g = forward(m, s, r.x).grfn;
        if (g.h == 0.0) {
            ++out.n_excluded;
            continue;
        }
        ++out.n_eval;
        const double y = std::log(t);
        const double total_sd = std::sqrt(g.sigma2 + 1.0 / g.h);
        for (std::size_t a = 0; a < alphas.size(); ++a) {
            const Interval bpi = belief_prediction_interval(g, alphas[a]);
            out.coverage_bpi[a] += bpi.contains(y);
            const double half = norm_quantile(0.5 * (1.0 + alphas[a])) * total_sd;
            out.coverage_prob[a] += std::abs(y - g.mu) <= half;
        }
    }
    if (out.n_eval == 0) throw std::domain_error("calibration_curve: no usable uncensored records");
    for (std::size_t a = 0; a < alphas.size(); ++a) {
        out.coverage_bpi[a] /= static_cast<double>(out.n_eval);
        out.coverage_prob[a] /= static_cast<double>(out.n_eval);
    }
    return out;
}

struct EvalSummary {
    double ctd = 0.5;
    double ibs = 0.0;
    double ibll = 0.0;  // reported as -IBLL, lower is better
    SurvivalMode mode = SurvivalMode::mid;
    std::size_t n = 0;
    double t_min = 0.0, t_max = 0.0;
};

struct EvalReport {
    EvalSummary summary;
    std::optional<CalibrationCurve> calibration;
    SurvivalGrid lower, mid, upper;

    void write_summary_csv(std::ostream& os) const {
        os << "ctd,ibs,ibll,mode,n,t_min,t_max\n"
           << detail::format_double(summary.ctd) << ',' << detail::format_double(summary.ibs) << ','
           << detail::format_double(summary.ibll) << ',' << to_string(summary.mode) << ',' << summary.n << ','
           << detail::format_double(summary.t_min) << ',' << detail::format_double(summary.t_max) << '\n';
    }
    void write_calibration_csv(std::ostream& os) const {
        os << "alpha,coverage_bpi,coverage_prob,n_eval,n_excluded\n";
        if (!calibration) return;
        const auto& c = *calibration;
        for (std::size_t a = 0; a < c.alphas.size(); ++a)
            os << detail::format_double(c.alphas[a]) << ',' << detail::format_double(c.coverage_bpi[a]) << ','
               << detail::format_double(c.coverage_prob[a]) << ',' << c.n_eval << ',' << c.n_excluded << '\n';
    }
    void write_grid_csv(std::ostream& os) const {
        os << "record_id,t,lower,mid,upper\n";
        for (std::size_t i = 0; i < mid.rows(); ++i)
            for (std::size_t g = 0; g < mid.times.size(); ++g)
                os << i << ',' << detail::format_double(mid.times[g]) << ',' << detail::format_double(lower.at(i, g))
                   << ',' << detail::format_double(mid.at(i, g)) << ',' << detail::format_double(upper.at(i, g)) << '\n';
    }
};

/// Ctd on the unique durations, IBS and -IBLL on 100 points spanning
/// [min, max) of the durations, Kaplan-Meier censoring weights from `data`.
inline EvalSummary evaluate_grid(const SurvivalGrid& grid, const Dataset& data) {
    const auto durations = data.durations();
    const auto events = data.events();
    const StepFunction G = censoring_km(durations, events);
    EvalSummary out;
    out.mode = grid.mode;
    out.n = data.size();
    out.t_min = *std::min_element(durations.begin(), durations.end());
    out.t_max = *std::max_element(durations.begin(), durations.end());
    out.ctd = c_index_td(grid, durations, events);
    if (out.t_max > out.t_min) {
        out.ibs = integrated_brier(grid, durations, events, G, out.t_min, out.t_max);
        out.ibll = -integrated_bll(grid, durations, events, G, out.t_min, out.t_max);
    }
    return out;
}

inline EvalReport evaluate_model(const ModelParams& m, const Standardizer& s, const Dataset& data,
                                 SurvivalMode mode = SurvivalMode::mid, bool with_calibration = true,
                                 bool use_true_durations = false) {
    if (data.empty()) throw std::invalid_argument("evaluate_model: empty dataset");
    if (data.dim() != m.p) throw std::invalid_argument("evaluate_model: model and data dimensions differ");
    const auto times = unique_times(data.durations());
    EvalReport rep;
    rep.lower = survival_grid(m, s, data, times, SurvivalMode::lower);
    rep.upper = survival_grid(m, s, data, times, SurvivalMode::upper);
    rep.mid = rep.lower;
    rep.mid.mode = SurvivalMode::mid;
    for (std::size_t k = 0; k < rep.mid.surv.size(); ++k) rep.mid.surv[k] = 0.5 * (rep.lower.surv[k] + rep.upper.surv[k]);
    const SurvivalGrid& chosen = mode == SurvivalMode::lower ? rep.lower : mode == SurvivalMode::upper ? rep.upper : rep.mid;
    rep.summary = evaluate_grid(chosen, data);
    if (with_calibration) {
        try {
            rep.calibration = calibration_curve(m, s, data, default_alphas(), use_true_durations);
        } catch (const std::domain_error&) {
            rep.calibration.reset();  // no uncensored records
        }
    }
    return rep;
}

/// Lower and upper survival over a (feature value, time) grid, sweeping one
/// covariate with the others at their medians over `data`.
struct Heatmap {
    std::string feature;
    std::vector<double> values;
    std::vector<double> times;
    std::vector<double> lower;  // values.size() x times.size()
    std::vector<double> upper;

    void write_csv(std::ostream& os) const {
        os << feature << ",t,lower,upper\n";
        for (std::size_t a = 0; a < values.size(); ++a)
            for (std::size_t b = 0; b < times.size(); ++b)
                os << detail::format_double(values[a]) << ',' << detail::format_double(times[b]) << ','
                   << detail::format_double(lower[a * times.size() + b]) << ','
                   << detail::format_double(upper[a * times.size() + b]) << '\n';
    }
};

inline Heatmap survival_heatmap(const ModelParams& m, const Standardizer& s, const Dataset& data, std::size_t feature,
                                std::size_t grid = 21) {
    if (feature >= data.dim()) throw std::out_of_range("survival_heatmap: feature index out of range");
    if (grid < 2) throw std::invalid_argument("survival_heatmap: grid must be at least 2");
    std::vector<double> base(data.dim());
    for (std::size_t j = 0; j < data.dim(); ++j) {
        std::vector<double> col;
        for (const auto& r : data.records) col.push_back(r.x[j]);
        std::sort(col.begin(), col.end());
        const std::size_t n = col.size();
        base[j] = n % 2 ? col[n / 2] : 0.5 * (col[n / 2 - 1] + col[n / 2]);
    }
    double xmin = data.records[0].x[feature], xmax = xmin;
    for (const auto& r : data.records) {
        xmin = std::min(xmin, r.x[feature]);
        xmax = std::max(xmax, r.x[feature]);
    }
    const auto d = data.durations();
    Heatmap out;
    out.feature = data.feature_names[feature];
    out.values = detail::linspace(xmin, xmax, grid);
    out.times = detail::linspace(*std::min_element(d.begin(), d.end()), *std::max_element(d.begin(), d.end()), grid);
    for (double v : out.values) {
        auto x = base;
        x[feature] = v;
        const Grfn g = forward(m, s, x).grfn;
        for (double t : out.times) {
            const auto [lo, up] = survival_bounds(g, t);
            out.lower.push_back(lo);
            out.upper.push_back(up);
        }
    }
    return out;
}

}  // namespace evsurv

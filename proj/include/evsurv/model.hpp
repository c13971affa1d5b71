#pragma once

// ENNreg: a prototype-based evidential regression network for Y = log T.
//
//   s_k(x)  = exp(-gamma_k^2 ||x - p_k||^2)
//   Y_k(x)  ~ N~(beta_k' x + beta_k0, sigma2_k, s_k(x) h_k)
//   Y(x)    = Y_1(x) [+] ... [+] Y_K(x)      (unnormalized combination)
//
// Inputs are z-scored with a Standardizer fitted on the training split; the
// response stays on the log-time scale.

#include <algorithm>
#include <array>
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
#include "evsurv/grfn.hpp"

namespace evsurv {

/// Trainable parameters. Matrices are row-major K x p.
struct ModelParams {
    std::size_t K = 0;
    std::size_t p = 0;
    std::vector<double> prototypes;
    std::vector<double> gamma;
    std::vector<double> beta;
    std::vector<double> beta0;
    std::vector<double> log_sigma2;
    std::vector<double> log_h;

    ModelParams() = default;
    ModelParams(std::size_t K_, std::size_t p_)
        : K(K_), p(p_), prototypes(K_ * p_), gamma(K_), beta(K_ * p_), beta0(K_), log_sigma2(K_), log_h(K_) {}

    std::span<const double> prototype(std::size_t k) const { return {prototypes.data() + k * p, p}; }
    std::span<const double> coefficients(std::size_t k) const { return {beta.data() + k * p, p}; }
    double sigma2(std::size_t k) const { return std::exp(log_sigma2[k]); }
    double h(std::size_t k) const { return std::exp(log_h[k]); }

    std::array<std::vector<double>*, 6> blocks() {
        return {&prototypes, &gamma, &beta, &beta0, &log_sigma2, &log_h};
    }
    std::array<const std::vector<double>*, 6> blocks() const {
        return {&prototypes, &gamma, &beta, &beta0, &log_sigma2, &log_h};
    }
    std::size_t count() const { return K * (2 * p + 4); }

    /// Same shape, all zeros (used as a gradient accumulator).
    ModelParams zeros_like() const { return ModelParams(K, p); }

    void check() const {
        if (K == 0 || p == 0) throw std::invalid_argument("ModelParams: K and p must be positive");
        if (prototypes.size() != K * p || beta.size() != K * p || gamma.size() != K || beta0.size() != K ||
            log_sigma2.size() != K || log_h.size() != K)
            throw std::invalid_argument("ModelParams: array sizes do not match (K, p)");
    }

    bool operator==(const ModelParams&) const = default;
};

struct Standardizer {
    std::vector<double> x_mean;
    std::vector<double> x_scale;
    double y_sd = 1.0;

    static Standardizer fit(const Dataset& data) {
        if (data.empty()) throw std::invalid_argument("Standardizer::fit: empty dataset");
        const std::size_t p = data.dim();
        const double n = static_cast<double>(data.size());
        Standardizer s;
        s.x_mean.assign(p, 0.0);
        s.x_scale.assign(p, 0.0);
        for (const auto& r : data.records)
            for (std::size_t j = 0; j < p; ++j) s.x_mean[j] += r.x[j] / n;
        for (const auto& r : data.records)
            for (std::size_t j = 0; j < p; ++j) s.x_scale[j] += (r.x[j] - s.x_mean[j]) * (r.x[j] - s.x_mean[j]);
        for (auto& v : s.x_scale) {
            v = data.size() > 1 ? std::sqrt(v / (n - 1.0)) : 0.0;
            if (!(v > 0.0)) v = 1.0;  // constant column
        }
        double ym = 0.0;
        for (const auto& r : data.records) ym += std::log(r.t_star) / n;
        double yv = 0.0;
        for (const auto& r : data.records) yv += (std::log(r.t_star) - ym) * (std::log(r.t_star) - ym);
        s.y_sd = data.size() > 1 ? std::sqrt(yv / (n - 1.0)) : 0.0;
        if (!(s.y_sd > 0.0)) s.y_sd = 1.0;
        return s;
    }

    std::vector<double> transform(std::span<const double> x) const {
        if (x.size() != x_mean.size()) throw std::invalid_argument("Standardizer: dimension mismatch");
        std::vector<double> z(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) z[j] = (x[j] - x_mean[j]) / x_scale[j];
        return z;
    }

    bool operator==(const Standardizer&) const = default;
};

struct Prediction {
    Grfn grfn;                        // on Y = log T
    double most_plausible_time = 1.0;  // exp(grfn.mu)
    bool vacuous = false;
};

inline constexpr double kPrecisionFloor = 1e-300;

/// s_k(x) for standardized x.
inline std::vector<double> rbf_similarities(const ModelParams& m, std::span<const double> x) {
    if (x.size() != m.p) throw std::invalid_argument("rbf_similarities: dimension mismatch");
    std::vector<double> s(m.K);
    for (std::size_t k = 0; k < m.K; ++k) {
        const auto proto = m.prototype(k);
        double d2 = 0.0;
        for (std::size_t j = 0; j < m.p; ++j) d2 += (x[j] - proto[j]) * (x[j] - proto[j]);
        s[k] = std::exp(-m.gamma[k] * m.gamma[k] * d2);
    }
    return s;
}

/// Evidence of prototype k about Y at standardized x.
inline Grfn evidence_grfn(const ModelParams& m, std::span<const double> x, std::size_t k) {
    if (k >= m.K) throw std::out_of_range("evidence_grfn: prototype index out of range");
    if (x.size() != m.p) throw std::invalid_argument("evidence_grfn: dimension mismatch");
    const auto proto = m.prototype(k);
    const auto coef = m.coefficients(k);
    double d2 = 0.0, mu = m.beta0[k];
    for (std::size_t j = 0; j < m.p; ++j) {
        d2 += (x[j] - proto[j]) * (x[j] - proto[j]);
        mu += coef[j] * x[j];
    }
    return {mu, m.sigma2(k), std::exp(-m.gamma[k] * m.gamma[k] * d2) * m.h(k)};
}

namespace detail {

// Intermediate quantities of one forward pass, kept for backpropagation.
struct ForwardTrace {
    std::vector<double> dist2;   // ||x - p_k||^2
    std::vector<double> sim;     // s_k
    std::vector<double> weight;  // a_k = s_k h_k
    std::vector<double> mu_k;
    std::vector<double> sigma2_k;
    double total = 0.0;  // h(x) before flooring
};

inline Prediction forward_standardized(const ModelParams& m, std::span<const double> z, ForwardTrace* trace = nullptr) {
    ForwardTrace local;
    ForwardTrace& t = trace ? *trace : local;
    t.dist2.assign(m.K, 0.0);
    t.sim.assign(m.K, 0.0);
    t.weight.assign(m.K, 0.0);
    t.mu_k.assign(m.K, 0.0);
    t.sigma2_k.assign(m.K, 0.0);
    double H = 0.0, hmu = 0.0, h2s2 = 0.0, mu_sum = 0.0;
    for (std::size_t k = 0; k < m.K; ++k) {
        const double* proto = m.prototypes.data() + k * m.p;
        const double* coef = m.beta.data() + k * m.p;
        double d2 = 0.0, mu = m.beta0[k];
        for (std::size_t j = 0; j < m.p; ++j) {
            const double diff = z[j] - proto[j];
            d2 += diff * diff;
            mu += coef[j] * z[j];
        }
        const double s = std::exp(-m.gamma[k] * m.gamma[k] * d2);
        const double a = s * std::exp(m.log_h[k]);
        const double s2 = std::exp(m.log_sigma2[k]);
        t.dist2[k] = d2;
        t.sim[k] = s;
        t.weight[k] = a;
        t.mu_k[k] = mu;
        t.sigma2_k[k] = s2;
        H += a;
        hmu += a * mu;
        h2s2 += a * a * s2;
        mu_sum += mu;
    }
    t.total = H;
    Prediction out;
    if (!(H >= kPrecisionFloor)) {
        out.grfn = {mu_sum / static_cast<double>(m.K), 0.0, 0.0};
        out.vacuous = true;
    } else {
        out.grfn = {hmu / H, h2s2 / (H * H), H};
    }
    out.most_plausible_time = std::exp(out.grfn.mu);
    return out;
}

}  // namespace detail

/// Fused output GRFN for a raw (unstandardized) covariate vector.
inline Prediction forward(const ModelParams& m, const Standardizer& s, std::span<const double> x_raw) {
    if (x_raw.size() != m.p) throw std::invalid_argument("forward: dimension mismatch");
    const auto z = s.transform(x_raw);
    return detail::forward_standardized(m, z);
}

/// Lower and upper conditional survival at t: Bel / Pl of [log t, +inf).
inline std::pair<double, double> survival_bounds(const Grfn& g, double t) {
    if (!(t > 0.0)) throw std::domain_error("survival_bounds: t must be positive");
    if (std::isinf(t)) return {0.0, g.is_vacuous() ? 1.0 : 0.0};
    const Interval tail = Interval::above(std::log(t));
    return {bel_interval(g, tail), pl_interval(g, tail)};
}

inline std::pair<double, double> survival_bounds(const ModelParams& m, const Standardizer& s,
                                                 std::span<const double> x_raw, double t) {
    return survival_bounds(forward(m, s, x_raw).grfn, t);
}

namespace detail {

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) d += (a[j] - b[j]) * (a[j] - b[j]);
    return d;
}

// k-means++ seeding followed by Lloyd iterations; rows are row-major n x p.
inline std::vector<double> kmeans(const std::vector<double>& rows, std::size_t n, std::size_t p, std::size_t K,
                                  std::mt19937_64& rng, int iterations = 50) {
    auto row = [&](std::size_t i) { return std::span<const double>(rows.data() + i * p, p); };
    std::vector<double> centers;
    centers.reserve(K * p);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    const std::size_t first = pick(rng);
    centers.insert(centers.end(), row(first).begin(), row(first).end());
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t c = 1; c < K; ++c) {
        const std::span<const double> last(centers.data() + (c - 1) * p, p);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], sq_dist(row(i), last));
            total += d2[i];
        }
        std::size_t chosen = n - 1;
        if (total > 0.0) {
            double target = unit(rng) * total;
            for (std::size_t i = 0; i < n; ++i) {
                target -= d2[i];
                if (target < 0.0 && d2[i] > 0.0) {
                    chosen = i;
                    break;
                }
            }
            if (d2[chosen] == 0.0)
                for (std::size_t i = n; i-- > 0;)
                    if (d2[i] > 0.0) {
                        chosen = i;
                        break;
                    }
        } else {
            chosen = pick(rng);  // fewer distinct points than K
        }
        centers.insert(centers.end(), row(chosen).begin(), row(chosen).end());
    }

    std::vector<std::size_t> assign(n, 0);
    for (int it = 0; it < iterations; ++it) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < K; ++c) {
                const double d = sq_dist(row(i), std::span<const double>(centers.data() + c * p, p));
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (it == 0 || assign[i] != best) changed = true;
            assign[i] = best;
        }
        if (!changed) break;
        std::vector<double> sums(K * p, 0.0);
        std::vector<std::size_t> counts(K, 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++counts[assign[i]];
            for (std::size_t j = 0; j < p; ++j) sums[assign[i] * p + j] += rows[i * p + j];
        }
        for (std::size_t c = 0; c < K; ++c) {
            if (counts[c] == 0) continue;  // empty cluster keeps its center
            for (std::size_t j = 0; j < p; ++j)
                centers[c * p + j] = sums[c * p + j] / static_cast<double>(counts[c]);
        }
    }
    return centers;
}

}  // namespace detail

/// Data-driven starting point: k-means prototypes in standardized space,
/// gamma_k = 1 / median inter-prototype distance, constant local models at
/// the mean log duration, sigma2_k = var(log t*), h_k = 1.
inline std::pair<ModelParams, Standardizer> init_params(const Dataset& data, std::size_t K, std::uint64_t seed) {
    if (data.empty()) throw std::invalid_argument("init_params: empty dataset");
    if (K == 0) throw std::invalid_argument("init_params: K must be at least 1");
    if (K > data.size()) throw std::invalid_argument("init_params: more prototypes than records");
    const std::size_t n = data.size();
    const std::size_t p = data.dim();
    Standardizer st = Standardizer::fit(data);

    std::vector<double> rows;
    rows.reserve(n * p);
    for (const auto& r : data.records) {
        const auto z = st.transform(r.x);
        rows.insert(rows.end(), z.begin(), z.end());
    }
    std::mt19937_64 rng(seed);
    ModelParams m(K, p);
    m.prototypes = detail::kmeans(rows, n, p, K, rng);

    std::vector<double> pair_dist;
    for (std::size_t a = 0; a < K; ++a)
        for (std::size_t b = a + 1; b < K; ++b)
            pair_dist.push_back(std::sqrt(detail::sq_dist(m.prototype(a), m.prototype(b))));
    double scale = 0.0;
    if (!pair_dist.empty()) {
        std::nth_element(pair_dist.begin(), pair_dist.begin() + pair_dist.size() / 2, pair_dist.end());
        scale = pair_dist[pair_dist.size() / 2];
    }
    if (!(scale > 0.0)) scale = std::sqrt(static_cast<double>(p));
    std::fill(m.gamma.begin(), m.gamma.end(), 1.0 / scale);

    double ym = 0.0;
    for (const auto& r : data.records) ym += std::log(r.t_star);
    ym /= static_cast<double>(n);
    double yv = 0.0;
    for (const auto& r : data.records) yv += (std::log(r.t_star) - ym) * (std::log(r.t_star) - ym);
    yv = n > 1 ? yv / static_cast<double>(n - 1) : 1.0;
    if (!(yv > 1e-12 * (1.0 + ym * ym))) yv = 1.0;  // (near-)constant durations

    std::fill(m.beta0.begin(), m.beta0.end(), ym);
    std::fill(m.log_sigma2.begin(), m.log_sigma2.end(), std::log(yv));
    std::fill(m.log_h.begin(), m.log_h.end(), 0.0);
    return {std::move(m), std::move(st)};
}

/// Unreadable or inconsistent model file.
class ModelFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json model_to_json(const ModelParams& m, const Standardizer& s, const nlohmann::json& config = {},
                                    const std::vector<std::string>& feature_names = {}) {
    nlohmann::json j;
    j["format"] = "evsurv-ennreg";
    j["version"] = kModelFormatVersion;
    j["K"] = m.K;
    j["p"] = m.p;
    j["prototypes"] = m.prototypes;
    j["gamma"] = m.gamma;
    j["beta"] = m.beta;
    j["beta0"] = m.beta0;
    j["log_sigma2"] = m.log_sigma2;
    j["log_h"] = m.log_h;
    j["standardizer"] = {{"x_mean", s.x_mean}, {"x_scale", s.x_scale}, {"y_sd", s.y_sd}};
    if (!feature_names.empty()) j["feature_names"] = feature_names;
    j["train_config"] = config.is_null() ? nlohmann::json::object() : config;
    return j;
}

struct LoadedModel {
    ModelParams params;
    Standardizer standardizer;
    nlohmann::json config;
    std::vector<std::string> feature_names;
};

inline LoadedModel model_from_json(const nlohmann::json& j) {
    try {
        if (!j.is_object() || j.value("format", "") != "evsurv-ennreg") throw ModelFormatError("malformed model file");
        if (!j.contains("version") || !j["version"].is_number_integer()) throw ModelFormatError("malformed model file");
        if (j["version"].get<int>() != kModelFormatVersion)
            throw ModelFormatError("unsupported version " + j["version"].dump());
        LoadedModel out;
        auto& m = out.params;
        m.K = j.at("K").get<std::size_t>();
        m.p = j.at("p").get<std::size_t>();
        m.prototypes = j.at("prototypes").get<std::vector<double>>();
        m.gamma = j.at("gamma").get<std::vector<double>>();
        m.beta = j.at("beta").get<std::vector<double>>();
        m.beta0 = j.at("beta0").get<std::vector<double>>();
        m.log_sigma2 = j.at("log_sigma2").get<std::vector<double>>();
        m.log_h = j.at("log_h").get<std::vector<double>>();
        m.check();
        const auto& st = j.at("standardizer");
        out.standardizer.x_mean = st.at("x_mean").get<std::vector<double>>();
        out.standardizer.x_scale = st.at("x_scale").get<std::vector<double>>();
        out.standardizer.y_sd = st.at("y_sd").get<double>();
        if (out.standardizer.x_mean.size() != m.p || out.standardizer.x_scale.size() != m.p)
            throw ModelFormatError("malformed model file: standardizer dimension");
        out.config = j.value("train_config", nlohmann::json::object());
        out.feature_names = j.value("feature_names", std::vector<std::string>{});
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw ModelFormatError(std::string("malformed model file: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ModelFormatError(std::string("malformed model file: ") + e.what());
    }
}

inline void save_model(const ModelParams& m, const Standardizer& s, const std::string& path,
                       const nlohmann::json& config = {}, const std::vector<std::string>& feature_names = {}) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    os << model_to_json(m, s, config, feature_names).dump(1) << '\n';
    if (!os) throw std::runtime_error("write to '" + path + "' failed");
}

inline LoadedModel load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ModelFormatError("cannot open model file '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception&) {
        throw ModelFormatError("malformed model file");
    }
    return model_from_json(j);
}

}  // namespace evsurv

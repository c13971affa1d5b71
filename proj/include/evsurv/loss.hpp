#pragma once

// Censoring-aware evidential loss and its exact gradient.
//
// An uncensored record is scored on the interval [y* - eps, y* + eps]; a
// right-censored one on [y*, +inf). The loss mixes the belief-based and
// plausibility-based negative log-likelihoods with weight eta.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "evsurv/dataset.hpp"
#include "evsurv/dual.hpp"
#include "evsurv/grfn.hpp"
#include "evsurv/model.hpp"

namespace evsurv {

struct LossHyper {
    double eta = 0.1;          // weight of the belief term; smaller is more cautious
    double eps = 1e-4;         // half-width of an observed (uncensored) log-duration
    double xi = 0.0;           // penalty on sum h_k
    double rho = 0.0;          // penalty on sum gamma_k^2
    double prob_floor = 1e-300;  // lower clamp for log arguments

    void check() const {
        if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("LossHyper: eta must lie in [0, 1]");
        if (!(eps > 0.0)) throw std::invalid_argument("LossHyper: eps must be positive");
        if (!(xi >= 0.0) || !(rho >= 0.0)) throw std::invalid_argument("LossHyper: xi and rho must be >= 0");
        if (!(prob_floor > 0.0 && prob_floor <= 1e-6))
            throw std::invalid_argument("LossHyper: prob_floor must lie in (0, 1e-6]");
    }
};

/// Interval that an observation (y*, d) asserts about Y = log T.
inline Interval observed_interval(double y_star, int d, double eps) {
    return d == 1 ? Interval(y_star - eps, y_star + eps) : Interval::above(y_star);
}

template <class T>
T instance_loss(const BasicGrfn<T>& g, double y_star, int d, const LossHyper& hyper) {
    using std::log;
    const Interval iv = observed_interval(y_star, d, hyper.eps);
    auto clamped_log = [&](const T& v) { return value_of(v) < hyper.prob_floor ? T(std::log(hyper.prob_floor)) : log(v); };
    const T bel = bel_interval(g, iv);
    const T pl = pl_interval(g, iv);
    return -hyper.eta * clamped_log(bel) - (1.0 - hyper.eta) * clamped_log(pl);
}

/// Records already mapped into model space: standardized features and
/// log durations.
struct PreparedData {
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<double> z;  // row-major n x p
    std::vector<double> y;
    std::vector<int> d;

    std::span<const double> row(std::size_t i) const { return {z.data() + i * p, p}; }
};

inline PreparedData prepare(const Dataset& data, const Standardizer& s) {
    PreparedData out;
    out.n = data.size();
    out.p = data.dim();
    out.z.reserve(out.n * out.p);
    for (const auto& r : data.records) {
        const auto zr = s.transform(r.x);
        out.z.insert(out.z.end(), zr.begin(), zr.end());
        out.y.push_back(std::log(r.t_star));
        out.d.push_back(r.event);
    }
    return out;
}

inline double penalty(const ModelParams& m, const LossHyper& hyper) {
    double sum_h = 0.0, sum_g2 = 0.0;
    for (std::size_t k = 0; k < m.K; ++k) {
        sum_h += m.h(k);
        sum_g2 += m.gamma[k] * m.gamma[k];
    }
    const double K = static_cast<double>(m.K);
    return hyper.xi / K * sum_h + hyper.rho / K * sum_g2;
}

inline double total_cost(const ModelParams& m, const PreparedData& data, const LossHyper& hyper) {
    if (data.n == 0) throw std::invalid_argument("total_cost: empty dataset");
    if (data.p != m.p) throw std::invalid_argument("total_cost: dimension mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < data.n; ++i) {
        const auto pred = detail::forward_standardized(m, data.row(i));
        sum += instance_loss(pred.grfn, data.y[i], data.d[i], hyper);
    }
    return sum / static_cast<double>(data.n) + penalty(m, hyper);
}

inline double total_cost(const ModelParams& m, const Standardizer& s, const Dataset& data, const LossHyper& hyper) {
    return total_cost(m, prepare(data, s), hyper);
}

/// Exact gradient of total_cost. Local partials with respect to the fused
/// output (mu, sigma2, h) come from forward-mode duals; they are then pushed
/// back through the fusion and RBF layers by hand.
inline ModelParams grad_total_cost(const ModelParams& m, const PreparedData& data, const LossHyper& hyper,
                                   double* cost_out = nullptr) {
    if (data.n == 0) throw std::invalid_argument("grad_total_cost: empty dataset");
    if (data.p != m.p) throw std::invalid_argument("grad_total_cost: dimension mismatch");
    using D3 = Dual<3>;
    ModelParams g = m.zeros_like();
    const double inv_n = 1.0 / static_cast<double>(data.n);
    const std::size_t K = m.K, p = m.p;
    detail::ForwardTrace tr;
    double sum = 0.0;
    for (std::size_t i = 0; i < data.n; ++i) {
        const auto z = data.row(i);
        const auto pred = detail::forward_standardized(m, z, &tr);
        const BasicGrfn<D3> out{D3::variable(pred.grfn.mu, 0), D3::variable(pred.grfn.sigma2, 1),
                                D3::variable(pred.grfn.h, 2)};
        const D3 loss = instance_loss(out, data.y[i], data.d[i], hyper);
        sum += loss.val;
        if (pred.vacuous) continue;

        const double H = tr.total, mu = pred.grfn.mu, s2 = pred.grfn.sigma2;
        const double g_mu = loss.d[0] * inv_n, g_s2 = loss.d[1] * inv_n, g_h = loss.d[2] * inv_n;
        for (std::size_t k = 0; k < K; ++k) {
            const double a = tr.weight[k];
            const double g_a = g_mu * (tr.mu_k[k] - mu) / H +
                               g_s2 * (2.0 * a * tr.sigma2_k[k] / (H * H) - 2.0 * s2 / H) + g_h;
            const double g_muk = g_mu * a / H;
            g.beta0[k] += g_muk;
            double* gb = g.beta.data() + k * p;
            for (std::size_t j = 0; j < p; ++j) gb[j] += g_muk * z[j];
            g.log_sigma2[k] += g_s2 * a * a / (H * H) * tr.sigma2_k[k];
            g.log_h[k] += g_a * a;
            // a = s h with s = exp(u), u = -gamma^2 d2
            const double ds = g_a * a;  // d loss / du
            if (ds == 0.0) continue;
            const double gam = m.gamma[k];
            g.gamma[k] += ds * (-2.0 * gam * tr.dist2[k]);
            const double* proto = m.prototypes.data() + k * p;
            double* gp = g.prototypes.data() + k * p;
            for (std::size_t j = 0; j < p; ++j) gp[j] += ds * 2.0 * gam * gam * (z[j] - proto[j]);
        }
    }
    const double Kd = static_cast<double>(K);
    for (std::size_t k = 0; k < K; ++k) {
        g.log_h[k] += hyper.xi / Kd * m.h(k);
        g.gamma[k] += 2.0 * hyper.rho / Kd * m.gamma[k];
    }
    if (cost_out) *cost_out = sum * inv_n + penalty(m, hyper);
    return g;
}

inline ModelParams grad_total_cost(const ModelParams& m, const Standardizer& s, const Dataset& data,
                                   const LossHyper& hyper) {
    return grad_total_cost(m, prepare(data, s), hyper);
}

/// Central differences of an arbitrary functional of the parameters. The
/// step for coordinate theta is step * max(1, |theta|).
inline ModelParams finite_diff_grad(const std::function<double(const ModelParams&)>& f, const ModelParams& m,
                                    double step) {
    if (!(step > 0.0)) throw std::invalid_argument("finite_diff_grad: step must be positive");
    ModelParams g = m.zeros_like();
    ModelParams probe = m;
    auto src = probe.blocks();
    auto dst = g.blocks();
    for (std::size_t b = 0; b < src.size(); ++b) {
        for (std::size_t i = 0; i < src[b]->size(); ++i) {
            double& theta = (*src[b])[i];
            const double orig = theta;
            const double hstep = step * std::max(1.0, std::abs(orig));
            theta = orig + hstep;
            const double up = f(probe);
            theta = orig - hstep;
            const double down = f(probe);
            theta = orig;
            (*dst[b])[i] = (up - down) / (2.0 * hstep);
        }
    }
    return g;
}

inline ModelParams finite_diff_grad(const ModelParams& m, const Standardizer& s, const Dataset& data,
                                    const LossHyper& hyper, double step) {
    const PreparedData prepared = prepare(data, s);
    return finite_diff_grad([&](const ModelParams& q) { return total_cost(q, prepared, hyper); }, m, step);
}

}  // namespace evsurv

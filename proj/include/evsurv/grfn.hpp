#pragma once

// Gaussian fuzzy numbers, Gaussian random fuzzy numbers (GRFNs) and their
// lognormal transforms.
//
// A GRFN N~(mu, sigma2, h) is the random fuzzy set M -> GFN(M, h) with
// M ~ N(mu, sigma2). Interval belief/plausibility have closed forms in terms
// of the normal cdf; every measure here is templated on the scalar type so
// the loss can differentiate through it with evsurv::Dual.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

#include "evsurv/dual.hpp"
#include "evsurv/normal.hpp"

namespace evsurv {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Closed real interval; either endpoint may be infinite.
struct Interval {
    double lo = -kInf;
    double hi = kInf;

    constexpr Interval() = default;
    Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
        if (std::isnan(lo) || std::isnan(hi) || lo > hi || lo == kInf || hi == -kInf)
            throw std::invalid_argument("Interval: need lo <= hi, got [" + std::to_string(lo) +
                                        ", " + std::to_string(hi) + "]");
    }

    static Interval whole() { return {}; }
    static Interval below(double y) { return {-kInf, y}; }
    static Interval above(double x) { return {x, kInf}; }

    bool is_whole() const { return lo == -kInf && hi == kInf; }
    bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
    bool contains(double v) const { return lo <= v && v <= hi; }
    bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
    double width() const { return hi - lo; }
};

struct GaussianFuzzyNumber {
    double mode = 0.0;
    double precision = 0.0;

    double membership(double x) const {
        const double d = x - mode;
        return std::exp(-0.5 * precision * d * d);
    }
    bool is_vacuous() const { return precision == 0.0; }
};

/// Normalized product intersection of two GFNs. Two zero-precision inputs
/// give the vacuous GFN centred at the midpoint of the modes.
inline GaussianFuzzyNumber gfn_product(const GaussianFuzzyNumber& a, const GaussianFuzzyNumber& b) {
    const double h = a.precision + b.precision;
    if (h == 0.0) return {0.5 * (a.mode + b.mode), 0.0};
    return {(a.precision * a.mode + b.precision * b.mode) / h, h};
}

template <class T>
struct BasicGrfn {
    T mu{};
    T sigma2{};
    T h{};

    bool is_vacuous() const { return value_of(h) == 0.0; }
};

using Grfn = BasicGrfn<double>;

struct BelPl {
    double bel = 0.0;
    double pl = 0.0;
};

namespace detail {

template <class T>
void check_grfn(const BasicGrfn<T>& g) {
    const double s2 = value_of(g.sigma2);
    const double h = value_of(g.h);
    if (!(s2 >= 0.0) || !(h >= 0.0) || !std::isfinite(value_of(g.mu)) || !std::isfinite(s2))
        throw std::invalid_argument("GRFN: need finite mu, sigma2 >= 0 and h >= 0");
}

template <class T>
T clamp_unit(const T& v) {
    if (value_of(v) < 0.0) return T(0.0);
    if (value_of(v) > 1.0) return T(1.0);
    return v;
}

// Measures of the interval under the GFN(mu, h) alone (sigma2 == 0).
template <class T>
std::pair<T, T> possibilistic_bel_pl(const BasicGrfn<T>& g, const Interval& iv) {
    using std::exp;
    using std::expm1;
    const double m = value_of(g.mu);
    if (iv.contains(m)) {
        // necessity = 1 - sup of the membership outside the interval
        const bool lo_inf = !std::isfinite(iv.lo);
        const bool hi_inf = !std::isfinite(iv.hi);
        if (lo_inf && hi_inf) return {T(1.0), T(1.0)};
        T dist = lo_inf ? T(iv.hi) - g.mu
                        : (hi_inf ? g.mu - iv.lo
                                  : (m - iv.lo < iv.hi - m ? g.mu - iv.lo : T(iv.hi) - g.mu));
        return {-expm1(-0.5 * g.h * dist * dist), T(1.0)};
    }
    T dist = m < iv.lo ? T(iv.lo) - g.mu : g.mu - iv.hi;
    return {T(0.0), exp(-0.5 * g.h * dist * dist)};
}

// Belief of [x, y] with small precision, by integrating the necessity of the
// interval against the density of the random mode. The closed forms lose
// their digits to cancellation here. Composite Gauss-Legendre on segments of
// at most sigma/2, skipping where the density is negligible. Either endpoint
// may be infinite, not both.
template <class T>
T necessity_quadrature(const BasicGrfn<T>& g, const T& sigma, double x, double y) {
    using std::expm1;
    const double half = std::isfinite(x) && std::isfinite(y) ? 0.5 * (y - x) : kInf;
    const double sd = value_of(sigma);
    const double centre = value_of(g.mu);
    T sum(0.0);
    for (int side = 0; side < 2; ++side) {
        if (!std::isfinite(side == 0 ? x : y)) continue;
        // u = distance to the nearest endpoint; m = anchor + dir * u
        const double anchor = side == 0 ? x : y;
        const double dir = side == 0 ? 1.0 : -1.0;
        const double ua = dir * (centre - 40.0 * sd - anchor);
        const double ub = dir * (centre + 40.0 * sd - anchor);
        const double u0 = std::max(0.0, std::min(ua, ub));
        const double u1 = std::min(half, std::max(ua, ub));
        if (!(u1 > u0)) continue;
        const double segs = std::clamp(std::ceil((u1 - u0) / (0.5 * sd)), 1.0, 512.0);
        const double len = (u1 - u0) / segs;
        for (int k = 0; k < static_cast<int>(segs); ++k) {
            const double a = u0 + k * len;
            for (std::size_t i = 0; i < kGl16Nodes.size(); ++i) {
                const double u = a + 0.5 * len * (1.0 + kGl16Nodes[i]);
                const T nec = -expm1(-0.5 * g.h * (u * u));
                sum += (0.5 * len * kGl16Weights[i]) * nec * norm_pdf((anchor + dir * u - g.mu) / sigma);
            }
        }
    }
    return sum / sigma;
}

}  // namespace detail

/// Contour function (plausibility of the singleton {x}).
template <class T>
T contour(const BasicGrfn<T>& g, double x) {
    using std::exp;
    using std::sqrt;
    const T denom = 1.0 + g.h * g.sigma2;
    const T d = x - g.mu;
    return exp(-(g.h * d * d) / (2.0 * denom)) / sqrt(denom);
}

/// Degree of belief that the variable lies in `iv`.
template <class T>
T bel_interval(const BasicGrfn<T>& g, const Interval& iv) {
    using std::sqrt;
    detail::check_grfn(g);
    if (iv.is_whole()) return T(1.0);
    if (value_of(g.sigma2) == 0.0) return detail::possibilistic_bel_pl(g, iv).first;

    const T sigma = sqrt(g.sigma2);
    const T spread = sqrt(g.h * g.sigma2 + 1.0);
    if (iv.lo == -kInf || iv.hi == kInf) {
        const double edge = iv.lo == -kInf ? iv.hi : iv.lo;
        const double d = edge - value_of(g.mu);
        if (value_of(g.h) * (value_of(g.sigma2) + d * d) <= 1e-3)
            return detail::clamp_unit(detail::necessity_quadrature(g, sigma, iv.lo, iv.hi));
        const T z = (edge - g.mu) / sigma;
        if (iv.lo == -kInf) return detail::clamp_unit(norm_cdf(z) - contour(g, edge) * norm_cdf(z / spread));
        return detail::clamp_unit(norm_cdf(-z) - contour(g, edge) * norm_cdf(-z / spread));
    }

    const double x = iv.lo;
    const double y = iv.hi;
    const double w = y - x;
    if (w == 0.0) return T(0.0);
    if (value_of(g.h) * 0.25 * w * w <= 1.0)
        return detail::clamp_unit(detail::necessity_quadrature(g, sigma, x, y));

    const T wide = sigma * spread;
    const T shift = 0.5 * w * g.h * g.sigma2;
    const T mid = 0.5 * (x + y) - g.mu;
    const T base = norm_cdf_diff((x - g.mu) / sigma, (y - g.mu) / sigma);
    const T left = contour(g, x) * norm_cdf_diff((x - g.mu) / wide, (mid + shift) / wide);
    const T right = contour(g, y) * norm_cdf_diff((mid - shift) / wide, (y - g.mu) / wide);
    return detail::clamp_unit(base - left - right);
}

/// Degree of plausibility that the variable lies in `iv`.
template <class T>
T pl_interval(const BasicGrfn<T>& g, const Interval& iv) {
    using std::sqrt;
    detail::check_grfn(g);
    if (iv.is_whole()) return T(1.0);
    if (value_of(g.sigma2) == 0.0) return detail::possibilistic_bel_pl(g, iv).second;

    const T sigma = sqrt(g.sigma2);
    const T spread = sqrt(g.h * g.sigma2 + 1.0);
    if (iv.lo == -kInf) {
        const T z = (iv.hi - g.mu) / sigma;
        return detail::clamp_unit(norm_cdf(z) + contour(g, iv.hi) * norm_cdf(-z / spread));
    }
    if (iv.hi == kInf) {
        const T z = (iv.lo - g.mu) / sigma;
        return detail::clamp_unit(norm_cdf(-z) + contour(g, iv.lo) * norm_cdf(z / spread));
    }
    const T zx = (iv.lo - g.mu) / sigma;
    const T zy = (iv.hi - g.mu) / sigma;
    return detail::clamp_unit(norm_cdf_diff(zx, zy) + contour(g, iv.lo) * norm_cdf(zx / spread) +
                              contour(g, iv.hi) * norm_cdf(-zy / spread));
}

inline BelPl bel_pl(const Grfn& g, const Interval& iv) {
    return {bel_interval(g, iv), pl_interval(g, iv)};
}

/// Unnormalized product-intersection of two independent GRFNs. If both are
/// vacuous the result is vacuous with the mean of the two locations.
template <class T>
BasicGrfn<T> combine_unnormalized(const BasicGrfn<T>& a, const BasicGrfn<T>& b) {
    const T h = a.h + b.h;
    if (value_of(h) == 0.0) return {0.5 * (a.mu + b.mu), T(0.0), T(0.0)};
    return {(a.h * a.mu + b.h * b.mu) / h, (a.h * a.h * a.sigma2 + b.h * b.h * b.sigma2) / (h * h), h};
}

/// n-ary unnormalized combination, evaluated through the precision-weighted
/// sums rather than a pairwise fold.
inline Grfn combine_unnormalized(std::span<const Grfn> parts) {
    if (parts.empty()) return {};
    double h = 0.0, hmu = 0.0, h2s2 = 0.0, mu_sum = 0.0;
    for (const auto& g : parts) {
        h += g.h;
        hmu += g.h * g.mu;
        h2s2 += g.h * g.h * g.sigma2;
        mu_sum += g.mu;
    }
    if (h == 0.0) return {mu_sum / static_cast<double>(parts.size()), 0.0, 0.0};
    return {hmu / h, h2s2 / (h * h), h};
}

/// GRFN on log T viewed as a random fuzzy number on T > 0.
struct LognormalRfn {
    Grfn base;

    double most_plausible() const { return std::exp(base.mu); }
    double contour(double t) const {
        if (!(t > 0.0)) throw std::domain_error("LognormalRfn: time must be positive");
        return evsurv::contour(base, std::log(t));
    }
    BelPl bel_pl(double t1, double t2) const {
        if (!(t1 > 0.0) || !(t2 > 0.0)) throw std::domain_error("LognormalRfn: times must be positive");
        if (t1 > t2) throw std::invalid_argument("LognormalRfn: need t1 <= t2");
        return evsurv::bel_pl(base, Interval(std::log(t1), std::log(t2)));
    }
};

/// Symmetric interval [mu - r, mu + r] whose belief equals alpha.
inline Interval belief_prediction_interval(const Grfn& g, double alpha) {
    detail::check_grfn(g);
    if (!(alpha >= 0.0 && alpha < 1.0))
        throw std::invalid_argument("belief_prediction_interval: alpha must lie in [0, 1)");
    if (alpha == 0.0) return {g.mu, g.mu};
    if (g.h == 0.0) throw std::domain_error("unreachable belief level");

    auto bel_at = [&](double r) { return bel_interval(g, Interval(g.mu - r, g.mu + r)); };
    double lo = 0.0;
    double hi = std::sqrt(g.sigma2) + 1.0 / std::sqrt(std::max(g.h, 1e-300));
    int grow = 0;
    while (bel_at(hi) < alpha) {
        lo = hi;
        hi *= 2.0;
        if (++grow > 200 || !std::isfinite(hi)) throw std::domain_error("unreachable belief level");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double b = bel_at(mid);
        if (std::abs(b - alpha) <= 1e-12) return {g.mu - mid, g.mu + mid};
        (b < alpha ? lo : hi) = mid;
        if (hi - lo <= 1e-15 * std::max(1.0, hi)) break;
    }
    const double r = 0.5 * (lo + hi);
    return {g.mu - r, g.mu + r};
}

}  // namespace evsurv

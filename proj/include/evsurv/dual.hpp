#pragma once

// Forward-mode dual numbers with a fixed number of tangent directions.
// Used to get the local partials of the loss with respect to the output
// GRFN (mu, sigma2, h); the network part of the gradient is accumulated
// in reverse on top of those partials.

#include <array>
#include <cmath>
#include <cstddef>

namespace evsurv {

template <std::size_t N>
struct Dual {
    double val = 0.0;
    std::array<double, N> d{};

    constexpr Dual() = default;
    constexpr Dual(double v) : val(v) {}  // NOLINT: implicit constant promotion

    static Dual variable(double v, std::size_t dir) {
        Dual x(v);
        x.d[dir] = 1.0;
        return x;
    }

    Dual& operator+=(const Dual& o) {
        val += o.val;
        for (std::size_t i = 0; i < N; ++i) d[i] += o.d[i];
        return *this;
    }
    Dual& operator-=(const Dual& o) {
        val -= o.val;
        for (std::size_t i = 0; i < N; ++i) d[i] -= o.d[i];
        return *this;
    }
    Dual& operator*=(const Dual& o) {
        for (std::size_t i = 0; i < N; ++i) d[i] = d[i] * o.val + val * o.d[i];
        val *= o.val;
        return *this;
    }
    Dual& operator/=(const Dual& o) {
        const double inv = 1.0 / o.val;
        const double q = val * inv;
        for (std::size_t i = 0; i < N; ++i) d[i] = (d[i] - q * o.d[i]) * inv;
        val = q;
        return *this;
    }

    friend Dual operator+(Dual a, const Dual& b) { return a += b; }
    friend Dual operator-(Dual a, const Dual& b) { return a -= b; }
    friend Dual operator*(Dual a, const Dual& b) { return a *= b; }
    friend Dual operator/(Dual a, const Dual& b) { return a /= b; }
    friend Dual operator-(Dual a) {
        a.val = -a.val;
        for (auto& x : a.d) x = -x;
        return a;
    }
};

namespace detail {
template <std::size_t N>
Dual<N> chain(const Dual<N>& x, double f, double df) {
    Dual<N> r(f);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = df * x.d[i];
    return r;
}
}  // namespace detail

inline double value_of(double x) { return x; }
template <std::size_t N>
double value_of(const Dual<N>& x) { return x.val; }

template <std::size_t N>
Dual<N> exp(const Dual<N>& x) {
    const double e = std::exp(x.val);
    return detail::chain(x, e, e);
}
template <std::size_t N>
Dual<N> expm1(const Dual<N>& x) {
    return detail::chain(x, std::expm1(x.val), std::exp(x.val));
}
template <std::size_t N>
Dual<N> log(const Dual<N>& x) {
    return detail::chain(x, std::log(x.val), 1.0 / x.val);
}
template <std::size_t N>
Dual<N> sqrt(const Dual<N>& x) {
    const double s = std::sqrt(x.val);
    return detail::chain(x, s, 0.5 / s);
}
template <std::size_t N>
Dual<N> erfc(const Dual<N>& x) {
    constexpr double two_over_sqrt_pi = 1.1283791670955126;
    return detail::chain(x, std::erfc(x.val), -two_over_sqrt_pi * std::exp(-x.val * x.val));
}

}  // namespace evsurv

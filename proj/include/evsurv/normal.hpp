#pragma once

// Standard normal helpers, templated so that they run on plain doubles and
// on evsurv::Dual.

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>

#include "evsurv/dual.hpp"

namespace evsurv {

namespace detail {

// 8-point Gauss-Legendre rule on [-1, 1].
inline constexpr std::array<double, 8> kGl8Nodes = {
    -0.96028985649753618, -0.79666647741362673, -0.52553240991632899, -0.18343464249564978,
    0.18343464249564978, 0.52553240991632899, 0.79666647741362673, 0.96028985649753618};
inline constexpr std::array<double, 8> kGl8Weights = {
    0.10122853629037669, 0.22238103445337434, 0.31370664587788705, 0.36268378337836177,
    0.36268378337836177, 0.31370664587788705, 0.22238103445337434, 0.10122853629037669};

// 16-point Gauss-Legendre rule on [-1, 1].
inline constexpr std::array<double, 16> kGl16Nodes = {
    -0.98940093499164994, -0.9445750230732326, -0.86563120238783176, -0.755404408355003,
    -0.61787624440264377, -0.45801677765722737, -0.28160355077925892, -0.095012509837637454,
    0.095012509837637454, 0.28160355077925892, 0.45801677765722737, 0.61787624440264377,
    0.755404408355003, 0.86563120238783176, 0.9445750230732326, 0.98940093499164994};
inline constexpr std::array<double, 16> kGl16Weights = {
    0.027152459411754037, 0.062253523938647706, 0.095158511682492591, 0.12462897125553403,
    0.14959598881657676, 0.16915651939500262, 0.18260341504492361, 0.18945061045506859,
    0.18945061045506859, 0.18260341504492361, 0.16915651939500262, 0.14959598881657676,
    0.12462897125553403, 0.095158511682492591, 0.062253523938647706, 0.027152459411754037};

}  // namespace detail

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

template <class T>
T norm_pdf(const T& z) {
    using std::exp;
    return kInvSqrt2Pi * exp(-0.5 * z * z);
}

template <class T>
T norm_cdf(const T& z) {
    using std::erfc;
    return 0.5 * erfc(-kInvSqrt2 * z);
}

/// Phi(b) - Phi(a) for a <= b without cancellation: narrow spans are
/// integrated directly, wide spans use whichever tail is smaller.
template <class T>
T norm_cdf_diff(const T& a, const T& b) {
    const double av = value_of(a);
    const double bv = value_of(b);
    if (!(av < bv)) return T(0.0);
    if (std::isinf(av) || std::isinf(bv)) {
        if (std::isinf(av) && std::isinf(bv)) return T(1.0);
        if (std::isinf(av)) return norm_cdf(b);
        return norm_cdf(-a);
    }
    if (bv - av <= 0.25) {
        const T half = 0.5 * (b - a);
        const T mid = 0.5 * (a + b);
        T sum(0.0);
        for (std::size_t i = 0; i < detail::kGl8Nodes.size(); ++i)
            sum += detail::kGl8Weights[i] * norm_pdf(mid + detail::kGl8Nodes[i] * half);
        return sum * half;
    }
    if (av >= 0.0) return norm_cdf(-a) - norm_cdf(-b);
    if (bv <= 0.0) return norm_cdf(b) - norm_cdf(a);
    return 1.0 - norm_cdf(a) - norm_cdf(-b);
}

/// Inverse of the standard normal cdf.
inline double norm_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -std::numeric_limits<double>::infinity();
        if (p == 1.0) return std::numeric_limits<double>::infinity();
        throw std::domain_error("norm_quantile: probability outside [0, 1]");
    }
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

}  // namespace evsurv

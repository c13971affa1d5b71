#pragma once

// Monte-Carlo estimate of interval belief/plausibility of a GRFN, drawn
// straight from the definition: sample the random mode, score the interval
// under the resulting GFN, average.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

#include "evsurv/grfn.hpp"

namespace evsurv {

struct McEstimate {
    double bel = 0.0;
    double pl = 0.0;
    double bel_se = 0.0;  // standard error of the sample mean
    double pl_se = 0.0;
};

inline McEstimate mc_oracle_bel_pl(const Grfn& g, const Interval& iv, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("mc_oracle_bel_pl: need at least one sample");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> mode_dist(g.mu, std::sqrt(g.sigma2));
    const GaussianFuzzyNumber probe{0.0, g.h};

    double sb = 0.0, sb2 = 0.0, sp = 0.0, sp2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double m = g.sigma2 > 0.0 ? mode_dist(rng) : g.mu;
        double nec = 0.0;
        double pos = 1.0;
        if (iv.contains(m)) {
            // sup of the membership over the complement, reached at the
            // nearer finite endpoint
            double sup_out = 0.0;
            if (std::isfinite(iv.lo)) sup_out = std::max(sup_out, probe.membership(m - iv.lo));
            if (std::isfinite(iv.hi)) sup_out = std::max(sup_out, probe.membership(iv.hi - m));
            nec = 1.0 - sup_out;
        } else {
            pos = probe.membership(m < iv.lo ? iv.lo - m : m - iv.hi);
        }
        sb += nec;
        sb2 += nec * nec;
        sp += pos;
        sp2 += pos * pos;
    }
    const double dn = static_cast<double>(n);
    auto se = [dn](double s, double s2) {
        const double mean = s / dn;
        return std::sqrt(std::max(0.0, s2 / dn - mean * mean) / dn);
    };
    return {sb / dn, sp / dn, se(sb, sb2), se(sp, sp2)};
}

}  // namespace evsurv

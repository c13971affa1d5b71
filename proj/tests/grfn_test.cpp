#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>
#include <algorithm>

#include "evsurv/grfn.hpp"
#include "evsurv/mc_oracle.hpp"

using namespace evsurv;

namespace {

// Brute-force oracle: integrate necessity / possibility of the interval
// under GFN(m, h) against the N(mu, sigma2) density with composite Simpson.
BelPl brute_force(const Grfn& g, const Interval& iv, int panels = 20000) {
    const double sd = std::sqrt(g.sigma2);
    const GaussianFuzzyNumber probe{0.0, g.h};
    auto scores = [&](double m) {
        if (iv.contains(m)) {
            double out = 0.0;
            if (std::isfinite(iv.lo)) out = std::max(out, probe.membership(m - iv.lo));
            if (std::isfinite(iv.hi)) out = std::max(out, probe.membership(iv.hi - m));
            return std::pair{1.0 - out, 1.0};
        }
        return std::pair{0.0, probe.membership(m < iv.lo ? iv.lo - m : m - iv.hi)};
    };
    // breakpoints at the kinks of the integrand
    std::vector<double> cuts{g.mu - 12.0 * sd, g.mu + 12.0 * sd};
    for (double c : {iv.lo, iv.hi, 0.5 * (iv.lo + iv.hi)})
        if (std::isfinite(c) && c > cuts[0] && c < cuts[1]) cuts.push_back(c);
    std::sort(cuts.begin(), cuts.end());
    double bel = 0.0, pl = 0.0;
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
        const double a = cuts[s], step = (cuts[s + 1] - a) / panels;
        double sb = 0.0, sp = 0.0;
        for (int i = 0; i <= panels; ++i) {
            const double m = a + i * step;
            const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            const double z = (m - g.mu) / sd;
            const double dens = std::exp(-0.5 * z * z) / (sd * std::sqrt(2 * M_PI));
            auto [n, p] = scores(m);
            sb += w * dens * n;
            sp += w * dens * p;
        }
        bel += sb * step / 3.0;
        pl += sp * step / 3.0;
    }
    return {bel, pl};
}

}  // namespace

TEST(Contour, ExamplesAndPeak) {
    EXPECT_NEAR(contour(Grfn{0, 1, 1}, 0.0), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_DOUBLE_EQ(contour(Grfn{0, 1, 0}, 123.0), 1.0);
    EXPECT_NEAR(contour(Grfn{0, 0, 2}, 1.0), std::exp(-1.0), 1e-15);

    const Grfn g{0.4, 0.7, 3.0};
    const double peak = contour(g, g.mu);
    EXPECT_NEAR(peak, 1.0 / std::sqrt(1.0 + 3.0 * 0.7), 1e-15);
    for (double x = -3; x <= 3; x += 0.1) EXPECT_LE(contour(g, x), peak);
    EXPECT_NEAR(contour(g, g.mu + 0.8), contour(g, g.mu - 0.8), 1e-15);
}

TEST(Measures, HalfLineAtMean) {
    const Grfn g{0, 1, 1};
    EXPECT_NEAR(bel_interval(g, Interval::below(0.0)), 0.5 - 0.5 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(pl_interval(g, Interval::below(0.0)), 0.5 + 0.5 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(bel_interval(g, Interval::above(0.0)), 0.5 - 0.5 / std::sqrt(2.0), 1e-15);
    EXPECT_DOUBLE_EQ(bel_interval(Grfn{0.2, 3.0, 0.5}, Interval::whole()), 1.0);
    EXPECT_DOUBLE_EQ(pl_interval(Grfn{0.2, 3.0, 0.5}, Interval::whole()), 1.0);
}

TEST(Measures, VacuousAndPossibilistic) {
    const Grfn vac{0, 1, 0};
    EXPECT_NEAR(bel_interval(vac, Interval(-1, 2)), 0.0, 1e-15);
    EXPECT_NEAR(pl_interval(vac, Interval(-1, 2)), 1.0, 1e-15);

    // sigma2 = 0 reduces to the GFN itself
    const Grfn poss{0, 0, 2};
    EXPECT_NEAR(bel_interval(poss, Interval(-1, 1)), 1.0 - std::exp(-1.0), 1e-15);
    EXPECT_DOUBLE_EQ(pl_interval(poss, Interval(-1, 1)), 1.0);
    EXPECT_NEAR(pl_interval(poss, Interval(1, 2)), std::exp(-1.0), 1e-15);
    EXPECT_DOUBLE_EQ(bel_interval(poss, Interval(1, 2)), 0.0);
}

TEST(Measures, MatchesBruteForceIntegration) {
    const Grfn cases[] = {{0.3, 0.8, 2.5}, {-1.0, 2.0, 0.1}, {2.0, 0.05, 40.0}, {0.0, 1.0, 1.0}};
    const Interval ivs[] = {{-1, 1}, {0.25, 0.3}, {-5, 0.2}, {1.9, 2.3}, {-0.001, 0.001}};
    for (const auto& g : cases) {
        for (const auto& iv : ivs) {
            const auto ref = brute_force(g, iv);
            const auto got = bel_pl(g, iv);
            EXPECT_NEAR(got.bel, ref.bel, 1e-9 + 1e-7 * ref.bel) << g.mu << " [" << iv.lo << "," << iv.hi << "]";
            EXPECT_NEAR(got.pl, ref.pl, 1e-9) << g.mu << " [" << iv.lo << "," << iv.hi << "]";
        }
    }
}

TEST(Measures, NarrowIntervalKeepsRelativeAccuracy) {
    // width 2e-4: belief is O(1e-13) and must still match the integral
    const Grfn g{0.1, 0.9, 4.0};
    const Interval iv(0.3 - 1e-4, 0.3 + 1e-4);
    const auto ref = brute_force(g, iv);
    const double bel = bel_interval(g, iv);
    EXPECT_GT(bel, 0.0);
    EXPECT_NEAR(bel / ref.bel, 1.0, 1e-6);
}

TEST(Measures, MonteCarloExamples) {
    const Grfn g{0.3, 0.8, 2.5};
    const Interval iv(-1, 1);
    const auto mc = mc_oracle_bel_pl(g, iv, 1'000'000, 7);
    EXPECT_NEAR(bel_interval(g, iv), mc.bel, 3 * mc.bel_se);
    EXPECT_NEAR(pl_interval(g, iv), mc.pl, 3 * mc.pl_se);

    const auto half = mc_oracle_bel_pl(Grfn{0, 1, 1}, Interval::below(0.0), 1'000'000, 11);
    EXPECT_NEAR(half.bel, 0.14644660940672624, 3 * half.bel_se);
}

TEST(MonteCarlo, DegenerateCasesAreExact) {
    const auto vac = mc_oracle_bel_pl(Grfn{0, 1, 0}, Interval(-1, 1), 1000, 3);
    EXPECT_DOUBLE_EQ(vac.bel, 0.0);
    EXPECT_DOUBLE_EQ(vac.pl, 1.0);
    const auto poss = mc_oracle_bel_pl(Grfn{0, 0, 2}, Interval(-1, 1), 1000, 3);
    EXPECT_NEAR(poss.bel, 1.0 - std::exp(-1.0), 1e-12);
    EXPECT_DOUBLE_EQ(poss.pl, 1.0);
    EXPECT_EQ(mc_oracle_bel_pl(Grfn{0, 1, 1}, Interval(0, 1), 500, 9).bel,
              mc_oracle_bel_pl(Grfn{0, 1, 1}, Interval(0, 1), 500, 9).bel);
}

TEST(Measures, RandomizedProperties) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-3, 3), pos(0.01, 4), hdist(0, 20);
    for (int i = 0; i < 500; ++i) {
        const Grfn g{u(rng), pos(rng), hdist(rng)};
        double a = u(rng), b = u(rng);
        if (a > b) std::swap(a, b);
        const Interval iv(a, b);
        const double bel = bel_interval(g, iv), pl = pl_interval(g, iv);
        ASSERT_LE(0.0, bel);
        ASSERT_LE(bel, pl + 1e-15);
        ASSERT_LE(pl, 1.0);

        // duality on half-lines
        EXPECT_NEAR(bel_interval(g, Interval::above(a)), 1.0 - pl_interval(g, Interval::below(a)), 1e-14);
        EXPECT_NEAR(bel_interval(g, Interval::below(a)), 1.0 - pl_interval(g, Interval::above(a)), 1e-14);

        // monotonicity under containment
        const double grow = std::abs(u(rng)) / 3.0;
        const Interval outer(a - grow, b + grow * 0.5);
        EXPECT_LE(bel, bel_interval(g, outer) + 1e-13);
        EXPECT_LE(pl, pl_interval(g, outer) + 1e-13);
        EXPECT_LE(bel_interval(g, Interval::below(a)), bel_interval(g, Interval::below(b)) + 1e-14);
    }
}

TEST(Measures, ProbabilisticLimit) {
    const Grfn g{0.5, 1.5, 1e8};
    const double sd = std::sqrt(g.sigma2);
    for (double x = -3; x <= 3; x += 0.5) {
        for (double y = x; y <= 4; y += 0.7) {
            const double p = norm_cdf((y - g.mu) / sd) - norm_cdf((x - g.mu) / sd);
            EXPECT_NEAR(bel_interval(g, Interval(x, y)), p, 1e-3);
            EXPECT_NEAR(pl_interval(g, Interval(x, y)), p, 1e-3);
        }
    }
}

TEST(Combination, Examples) {
    auto expect_grfn = [](const Grfn& got, const Grfn& want) {
        EXPECT_NEAR(got.mu, want.mu, 1e-15);
        EXPECT_NEAR(got.sigma2, want.sigma2, 1e-15);
        EXPECT_NEAR(got.h, want.h, 1e-15);
    };
    expect_grfn(combine_unnormalized(Grfn{0, 1, 1}, Grfn{2, 1, 1}), {1, 0.5, 2});
    expect_grfn(combine_unnormalized(Grfn{0, 4, 1}, Grfn{4, 0, 3}), {3, 0.25, 4});
    expect_grfn(combine_unnormalized(Grfn{0.7, 2.0, 1.3}, Grfn{-9, 5, 0}), {0.7, 2.0, 1.3});

    const Grfn vac = combine_unnormalized(Grfn{1, 2, 0}, Grfn{3, 5, 0});
    EXPECT_TRUE(vac.is_vacuous());
    EXPECT_DOUBLE_EQ(vac.mu, 2.0);
    EXPECT_DOUBLE_EQ(vac.sigma2, 0.0);
}

TEST(Combination, CommutativeAssociativeAndFoldConsistent) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-2, 2), pos(0.01, 3);
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
    for (int i = 0; i < 200; ++i) {
        const Grfn a{u(rng), pos(rng), pos(rng)}, b{u(rng), pos(rng), pos(rng)}, c{u(rng), pos(rng), pos(rng)};
        const Grfn ab = combine_unnormalized(a, b), ba = combine_unnormalized(b, a);
        EXPECT_LE(rel(ab.mu, ba.mu), 1e-12);
        EXPECT_LE(rel(ab.sigma2, ba.sigma2), 1e-12);
        const Grfn l = combine_unnormalized(ab, c), r = combine_unnormalized(a, combine_unnormalized(b, c));
        EXPECT_LE(rel(l.mu, r.mu), 1e-12);
        EXPECT_LE(rel(l.sigma2, r.sigma2), 1e-12);
        EXPECT_LE(rel(l.h, r.h), 1e-12);
        const Grfn parts[] = {c, a, b};
        const Grfn n = combine_unnormalized(std::span<const Grfn>(parts));
        EXPECT_LE(rel(n.mu, l.mu), 1e-12);
        EXPECT_LE(rel(n.sigma2, l.sigma2), 1e-12);
        EXPECT_LE(rel(n.h, l.h), 1e-12);
    }
}

TEST(Gfn, Product) {
    auto g = gfn_product({0, 1}, {2, 1});
    EXPECT_DOUBLE_EQ(g.mode, 1.0);
    EXPECT_DOUBLE_EQ(g.precision, 2.0);
    g = gfn_product({0, 1}, {4, 3});
    EXPECT_DOUBLE_EQ(g.mode, 3.0);
    EXPECT_DOUBLE_EQ(g.precision, 4.0);
    g = gfn_product({1.5, 2.5}, {-7, 0});
    EXPECT_DOUBLE_EQ(g.mode, 1.5);
    EXPECT_DOUBLE_EQ(g.precision, 2.5);
    const auto a = gfn_product(gfn_product({1, 2}, {3, 4}), {-2, 0.5});
    const auto b = gfn_product({1, 2}, gfn_product({3, 4}, {-2, 0.5}));
    EXPECT_NEAR(a.mode, b.mode, 1e-14);
    EXPECT_NEAR(a.precision, b.precision, 1e-14);
    EXPECT_TRUE(gfn_product({1, 0}, {2, 0}).is_vacuous());
    const GaussianFuzzyNumber m{0.3, 2.0};
    EXPECT_DOUBLE_EQ(m.membership(0.3), 1.0);
    EXPECT_DOUBLE_EQ(m.membership(0.3 + 0.6), m.membership(0.3 - 0.6));
}

TEST(Lognormal, TimeIntervalsMapToLogScale) {
    const LognormalRfn t{Grfn{0, 1, 1}};
    EXPECT_DOUBLE_EQ(t.bel_pl(1.0, 1.0).bel, 0.0);
    const auto a = t.bel_pl(std::exp(-1.0), std::exp(1.0));
    const auto b = bel_pl(t.base, Interval(-1, 1));
    EXPECT_NEAR(a.bel, b.bel, 1e-14);
    EXPECT_NEAR(a.pl, b.pl, 1e-14);
    EXPECT_DOUBLE_EQ(t.most_plausible(), 1.0);
    EXPECT_THROW(t.bel_pl(0.0, 1.0), std::domain_error);
    EXPECT_THROW(t.bel_pl(-1.0, 1.0), std::domain_error);

    const LognormalRfn s{Grfn{0.3, 0.8, 2.5}};
    const auto got = s.bel_pl(0.5, 3.0);
    const auto mc = mc_oracle_bel_pl(s.base, Interval(std::log(0.5), std::log(3.0)), 1'000'000, 21);
    EXPECT_NEAR(got.bel, mc.bel, 3 * mc.bel_se);
    EXPECT_NEAR(got.pl, mc.pl, 3 * mc.pl_se);
}

TEST(PredictionInterval, Examples) {
    const auto zero = belief_prediction_interval(Grfn{0.4, 1, 2}, 0.0);
    EXPECT_DOUBLE_EQ(zero.lo, 0.4);
    EXPECT_DOUBLE_EQ(zero.hi, 0.4);

    const auto gauss = belief_prediction_interval(Grfn{0, 1, 1e6}, 0.95);
    EXPECT_NEAR(gauss.hi, norm_quantile(0.975), 0.01);

    const Grfn g{0, 1, 1};
    const auto half = belief_prediction_interval(g, 0.5);
    EXPECT_NEAR(bel_interval(g, half), 0.5, 1e-9);
    const auto mc = mc_oracle_bel_pl(g, half, 1'000'000, 99);
    EXPECT_NEAR(mc.bel, 0.5, 3 * mc.bel_se);

    EXPECT_THROW(belief_prediction_interval(Grfn{0, 1, 0}, 0.5), std::domain_error);
    EXPECT_THROW(belief_prediction_interval(g, 1.0), std::invalid_argument);
}

TEST(PredictionInterval, MonotoneInLevel) {
    const Grfn g{1.0, 0.3, 0.7};
    double prev = 0.0;
    for (double a = 0.05; a < 0.99; a += 0.05) {
        const auto iv = belief_prediction_interval(g, a);
        EXPECT_NEAR(bel_interval(g, iv), a, 1e-9);
        EXPECT_GE(iv.width(), prev);
        prev = iv.width();
    }
    // possibilistic case has a closed form: 1 - exp(-h r^2 / 2) = alpha
    const auto p = belief_prediction_interval(Grfn{0, 0, 2}, 0.6);
    EXPECT_NEAR(p.hi, std::sqrt(-std::log(0.4)), 1e-9);
}

TEST(IntervalType, Validation) {
    EXPECT_THROW(Interval(1, 0), std::invalid_argument);
    EXPECT_THROW(Interval(std::nan(""), 0), std::invalid_argument);
    EXPECT_NO_THROW(Interval(-kInf, kInf));
    EXPECT_THROW(bel_interval(Grfn{0, -1, 1}, Interval(0, 1)), std::invalid_argument);
}

TEST(BelInterval, TinyPrecisionWideInterval) {
    // to first order in h, Bel = h/2 * int f(m) u(m)^2 dm, u = distance to nearest endpoint
    const double h = 2.4e-8;
    for (const Grfn g : {Grfn{-0.74, 0.234, h}, Grfn{0.0, 1.0, h}, Grfn{3.0, 0.01, h}}) {
        const double lo = -3.14, hi = -2.54, sd = std::sqrt(g.sigma2);
        const int panels = 200000;
        const double step = (hi - lo) / panels;
        double acc = 0.0;
        for (int i = 0; i <= panels; ++i) {
            const double m = lo + i * step;
            const double wgt = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            const double u = std::min(m - lo, hi - m);
            const double z = (m - g.mu) / sd;
            acc += wgt * std::exp(-0.5 * z * z) / (sd * std::sqrt(2 * M_PI)) * u * u;
        }
        const double expected = 0.5 * h * acc * step / 3.0;
        const double got = bel_interval(g, Interval(lo, hi));
        EXPECT_NEAR(got, expected, 1e-6 * expected + 1e-300) << g.mu;
    }
}

TEST(BelInterval, TinyPrecisionHalfLines) {
    // references from 30-digit adaptive quadrature of the necessity integral
    struct Case {
        double mu, s2, h, a, bel_above;
    };
    const Case cases[] = {
        {0.3, 0.8, 1e-9, -2.0, 3.04462299188232e-9},   {0.3, 0.8, 1e-9, 0.1, 2.81958191015623e-10},
        {0.3, 0.8, 1e-9, 1.7, 7.71813134119192e-12},   {0.3, 0.8, 3e-6, -2.0, 9.13380678922162e-6},
        {0.3, 0.8, 3e-6, 1.7, 2.31543751476533e-8},    {-1.0, 2.5, 1e-9, 0.1, 1.78976275898729e-10},
        {-1.0, 2.5, 3e-6, 0.1, 5.36926728954187e-7},   {-1.0, 2.5, 3e-6, 1.7, 4.94988686137729e-8},
    };
    for (const auto& c : cases) {
        const double up = bel_interval(Grfn{c.mu, c.s2, c.h}, Interval::above(c.a));
        EXPECT_NEAR(up, c.bel_above, 1e-13 * c.bel_above) << c.h << ' ' << c.a;
        // mirror image
        const double down = bel_interval(Grfn{-c.mu, c.s2, c.h}, Interval::below(-c.a));
        EXPECT_NEAR(down, up, 1e-14 * up);
    }
}

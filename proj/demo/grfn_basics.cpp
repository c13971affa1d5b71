// Belief, plausibility, combination and prediction intervals of a few GRFNs.

#include <cstdio>
#include <stdexcept>

#include "evsurv/grfn.hpp"

using namespace evsurv;

static void show(const char* name, const Grfn& g) {
    std::printf("%s: mu=%.3f sigma2=%.3f h=%.3f\n", name, g.mu, g.sigma2, g.h);
    const Interval ivs[] = {Interval(-1, 1), Interval::below(g.mu), Interval::above(2.0)};
    const char* labels[] = {"[-1, 1]", "(-inf, mu]", "[2, inf)"};
    for (int i = 0; i < 3; ++i) {
        const BelPl bp = bel_pl(g, ivs[i]);
        std::printf("  %-11s Bel %.4f  Pl %.4f\n", labels[i], bp.bel, bp.pl);
    }
    for (double a : {0.5, 0.9}) {
        try {
            const Interval bpi = belief_prediction_interval(g, a);
            std::printf("  BPI(%.1f) = [%.3f, %.3f]\n", a, bpi.lo, bpi.hi);
        } catch (const std::domain_error&) {
            std::printf("  BPI(%.1f) unreachable\n", a);
        }
    }
}

int main() {
    const Grfn a{0.0, 1.0, 1.0};
    const Grfn b{1.5, 0.25, 4.0};
    show("a", a);
    show("b", b);
    show("a + b", combine_unnormalized(a, b));
    show("near-probabilistic", Grfn{0.0, 1.0, 1e8});
    show("vacuous", Grfn{0.0, 1.0, 0.0});
}

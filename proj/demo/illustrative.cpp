// One-covariate toy problem: train on 2000 records, print predictions with
// belief prediction intervals along x and the calibration curve.
//
//   demo_illustrative [censor_prob] [seed]

#include <cstdio>
#include <cstdlib>
#include <vector>

#include "evsurv/metrics.hpp"
#include "evsurv/simulate.hpp"
#include "evsurv/trainer.hpp"

using namespace evsurv;

int main(int argc, char** argv) {
    const double censor = argc > 1 ? std::atof(argv[1]) : 0.0;
    const unsigned long seed = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 11;
    const Dataset data = gen_illustrative(2000, censor, seed);
    std::printf("2000 records, censoring %.3f\n", data.censoring_rate());

    const DataSplit ds = split_dataset(data, {0.6, 0.2, 0.2}, 0);
    const TrainResult r = train(ds.train, ds.val, TrainConfig{});
    std::printf("trained %zu epochs, best %zu\n\n", r.history.size(), r.history.best_epoch);

    std::printf("    x   true mean    mu     sigma2       h    BPI(0.5)           BPI(0.9)\n");
    for (double x = -2.0; x <= 2.0001; x += 0.5) {
        const std::vector<double> xv{x};
        const Grfn g = forward(r.params, r.standardizer, xv).grfn;
        const Interval i50 = belief_prediction_interval(g, 0.5), i90 = belief_prediction_interval(g, 0.9);
        std::printf("%5.2f %9.3f %8.3f %9.4f %8.4f  [%6.2f, %6.2f]  [%6.2f, %6.2f]\n", x, illustrative_log_mean(x), g.mu,
                    g.sigma2, g.h, i50.lo, i50.hi, i90.lo, i90.hi);
    }

    const CalibrationCurve c = calibration_curve(r.params, r.standardizer, ds.test, default_alphas(), true);
    std::printf("\nalpha  coverage_bpi  coverage_prob   (test fold, true durations)\n");
    for (std::size_t a = 0; a < c.alphas.size(); ++a)
        std::printf("%4.1f  %12.3f  %13.3f\n", c.alphas[a], c.coverage_bpi[a], c.coverage_prob[a]);
}

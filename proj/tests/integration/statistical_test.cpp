#include "lrmc/diagnostics.hpp"
#include "lrmc/estimator.hpp"
#include "lrmc/experiments.hpp"
#include "lrmc/linalg.hpp"
#include "lrmc/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace lrmc;

namespace {

TrialParams reference() {
    TrialParams p;
    p.dims = {30, 30};
    p.rank = 2;
    p.a = 1.0;
    p.noise = {NoiseKind::gaussian, 1.0};
    p.n = 2000;
    p.lambda_mode = LambdaMode::calibrated;
    return p;
}

} // namespace

TEST(Statistical, CalibrationSelfConsistency) {
    TrialParams p = reference();
    p.C = calibrate(p, 200, 0.95, 11).constant_C;
    const double f = oracle_event_frequency(p, 500, 12);
    EXPECT_GE(f, 0.90);
    EXPECT_LE(f, 1.0);
}

TEST(Statistical, OracleFrequencyExtremes) {
    TrialParams p = reference();
    p.lambda_mode = LambdaMode::explicit_value;
    p.lambda = 0.0;
    EXPECT_EQ(oracle_event_frequency(p, 50, 1), 0.0);
    p.lambda_mode = LambdaMode::calibrated;
    p.C = calibrate(p, 50, 0.95, 2).constant_C * 1e6;
    EXPECT_EQ(oracle_event_frequency(p, 50, 3), 1.0);
}

TEST(Statistical, ConeConditionOnOracleEvents) {
    TrialParams p = reference();
    p.C = calibrate(p, 100, 0.95, 21).constant_C;
    int events = 0, inside = 0;
    for (int i = 0; i < 200; ++i) {
        const TrialRecord r = run_trial(p, derive_seed(22, i));
        if (!r.oracle_event) continue;
        ++events;
        inside += r.cone_event;
        EXPECT_LE(r.spectral_error, r.frobenius_error + 1e-12);
    }
    ASSERT_GT(events, 100);
    EXPECT_GE(static_cast<double>(inside) / events, 0.99);
}

TEST(Statistical, SamplingErrorBoundCoverage) {
    const CoverageResult c = sampling_bound_coverage(reference(), 500, 3.0, 31);
    EXPECT_GE(c.frequency, 0.95);
}

TEST(Statistical, NoiseErrorBoundCoverage) {
    const CoverageResult c = noise_bound_coverage(reference(), 500, 500, 0.99, 3.0, 41);
    EXPECT_GE(c.frequency, 0.95);
}

TEST(Statistical, ErrorLinearInSigma) {
    TrialParams p;
    p.dims = {10, 10};
    p.rank = 2;
    p.a = 0.5;
    p.n = 400000;
    p.lambda_mode = LambdaMode::calibrated;
    const std::vector<double> grid{1, 2, 4, 8};
    p.C = calibrate(at_grid_point(p, SweepAxis::sigma, grid.front()), 200, 0.95, 51).constant_C;
    const SweepResult r = sweep(SweepAxis::sigma, grid, p, 30, 52, 2);
    ASSERT_TRUE(r.fit.has_value());
    EXPECT_NEAR(r.fit->slope, 1.0, 0.1);
}

TEST(Statistical, ZeroTruthGivesZeroEstimateWhenLambdaDominates) {
    TrialParams p;
    p.dims = {10, 10};
    p.rank = 0;
    p.a = 0.0;
    p.noise = {NoiseKind::gaussian, 1.0};
    p.n = 2000;
    p.lambda_mode = LambdaMode::optimal_rule;
    p.C = 3.0;
    const auto pi = uniform_distribution(p.dims);
    int zero = 0;
    for (int i = 0; i < 30; ++i) {
        const std::uint64_t seed = derive_seed(61, i);
        const TrialRecord r = run_trial(p, seed);
        const Dataset d = generate_dataset(pi, GroundTruth::zero(p.dims), p.noise, p.n, seed);
        if (r.lambda >= 2 * spectral_norm(empirical_moment(d))) {
            EXPECT_EQ(r.spectral_error, 0.0);
            ++zero;
        }
    }
    EXPECT_GT(zero, 0);
}

TEST(Statistical, NoiselessErrorShrinksWithSampleSize) {
    // Without noise and with a vanishing penalty the estimate tends to A0 o (frequency / pi).
    TrialParams p;
    p.dims = {10, 10};
    p.rank = 2;
    p.noise = {NoiseKind::gaussian, 0.0};
    p.lambda_mode = LambdaMode::explicit_value;
    p.lambda = 1e-12;
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t n : {1000u, 10000u, 100000u, 1000000u}) {
        p.n = n;
        double median = 0.0;
        std::vector<double> errs;
        for (int i = 0; i < 5; ++i) errs.push_back(run_trial(p, derive_seed(71, i)).spectral_error);
        median = empirical_quantile(errs, 0.5);
        EXPECT_LT(median, previous);
        previous = median;
    }
    EXPECT_LT(previous, 0.05);
}

TEST(Statistical, TrialDeterminism) {
    const TrialParams p = reference();
    EXPECT_EQ(trials_csv({run_trial(p, 9)}), trials_csv({run_trial(p, 9)}));
}

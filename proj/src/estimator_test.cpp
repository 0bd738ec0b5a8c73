#include "lrmc/errors.hpp"
#include "lrmc/estimator.hpp"
#include "lrmc/linalg.hpp"
#include "lrmc/model.hpp"
#include "oracles.hpp"

#include "json.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

using namespace lrmc;

namespace {

Matrix random_matrix(int m1, int m2, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Matrix A(m1, m2);
    for (Eigen::Index i = 0; i < A.size(); ++i) A(i) = normal(rng);
    return A;
}

Dataset make_dataset(Dimensions dims, std::vector<Observation> entries) {
    Dataset d;
    d.dims = dims;
    d.entries = std::move(entries);
    return d;
}

// Distance of -G / lambda from the subdifferential of the nuclear norm at A.
double kkt_residual(const Matrix& A, const Matrix& G, double lambda) {
    const Matrix target = -G / lambda;
    const int k = numerical_rank(A, 1e-8);
    if (k == 0) return std::max(0.0, spectral_norm(target) - 1.0);
    const ThinSvd svd = thin_svd(A);
    const Matrix U = svd.U.leftCols(k), V = svd.V.leftCols(k);
    const Matrix PU = Matrix::Identity(A.rows(), A.rows()) - U * U.transpose();
    const Matrix PV = Matrix::Identity(A.cols(), A.cols()) - V * V.transpose();
    const Matrix W = PU * target * PV;
    const double on_support = (target - W - U * V.transpose()).norm();
    return std::max(on_support, spectral_norm(W) - 1.0);
}

SolverConfig tight() {
    SolverConfig c;
    c.max_iterations = 200000;
    c.relative_objective_tolerance = 1e-13;
    return c;
}

} // namespace

TEST(EmpiricalMoment, Examples) {
    const Matrix S1 = empirical_moment(make_dataset({2, 2}, {{0, 0, 2.0}}));
    Matrix expected = Matrix::Zero(2, 2);
    expected(0, 0) = 2.0;
    EXPECT_TRUE(S1 == expected);

    EXPECT_TRUE(empirical_moment(make_dataset({2, 3}, {{0, 1, 0.0}, {1, 2, 0.0}})).isZero(0));

    const Matrix S2 = empirical_moment(make_dataset({2, 2}, {{1, 1, 1.0}, {1, 1, 3.0}}));
    EXPECT_DOUBLE_EQ(S2(1, 1), 2.0);
    EXPECT_EQ(S2.sum(), 2.0);
}

TEST(Objective, Examples) {
    const auto pi = uniform_distribution({2, 2});
    const Matrix S = Matrix::Zero(2, 2);
    EXPECT_EQ(objective(pi, S, Matrix::Zero(2, 2), 1.0), 0.0);
    EXPECT_NEAR(objective(pi, S, Matrix::Identity(2, 2), 1.0), 2.5, 1e-15);

    std::mt19937_64 rng(2);
    const auto pi3 = uniform_distribution({3, 3});
    const Matrix A = random_matrix(3, 3, rng), S3 = random_matrix(3, 3, rng);
    double direct = 0.0;
    for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) direct += A(j, k) * A(j, k) / 9.0 - 2.0 * S3(j, k) * A(j, k);
    EXPECT_NEAR(objective(pi3, S3, A, 0.0), direct, 1e-13);
    EXPECT_THROW(objective(pi3, Matrix::Zero(2, 3), Matrix::Zero(2, 3), 1.0), ValidationError);
}

TEST(SmoothGradient, ZeroAtOriginWithZeroResponses) {
    const auto pi = uniform_distribution({3, 2});
    const Dataset d = make_dataset({3, 2}, {{0, 0, 0.0}, {2, 1, 0.0}});
    EXPECT_TRUE(smooth_gradient(pi, d, Matrix::Zero(3, 2)).isZero(0));
}

TEST(SmoothGradient, MatchesCentralDifferences) {
    std::mt19937_64 rng(3);
    const auto pi = power_law_distribution({4, 4}, 1.0, 0.5, 0.1);
    for (int rep = 0; rep < 10; ++rep) {
        const Matrix A = random_matrix(4, 4, rng), S = random_matrix(4, 4, rng), D = random_matrix(4, 4, rng);
        const double h = 1e-5;
        const double fd = (objective(pi, S, A + h * D, 0.0) - objective(pi, S, A - h * D, 0.0)) / (2 * h);
        const double an = trace_inner(smooth_gradient(pi, S, A), D);
        EXPECT_NEAR(fd, an, 1e-6 * std::max(1.0, std::abs(an)));
    }
}

TEST(SmoothGradient, UniformSubstitution) {
    std::mt19937_64 rng(4);
    const auto pi = uniform_distribution({5, 3});
    const Matrix A = random_matrix(5, 3, rng), S = random_matrix(5, 3, rng);
    EXPECT_LT((smooth_gradient(pi, S, A) - ((2.0 / 15) * A - 2 * S)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SvtProx, Examples) {
    Matrix D = Matrix::Zero(2, 2);
    D(0, 0) = 3;
    D(1, 1) = 1;
    Matrix expected = Matrix::Zero(2, 2);
    expected(0, 0) = 1;
    EXPECT_LT((svt_prox(D, 2.0) - expected).norm(), 1e-14);

    std::mt19937_64 rng(5);
    const Matrix A = random_matrix(4, 3, rng);
    EXPECT_LT((svt_prox(A, 0.0) - A).norm(), 1e-12);
    EXPECT_THROW(svt_prox(A, -1.0), ValidationError);
}

TEST(SvtProx, MatchesFactorizedMinimizer) {
    std::mt19937_64 rng(6);
    for (int rep = 0; rep < 5; ++rep) {
        const Matrix A = random_matrix(3, 3, rng);
        const Matrix oracle = lrmc::testing::prox_by_factorization(A, 0.5, rep + 1);
        EXPECT_LT((svt_prox(A, 0.5) - oracle).norm(), 1e-6);
    }
}

TEST(SvtProx, RankDoesNotIncrease) {
    std::mt19937_64 rng(7);
    const Matrix A = random_matrix(6, 2, rng) * random_matrix(2, 5, rng);
    for (double tau : {0.0, 0.1, 1.0, 10.0}) EXPECT_LE(numerical_rank(svt_prox(A, tau)), 2);
}

TEST(ResolveLambda, OptimalRuleValue) {
    LambdaInputs in;
    in.sigma = 1.0;
    in.a = 0.5;
    in.C = 2.0;
    in.dims = {100, 100};
    in.n = 10000;
    const auto spec = resolve_lambda(LambdaMode::optimal_rule, in);
    EXPECT_NEAR(spec.lambda, 4.6036e-3, 5e-8);
    EXPECT_FALSE(spec.below_sample_threshold);
    EXPECT_EQ(spec.constant_C, 2.0);
}

TEST(ResolveLambda, SampleThresholdWarning) {
    LambdaInputs in;
    in.dims = {30, 30};
    EXPECT_NEAR(optimal_rule_sample_threshold(in.dims, 2.0), 30 * std::pow(std::log(60.0), 2), 1e-9);
    in.n = 500;
    EXPECT_TRUE(resolve_lambda(LambdaMode::optimal_rule, in).below_sample_threshold);
    EXPECT_TRUE(resolve_lambda(LambdaMode::calibrated, in).below_sample_threshold);
    in.n = 503;
    EXPECT_FALSE(resolve_lambda(LambdaMode::optimal_rule, in).below_sample_threshold);
}

TEST(ResolveLambda, TheoremRuleBranches) {
    LambdaInputs in;
    in.sigma = 1.0;
    in.a = 1.0;
    in.dims = {20, 40};
    in.n = 1000;
    in.C = 1.5;
    const double logm = std::log(60.0);
    for (double t : {0.1, 1.0, 1e3, 1e5}) {
        in.t = t;
        const double first = std::sqrt((t + logm) / (20.0 * 1000));
        const double second = (t + logm) * std::pow(std::log(20.0), 0.5) / 1000;
        EXPECT_NEAR(lambda_theorem_rule(in), 1.5 * std::max(first, second), 1e-14 * (1 + second));
    }
    in.t = 1e5;
    const double big = lambda_theorem_rule(in);
    in.t = 2e5;
    EXPECT_NEAR(lambda_theorem_rule(in) / big, (2e5 + logm) / (1e5 + logm), 1e-12);
}

TEST(ResolveLambda, SymmetricInSigmaAndA) {
    LambdaInputs in;
    in.dims = {10, 10};
    in.n = 300;
    in.sigma = 2;
    in.a = 1;
    const double x = lambda_optimal_rule(in), y = lambda_theorem_rule(in);
    std::swap(in.sigma, in.a);
    EXPECT_EQ(lambda_optimal_rule(in), x);
    EXPECT_EQ(lambda_theorem_rule(in), y);
}

TEST(ResolveLambda, RejectsBadInputs) {
    LambdaInputs in;
    in.sigma = 0;
    in.a = 0;
    EXPECT_THROW(resolve_lambda(LambdaMode::optimal_rule, in), ValidationError);
    in.a = 1;
    in.C = 0;
    EXPECT_THROW(resolve_lambda(LambdaMode::theorem_rule, in), ValidationError);
    in.C = 1;
    EXPECT_THROW(resolve_lambda(LambdaMode::explicit_value, in, 0.0), ValidationError);
    EXPECT_EQ(resolve_lambda(LambdaMode::explicit_value, in, 0.25).lambda, 0.25);
    EXPECT_EQ(lambda_mode_from_string("theorem"), LambdaMode::theorem_rule);
    EXPECT_THROW(lambda_mode_from_string("bogus"), ValidationError);
}

TEST(SolverConfig, Validation) {
    SolverConfig c;
    EXPECT_NO_THROW(c.validate());
    c.max_iterations = 0;
    EXPECT_THROW(c.validate(), ValidationError);
    c.max_iterations = 1;
    c.relative_objective_tolerance = 0;
    EXPECT_THROW(c.validate(), ValidationError);
    c.relative_objective_tolerance = 1e-6;
    c.step_size = -1.0;
    EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Fit, ZeroWhenLambdaDominatesMoment) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto pi = power_law_distribution({6, 5}, 1, 0.5, 0.1);
        const Dataset d = generate_dataset(pi, random_ground_truth({6, 5}, 2, 1.0, seed), {NoiseKind::gaussian, 0.5},
                                           60, seed);
        const double lambda = 2 * spectral_norm(empirical_moment(d));
        const FitResult r = fit(pi, d, lambda * 1.0001);
        EXPECT_TRUE(r.converged);
        EXPECT_TRUE(r.estimate.isZero(0));
        EXPECT_LE(kkt_residual(r.estimate, smooth_gradient(pi, d, r.estimate), lambda * 1.0001), 0.0);
        // Just below the threshold zero is no longer optimal.
        EXPECT_GT(kkt_residual(Matrix::Zero(6, 5), smooth_gradient(pi, d, Matrix::Zero(6, 5)), lambda * 0.99), 0.0);
    }
}

TEST(Fit, UniformMatchesClosedForm) {
    const Dimensions dims{20, 30};
    const auto pi = uniform_distribution(dims);
    const Dataset d = generate_dataset(pi, random_ground_truth(dims, 2, 1.0, 3), {NoiseKind::gaussian, 0.5}, 400, 4);
    LambdaInputs in;
    in.sigma = 0.5;
    in.dims = dims;
    in.n = 400;
    const double lambda = lambda_optimal_rule(in);
    const FitResult r = fit(pi, d, lambda, tight());
    const Matrix cf = closed_form_uniform(d, dims, lambda);
    EXPECT_TRUE(r.converged);
    EXPECT_LT((r.estimate - cf).norm(), 1e-6 * std::max(1.0, cf.norm()));
    const Matrix S = empirical_moment(d);
    EXPECT_LE(objective(pi, S, cf, lambda), objective(pi, S, r.estimate, lambda) + 1e-9);
}

TEST(ClosedForm, Examples) {
    const Dimensions dims{3, 4};
    const Dataset zero = make_dataset(dims, {{0, 0, 0.0}, {2, 3, 0.0}});
    EXPECT_TRUE(closed_form_uniform(zero, dims, 0.3).isZero(0));
    const Dataset d = make_dataset(dims, {{0, 0, 1.0}, {2, 3, -2.0}, {1, 1, 0.5}});
    EXPECT_LT((closed_form_uniform(d, dims, 0.0) - 12.0 * empirical_moment(d)).norm(), 1e-12);
    EXPECT_THROW(closed_form_uniform(d, {4, 3}, 0.1), ValidationError);
}

TEST(Fit, MatchesConvexSolverInstances) {
    std::ifstream f(std::string(LRMC_TEST_DATA_DIR) + "/cvx_oracle.json");
    ASSERT_TRUE(f.good());
    const auto doc = nlohmann::json::parse(f);
    ASSERT_GE(doc["instances"].size(), 12u);
    for (const auto& inst : doc["instances"]) {
        const int m1 = inst["m1"], m2 = inst["m2"];
        Matrix P(m1, m2), X(m1, m2);
        for (int j = 0; j < m1; ++j)
            for (int k = 0; k < m2; ++k) {
                P(j, k) = inst["pi"][j][k];
                X(j, k) = inst["solution"][j][k];
            }
        Dataset d;
        d.dims = {m1, m2};
        for (const auto& e : inst["entries"]) d.entries.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<double>()});
        const SamplingDistribution pi(P);
        const double lambda = inst["lambda"];
        const FitResult r = fit(pi, d, lambda, tight());
        EXPECT_TRUE(r.converged);
        EXPECT_LT((r.estimate - X).cwiseAbs().maxCoeff(), 1e-5) << m1 << "x" << m2 << " lambda " << lambda;
        EXPECT_NEAR(objective(pi, d, r.estimate, lambda), inst["objective"].get<double>(), 1e-7);
    }
}

TEST(Fit, MatchesFactorizedOracleOnPowerLaw) {
    const Dimensions dims{5, 4};
    const auto pi = power_law_distribution(dims, 1.0, 1.0, 0.05);
    const Dataset d = generate_dataset(pi, random_ground_truth(dims, 1, 1.0, 2), {NoiseKind::gaussian, 0.3}, 40, 8);
    const Matrix S = empirical_moment(d);
    const double lambda = 0.2 * spectral_norm(S);
    const FitResult r = fit(pi, d, lambda, tight());
    const Matrix oracle = lrmc::testing::factorized_minimizer(pi.pmf(), S, lambda);
    EXPECT_LT((r.estimate - oracle).norm(), 1e-5 * std::max(1.0, oracle.norm()));
}

TEST(Fit, KktResidualAtSolution) {
    std::mt19937_64 rng(9);
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const Dimensions dims{8, 10};
        const auto pi = power_law_distribution(dims, 0.8, 0.4, 0.1);
        const Dataset d = generate_dataset(pi, random_ground_truth(dims, 2, 1.0, seed), {NoiseKind::gaussian, 0.2},
                                           300, seed + 10);
        const double lambda = 0.3 * 2 * spectral_norm(empirical_moment(d));
        const FitResult r = fit(pi, d, lambda, tight());
        ASSERT_TRUE(r.converged);
        EXPECT_LT(kkt_residual(r.estimate, smooth_gradient(pi, d, r.estimate), lambda), 1e-5);
    }
}

TEST(Fit, MonotoneTraceWithoutAcceleration) {
    const Dimensions dims{10, 12};
    const auto pi = power_law_distribution(dims, 1.0, 0.5, 0.05);
    const Dataset d = generate_dataset(pi, random_ground_truth(dims, 3, 1.0, 1), {NoiseKind::laplace, 0.5}, 500, 2);
    SolverConfig c = tight();
    c.acceleration = false;
    const double lambda = 0.2 * spectral_norm(empirical_moment(d));
    const FitResult r = fit(pi, d, lambda, c);
    ASSERT_GE(r.objective_trace.size(), 3u);
    EXPECT_EQ(r.objective_trace.front(), 0.0);
    for (std::size_t i = 1; i < r.objective_trace.size(); ++i) {
        EXPECT_LE(r.objective_trace[i], r.objective_trace[i - 1] + 1e-12);
    }
}

TEST(Fit, NonConvergenceReportsBestIterate) {
    const Dimensions dims{10, 12};
    const auto pi = power_law_distribution(dims, 1.0, 0.5, 0.05);
    const Dataset d = generate_dataset(pi, random_ground_truth(dims, 3, 1.0, 1), {NoiseKind::laplace, 0.5}, 500, 2);
    SolverConfig c;
    c.max_iterations = 2;
    const double lambda = 0.2 * spectral_norm(empirical_moment(d));
    const FitResult r = fit(pi, d, lambda, c);
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.iterations_used, 2);
    EXPECT_LT(objective(pi, d, r.estimate, lambda), 0.0);
}

TEST(Fit, InvariantToObservationOrder) {
    const Dimensions dims{7, 9};
    const auto pi = power_law_distribution(dims, 0.5, 0.5, 0.1);
    Dataset d = generate_dataset(pi, random_ground_truth(dims, 2, 1.0, 5), {NoiseKind::gaussian, 0.5}, 200, 6);
    const FitResult a = fit(pi, d, 0.05, tight());
    std::mt19937_64 rng(1);
    std::shuffle(d.entries.begin(), d.entries.end(), rng);
    const FitResult b = fit(pi, d, 0.05, tight());
    EXPECT_LT((a.estimate - b.estimate).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Fit, ShrinkageMonotoneInLambda) {
    const Dimensions dims{8, 8};
    const auto pi = power_law_distribution(dims, 1.0, 0.0, 0.1);
    const Dataset d = generate_dataset(pi, random_ground_truth(dims, 2, 1.0, 7), {NoiseKind::gaussian, 0.5}, 300, 8);
    double previous = std::numeric_limits<double>::infinity();
    for (double lambda : {0.005, 0.01, 0.02, 0.05, 0.1, 0.2}) {
        const double norm = nuclear_norm(fit(pi, d, lambda, tight()).estimate);
        EXPECT_LE(norm, previous + 1e-9) << lambda;
        previous = norm;
    }
}

TEST(Fit, RejectsBadInputs) {
    const auto pi = uniform_distribution({2, 2});
    const Dataset d = make_dataset({2, 2}, {{0, 0, 1.0}});
    EXPECT_THROW(fit(pi, d, 0.0), ValidationError);
    EXPECT_THROW(fit(uniform_distribution({3, 2}), d, 0.1), ValidationError);
    EXPECT_THROW(fit(pi, make_dataset({2, 2}, {}), 0.1), ValidationError);
}

TEST(EmpiricalQuantile, OrderStatistic) {
    const std::vector<double> v{5, 1, 4, 2, 3};
    EXPECT_EQ(empirical_quantile(v, 0.2), 1);
    EXPECT_EQ(empirical_quantile(v, 0.5), 3);
    EXPECT_EQ(empirical_quantile(v, 0.95), 5);
    EXPECT_EQ(empirical_quantile(v, 1.0), 5);
    EXPECT_THROW(empirical_quantile({}, 0.5), ValidationError);
    EXPECT_THROW(empirical_quantile(v, 0.0), ValidationError);
}

TEST(Calibration, NoiselessZeroTruthGivesZero) {
    const auto pi = uniform_distribution({6, 6});
    const auto r = calibrate_lambda_constant(pi, GroundTruth::zero({6, 6}), {NoiseKind::gaussian, 0.0}, 100, 30, 0.9, 1);
    EXPECT_EQ(r.constant_C, 0.0);
    EXPECT_EQ(r.raw_quantile, 0.0);
    EXPECT_EQ(r.samples.size(), 30u);
}

TEST(Calibration, LinearInNoiseLevel) {
    const auto pi = power_law_distribution({8, 6}, 1, 0, 0.1);
    const auto zero = GroundTruth::zero({8, 6});
    const auto r1 = calibrate_lambda_constant(pi, zero, {NoiseKind::gaussian, 1.0}, 200, 40, 0.9, 3);
    const auto r2 = calibrate_lambda_constant(pi, zero, {NoiseKind::gaussian, 2.0}, 200, 40, 0.9, 3);
    EXPECT_NEAR(r2.raw_quantile, 2 * r1.raw_quantile, 1e-12 * r1.raw_quantile);
    for (std::size_t i = 0; i < r1.samples.size(); ++i) EXPECT_NEAR(r2.samples[i], 2 * r1.samples[i], 1e-12);
    EXPECT_NEAR(r1.constant_C * r1.unit_lambda, r1.raw_quantile, 1e-14);
}

TEST(Calibration, RejectsBadArguments) {
    const auto pi = uniform_distribution({4, 4});
    const auto zero = GroundTruth::zero({4, 4});
    EXPECT_THROW(calibrate_lambda_constant(pi, zero, {}, 50, 29, 0.9, 1), ValidationError);
    EXPECT_THROW(calibrate_lambda_constant(pi, zero, {}, 50, 30, 0.5, 1), ValidationError);
    EXPECT_THROW(calibrate_lambda_constant(pi, zero, {}, 50, 30, 1.0, 1), ValidationError);
    CalibrationOptions o;
    o.formula = LambdaMode::explicit_value;
    EXPECT_THROW(calibrate_lambda_constant(pi, zero, {}, 50, 30, 0.9, 1, o), ValidationError);
}

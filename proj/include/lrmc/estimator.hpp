#pragma once

#include "lrmc/model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lrmc {

// ---------------------------------------------------------------------------
// Regularization parameter
// ---------------------------------------------------------------------------

enum class LambdaMode {
    explicit_value, ///< lambda given directly
    theorem_rule,   ///< C (sigma v a) max{ sqrt((t+log m)/((m1^m2) n)), (t+log m) log^{1/beta}(m1^m2) / n }
    optimal_rule,   ///< C (sigma v a) sqrt(log m / ((m1^m2) n))
    calibrated,     ///< optimal_rule with C from calibrate_lambda_constant
};

const char* to_string(LambdaMode mode);
LambdaMode lambda_mode_from_string(const std::string& name);

/// Inputs of the rate formulas.
struct LambdaInputs {
    double sigma = 1.0;
    double a = 1.0;
    Dimensions dims;
    std::size_t n = 1;
    double t = 1.0;
    double C = 1.0;
    double beta = 2.0; ///< psi-exponent of the noise; +inf for bounded noise
};

struct RegularizationSpec {
    LambdaMode mode = LambdaMode::explicit_value;
    double lambda = 0.0;     ///< resolved value
    double constant_C = 1.0;
    double confidence_t = 1.0;
    /// Set when optimal_rule is used with n <= M log^{1+2/beta}(m).
    bool below_sample_threshold = false;
};

/// The sample size above which the optimal rule applies: M log^{1+2/beta}(m).
double optimal_rule_sample_threshold(Dimensions dims, double beta);

double lambda_theorem_rule(const LambdaInputs& in);
double lambda_optimal_rule(const LambdaInputs& in);

/// Evaluates the formula of `mode` (calibrated resolves like optimal_rule).
/// For explicit_value, `explicit_lambda` must be > 0.
RegularizationSpec resolve_lambda(LambdaMode mode, const LambdaInputs& in, double explicit_lambda = 0.0);

// ---------------------------------------------------------------------------
// Objective pieces
// ---------------------------------------------------------------------------

/// S = (1/n) sum_i Y_i X_i, accumulated entrywise.
Matrix empirical_moment(const Dataset& data);

/// ||A||^2_{L2(Pi)} - 2 <S, A> + lambda ||A||_1.
double objective(const SamplingDistribution& pi, const Matrix& moment, const Matrix& A, double lambda);
double objective(const SamplingDistribution& pi, const Dataset& data, const Matrix& A, double lambda);

/// Gradient of the smooth part: 2 pi o A - 2 S. Its Lipschitz constant is 2 max pi.
Matrix smooth_gradient(const SamplingDistribution& pi, const Matrix& moment, const Matrix& A);
Matrix smooth_gradient(const SamplingDistribution& pi, const Dataset& data, const Matrix& A);

/// argmin_Z (1/2)||Z - A||_2^2 + threshold ||Z||_1: soft-thresholds the singular values.
Matrix svt_prox(const Matrix& A, double threshold);

// ---------------------------------------------------------------------------
// Solver
// ---------------------------------------------------------------------------

struct SolverConfig {
    int max_iterations = 5000;
    double relative_objective_tolerance = 1e-10;
    std::optional<double> step_size; ///< empty = 1 / (2 max pi)
    bool acceleration = true;

    void validate() const;
};

struct FitResult {
    Matrix estimate;
    std::vector<double> objective_trace; ///< objective after each iteration, starting with A = 0
    int iterations_used = 0;
    bool converged = false;
    double resolved_lambda = 0.0;
    int rank = 0; ///< singular values kept by the last prox step
};

/// Minimizes objective() by proximal gradient from A = 0.
///
/// Step: A+ = svt_prox(A - eta * smooth_gradient(A), eta * lambda). The
/// gradient carries the factor 2 of the quadratic, so the prox threshold is
/// eta * lambda: the optimality condition is 0 in 2 pi o A - 2 S + lambda dA||_1.
/// With acceleration, FISTA momentum is used and reset whenever the objective
/// increases.
FitResult fit(const SamplingDistribution& pi, const Dataset& data, double lambda,
              const SolverConfig& config = {});

/// Exact minimizer for uniform Pi: svt_prox(m1 m2 S, lambda m1 m2 / 2).
Matrix closed_form_uniform(const Dataset& data, Dimensions dims, double lambda);

// ---------------------------------------------------------------------------
// Calibration of C
// ---------------------------------------------------------------------------

struct CalibrationResult {
    double constant_C = 0.0;    ///< raw_quantile / unit_lambda (0 if there is no stochastic error)
    double raw_quantile = 0.0;  ///< requested quantile of 3 ||M1 + M2||
    double unit_lambda = 0.0;   ///< formula value with C = 1
    int trials = 0;
    double quantile = 0.0;
    LambdaMode formula = LambdaMode::optimal_rule;
    std::vector<double> samples; ///< 3 ||M1 + M2|| per trial, in trial order
};

struct CalibrationOptions {
    LambdaMode formula = LambdaMode::optimal_rule; ///< theorem_rule or optimal_rule
    double t = 1.0;                                ///< used by theorem_rule
};

/// Monte Carlo calibration of C: the `quantile` of 3 ||M1 + M2||_inf over
/// `trials` synthetic datasets divided by the formula value at C = 1.
CalibrationResult calibrate_lambda_constant(const SamplingDistribution& pi, const GroundTruth& truth,
                                            const NoiseModel& noise, std::size_t n, int trials,
                                            double quantile, std::uint64_t seed,
                                            const CalibrationOptions& options = {});

/// Order-statistic quantile: the ceil(q * N)-th smallest value.
double empirical_quantile(std::vector<double> values, double q);

} // namespace lrmc

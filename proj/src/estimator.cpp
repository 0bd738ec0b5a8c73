#include "lrmc/estimator.hpp"

#include "lrmc/diagnostics.hpp"
#include "lrmc/errors.hpp"
#include "lrmc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lrmc {

const char* to_string(LambdaMode mode) {
    switch (mode) {
    case LambdaMode::explicit_value: return "explicit";
    case LambdaMode::theorem_rule: return "theorem";
    case LambdaMode::optimal_rule: return "optimal";
    case LambdaMode::calibrated: return "calibrated";
    }
    return "explicit";
}

LambdaMode lambda_mode_from_string(const std::string& name) {
    if (name == "explicit") return LambdaMode::explicit_value;
    if (name == "theorem" || name == "theorem_rule") return LambdaMode::theorem_rule;
    if (name == "optimal" || name == "optimal_rule") return LambdaMode::optimal_rule;
    if (name == "calibrated") return LambdaMode::calibrated;
    throw ValidationError("unknown lambda mode '" + name + "' (expected explicit|theorem|optimal|calibrated)");
}

namespace {

void check_rule_inputs(const LambdaInputs& in) {
    if (!(in.sigma >= 0.0) || !(in.a >= 0.0) || !(std::max(in.sigma, in.a) > 0.0)) {
        throw ValidationError("resolve_lambda: sigma v a must be > 0 (and both nonnegative)");
    }
    if (in.n < 1) throw ValidationError("resolve_lambda: n must be >= 1");
    if (!(in.C > 0.0)) throw ValidationError("resolve_lambda: C must be > 0");
    if (!(in.beta >= 1.0)) throw ValidationError("resolve_lambda: beta must be >= 1");
}

} // namespace

double optimal_rule_sample_threshold(Dimensions dims, double beta) {
    const double exponent = 1.0 + 2.0 / beta; // 1 for bounded noise (beta = inf)
    return dims.max_dim() * std::pow(std::log(static_cast<double>(dims.m())), exponent);
}

double lambda_theorem_rule(const LambdaInputs& in) {
    check_rule_inputs(in);
    if (!(in.t > 0.0)) throw ValidationError("resolve_lambda: t must be > 0");
    const double n = static_cast<double>(in.n);
    const double tl = in.t + std::log(static_cast<double>(in.dims.m()));
    const double mn = in.dims.min_dim();
    const double first = std::sqrt(tl / (mn * n));
    // log^{1/beta}(m1^m2) -> 1 as beta -> inf; log 1 = 0 makes the branch vanish for m1^m2 = 1.
    const double log_factor = std::isinf(in.beta) ? (mn > 1 ? 1.0 : 0.0) : std::pow(std::log(mn), 1.0 / in.beta);
    const double second = tl * log_factor / n;
    return in.C * std::max(in.sigma, in.a) * std::max(first, second);
}

double lambda_optimal_rule(const LambdaInputs& in) {
    check_rule_inputs(in);
    const double n = static_cast<double>(in.n);
    return in.C * std::max(in.sigma, in.a) *
           std::sqrt(std::log(static_cast<double>(in.dims.m())) / (in.dims.min_dim() * n));
}

RegularizationSpec resolve_lambda(LambdaMode mode, const LambdaInputs& in, double explicit_lambda) {
    RegularizationSpec spec;
    spec.mode = mode;
    spec.constant_C = in.C;
    spec.confidence_t = in.t;
    switch (mode) {
    case LambdaMode::explicit_value:
        if (!(explicit_lambda > 0.0)) throw ValidationError("resolve_lambda: explicit lambda must be > 0");
        spec.lambda = explicit_lambda;
        break;
    case LambdaMode::theorem_rule:
        spec.lambda = lambda_theorem_rule(in);
        break;
    case LambdaMode::optimal_rule:
    case LambdaMode::calibrated:
        spec.lambda = lambda_optimal_rule(in);
        spec.below_sample_threshold =
            static_cast<double>(in.n) <= optimal_rule_sample_threshold(in.dims, in.beta);
        break;
    }
    if (!(spec.lambda > 0.0)) throw ValidationError("RegularizationSpec: resolved lambda must be > 0");
    return spec;
}

// ---------------------------------------------------------------------------

Matrix empirical_moment(const Dataset& data) {
    Matrix S = Matrix::Zero(data.dims.m1, data.dims.m2);
    if (data.entries.empty()) return S;
    for (const auto& e : data.entries) S(e.row, e.col) += e.value;
    return S / static_cast<double>(data.n());
}

namespace {

void check_shape(const SamplingDistribution& pi, const Matrix& A, const char* what) {
    if (A.rows() != pi.dims().m1 || A.cols() != pi.dims().m2) {
        throw ValidationError(std::string(what) + ": matrix shape does not match the sampling distribution");
    }
}

struct ProxOutput {
    Matrix Z;
    double nuclear = 0.0;
    int rank = 0;
};

ProxOutput svt_with_norm(const Matrix& A, double threshold) {
    ProxOutput out;
    if (A.size() == 0) {
        out.Z = A;
        return out;
    }
    const ThinSvd svd = thin_svd(A);
    const Vector s = (svd.s.array() - threshold).cwiseMax(0.0);
    int k = 0;
    while (k < s.size() && s(k) > 0.0) ++k;
    out.rank = k;
    out.nuclear = s.head(k).sum();
    if (k == 0) {
        out.Z = Matrix::Zero(A.rows(), A.cols());
    } else {
        out.Z = svd.U.leftCols(k) * s.head(k).asDiagonal() * svd.V.leftCols(k).transpose();
    }
    return out;
}

double smooth_value(const SamplingDistribution& pi, const Matrix& S, const Matrix& A) {
    return (pi.pmf().array() * A.array().square()).sum() - 2.0 * trace_inner(S, A);
}

} // namespace

double objective(const SamplingDistribution& pi, const Matrix& moment, const Matrix& A, double lambda) {
    check_shape(pi, A, "objective");
    check_shape(pi, moment, "objective");
    return smooth_value(pi, moment, A) + lambda * nuclear_norm(A);
}

double objective(const SamplingDistribution& pi, const Dataset& data, const Matrix& A, double lambda) {
    if (!(data.dims == pi.dims())) throw ValidationError("objective: dataset dims differ from sampling distribution");
    return objective(pi, empirical_moment(data), A, lambda);
}

Matrix smooth_gradient(const SamplingDistribution& pi, const Matrix& moment, const Matrix& A) {
    check_shape(pi, A, "smooth_gradient");
    check_shape(pi, moment, "smooth_gradient");
    return 2.0 * (pi.pmf().array() * A.array()).matrix() - 2.0 * moment;
}

Matrix smooth_gradient(const SamplingDistribution& pi, const Dataset& data, const Matrix& A) {
    if (!(data.dims == pi.dims())) throw ValidationError("smooth_gradient: dataset dims differ from sampling distribution");
    return smooth_gradient(pi, empirical_moment(data), A);
}

Matrix svt_prox(const Matrix& A, double threshold) {
    if (!(threshold >= 0.0)) throw ValidationError("svt_prox: threshold must be >= 0");
    if (threshold == 0.0) return A;
    return svt_with_norm(A, threshold).Z;
}

// ---------------------------------------------------------------------------

void SolverConfig::validate() const {
    if (max_iterations < 1) throw ValidationError("SolverConfig: max_iterations must be >= 1");
    if (!(relative_objective_tolerance > 0.0)) throw ValidationError("SolverConfig: tolerance must be > 0");
    if (step_size && !(*step_size > 0.0)) throw ValidationError("SolverConfig: step_size must be > 0");
}

FitResult fit(const SamplingDistribution& pi, const Dataset& data, double lambda, const SolverConfig& config) {
    config.validate();
    if (!(data.dims == pi.dims())) throw ValidationError("fit: dataset dims differ from sampling distribution");
    if (!(lambda > 0.0)) throw ValidationError("fit: resolved lambda must be > 0");
    data.validate();

    const Matrix S = empirical_moment(data);
    const double eta = config.step_size.value_or(1.0 / (2.0 * pi.max_prob()));
    const double threshold = eta * lambda;

    auto prox_step = [&](const Matrix& from) {
        const Matrix G = 2.0 * (pi.pmf().array() * from.array()).matrix() - 2.0 * S;
        return svt_with_norm(from - eta * G, threshold);
    };

    FitResult result;
    result.resolved_lambda = lambda;
    Matrix A = Matrix::Zero(pi.dims().m1, pi.dims().m2);
    double F = 0.0;
    result.objective_trace.push_back(F);

    Matrix Y = A;
    double momentum_t = 1.0;
    for (int it = 1; it <= config.max_iterations; ++it) {
        ProxOutput next = prox_step(Y);
        double F_next = smooth_value(pi, S, next.Z) + lambda * next.nuclear;
        if (config.acceleration && F_next > F) {
            // Function-value restart: drop the momentum and take a plain step.
            momentum_t = 1.0;
            next = prox_step(A);
            F_next = smooth_value(pi, S, next.Z) + lambda * next.nuclear;
        }
        result.objective_trace.push_back(F_next);
        result.iterations_used = it;
        result.rank = next.rank;

        const double scale = std::max({std::abs(F), std::abs(F_next), std::numeric_limits<double>::min()});
        const bool small_change = std::abs(F - F_next) <= config.relative_objective_tolerance * scale;

        if (config.acceleration) {
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum_t * momentum_t));
            Y = next.Z + ((momentum_t - 1.0) / t_next) * (next.Z - A);
            momentum_t = t_next;
        } else {
            Y = next.Z;
        }
        // Keep the better iterate if a plain step still failed to descend.
        if (F_next <= F) {
            A = std::move(next.Z);
            F = F_next;
        }
        if (small_change) {
            result.converged = true;
            break;
        }
    }
    result.estimate = std::move(A);
    return result;
}

Matrix closed_form_uniform(const Dataset& data, Dimensions dims, double lambda) {
    if (!(data.dims == dims)) throw ValidationError("closed_form_uniform: dataset dims differ");
    if (!(lambda >= 0.0)) throw ValidationError("closed_form_uniform: lambda must be >= 0");
    const double mm = static_cast<double>(dims.entries());
    return svt_prox(mm * empirical_moment(data), lambda * mm / 2.0);
}

// ---------------------------------------------------------------------------

double empirical_quantile(std::vector<double> values, double q) {
    if (values.empty()) throw ValidationError("empirical_quantile: no values");
    if (!(q > 0.0) || q > 1.0) throw ValidationError("empirical_quantile: q must lie in (0, 1]");
    std::sort(values.begin(), values.end());
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size()) - 1e-12));
    return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

CalibrationResult calibrate_lambda_constant(const SamplingDistribution& pi, const GroundTruth& truth,
                                            const NoiseModel& noise, std::size_t n, int trials,
                                            double quantile, std::uint64_t seed,
                                            const CalibrationOptions& options) {
    if (trials < 30) throw ValidationError("calibrate_lambda_constant: trials must be >= 30");
    if (!(quantile > 0.5) || !(quantile < 1.0)) {
        throw ValidationError("calibrate_lambda_constant: quantile must lie in (0.5, 1)");
    }
    if (options.formula != LambdaMode::theorem_rule && options.formula != LambdaMode::optimal_rule) {
        throw ValidationError("calibrate_lambda_constant: formula must be theorem or optimal");
    }

    CalibrationResult out;
    out.trials = trials;
    out.quantile = quantile;
    out.formula = options.formula;
    out.samples.reserve(trials);
    for (int i = 0; i < trials; ++i) {
        const Dataset d = generate_dataset(pi, truth, noise, n, derive_seed(seed, static_cast<std::uint64_t>(i)));
        const StochasticErrors err = stochastic_errors(pi, d, truth);
        out.samples.push_back(3.0 * spectral_norm(err.M1 + err.M2));
    }
    out.raw_quantile = empirical_quantile(out.samples, quantile);

    if (std::max(noise.sigma, truth.entry_bound) == 0.0) {
        // Noiseless with A0 = 0: M1 = M2 = 0 identically, so no constant is needed.
        out.unit_lambda = 0.0;
        out.constant_C = 0.0;
        return out;
    }
    LambdaInputs in;
    in.sigma = noise.sigma;
    in.a = truth.entry_bound;
    in.dims = pi.dims();
    in.n = n;
    in.t = options.t;
    in.C = 1.0;
    in.beta = noise.psi_exponent();
    out.unit_lambda = options.formula == LambdaMode::theorem_rule ? lambda_theorem_rule(in) : lambda_optimal_rule(in);
    out.constant_C = out.raw_quantile / out.unit_lambda;
    return out;
}

} // namespace lrmc

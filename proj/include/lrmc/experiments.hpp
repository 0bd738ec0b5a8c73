#pragma once

#include "lrmc/estimator.hpp"
#include "lrmc/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lrmc {

/// "uniform" or "powerlaw:row_exponent,col_exponent,floor_ratio".
SamplingDistribution make_distribution(Dimensions dims, const std::string& spec);

/// One synthetic instance family: everything except the per-trial seed.
struct TrialParams {
    Dimensions dims{30, 30};
    int rank = 2;
    double a = 1.0;
    NoiseModel noise;
    std::size_t n = 2000;
    std::string pi = "uniform";
    LambdaMode lambda_mode = LambdaMode::calibrated;
    double lambda = 0.0; ///< used by explicit_value
    double C = 1.0;      ///< used by the rule modes
    double t = 1.0;      ///< used by theorem_rule
    double alpha = 2.0;
    double c0 = 5.0;
    std::uint64_t truth_seed = 1;
    FactorKind factor = FactorKind::rademacher;
    SolverConfig solver;

    void validate() const;
    LambdaInputs lambda_inputs() const;
    RegularizationSpec regularization() const;
    GroundTruth truth() const;
};

struct TrialRecord {
    std::uint64_t seed = 0;
    int point = 0;
    int trial = 0;
    Dimensions dims;
    int rank = 0;
    double a = 0.0;
    double sigma = 0.0;
    std::size_t n = 0;
    double lambda = 0.0;
    double C = 0.0;
    double t = 0.0;
    double spectral_error = 0.0;
    double frobenius_error = 0.0;
    double nuclear_error = 0.0;
    double l2pi_error = 0.0;
    double M1_norm = 0.0;
    double M2_norm = 0.0;
    double M_sum_norm = 0.0;     ///< ||M1 + M2||
    bool oracle_event = false;   ///< lambda >= 3 ||M1 + M2||
    double cone_complement = 0.0; ///< ||P^perp(Delta)||_1
    double cone_support = 0.0;    ///< ||P(Delta)||_1
    bool cone_event = false;     ///< complement <= c0 support + 1e-6
    bool assumption1 = false;    ///< certified exactly (uniform Pi)
    double theorem1_bound = 0.0;
    /// Set only when both the oracle event and the certificate hold.
    std::optional<bool> theorem1_satisfied;
    bool below_sample_threshold = false;
    int iterations = 0;
    bool converged = false;
    double runtime_ms = 0.0;     ///< kept out of the CSV
};

/// generate -> fit -> diagnose for one seed.
TrialRecord run_trial(const TrialParams& params, std::uint64_t seed);

/// Monte Carlo calibration of params.C at the given parameters, for the
/// formula implied by params.lambda_mode (theorem_rule or the optimal rule).
CalibrationResult calibrate(const TrialParams& params, int trials, double quantile, std::uint64_t seed);

enum class SweepAxis { n, M, r, sigma };

const char* to_string(SweepAxis axis);
SweepAxis sweep_axis_from_string(const std::string& name);

/// `base` with the axis set to `value` (M sets a square m x m shape).
TrialParams at_grid_point(const TrialParams& base, SweepAxis axis, double value);

struct SweepPoint {
    double value = 0.0;
    bool valid = true;           ///< false when n <= M log^{1+2/beta}(m) under the optimal rule
    int trials = 0;
    double median = 0.0;         ///< of spectral_error
    double q10 = 0.0, q25 = 0.0, q75 = 0.0, q90 = 0.0;
    double normalized_median = 0.0; ///< median / ((sigma v a) sqrt(m1 m2))
    double fit_x = 0.0;
    double fit_y = 0.0;
    double oracle_frequency = 0.0;
    std::vector<double> spectral_errors; ///< in trial order
};

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
    int points = 0;
};

/// Ordinary least squares of log y on log x. Needs >= 3 points with
/// distinct positive x and positive y.
SlopeFit slope_fit(const std::vector<double>& xs, const std::vector<double>& ys);

/// Fit coordinates: x is n, sqrt(M log m), r or sigma; y is the normalized
/// median, except on the sigma axis where the raw median is used.
struct SweepResult {
    SweepAxis axis = SweepAxis::n;
    std::vector<double> grid;
    TrialParams base;
    int trials_per_point = 0;
    std::uint64_t seed = 0;
    std::vector<SweepPoint> points;
    std::optional<SlopeFit> fit; ///< empty when fewer than 3 valid points
    std::vector<TrialRecord> records; ///< sorted by (point, trial)
};

/// Runs `trials_per_point` trials at every grid value. Trial seeds are
/// derive_seed(derive_seed(seed, point), trial), so output does not depend on `threads`.
SweepResult sweep(SweepAxis axis, const std::vector<double>& grid, const TrialParams& base, int trials_per_point,
                  std::uint64_t seed, int threads = 1);

/// Fraction of `trials` datasets on which lambda >= 3 ||M1 + M2||.
double oracle_event_frequency(const TrialParams& params, int trials, std::uint64_t seed);

/// Coverage of a deviation bound by the observed norms.
struct CoverageResult {
    double constant = 0.0;  ///< multiplier of the bound shape (calibrated or explicit)
    double bound = 0.0;     ///< constant * shape
    int trials = 0;
    int covered = 0;
    double frequency = 0.0;
    std::vector<double> norms;
};

/// ||M1|| against C * noise_error_shape(t), with C the `quantile` of
/// ||M1|| / shape over `calibration_trials` datasets drawn from independent seeds.
CoverageResult noise_bound_coverage(const TrialParams& params, int calibration_trials, int trials, double quantile,
                                    double t, std::uint64_t seed);

/// ||M2|| against the explicit sampling_error_bound(t).
CoverageResult sampling_bound_coverage(const TrialParams& params, int trials, double t, std::uint64_t seed);

/// Trial table: a comment line naming the columns, a header row, then one row per record.
void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records);
std::string trials_csv(const std::vector<TrialRecord>& records);

} // namespace lrmc

#pragma once

#include "lrmc/diagnostics.hpp"
#include "lrmc/estimator.hpp"
#include "lrmc/experiments.hpp"
#include "lrmc/lowerbound.hpp"

#include "json.hpp"

namespace lrmc::report {

using json = nlohmann::ordered_json;

json matrix_to_json(const Matrix& A);

json to_json(const SolverConfig& config);
/// Reads the solver keys (tolerance, max_iterations, acceleration, step_size) present in `j`.
void apply_solver_keys(const json& j, SolverConfig& config);

/// Keys: m1 m2 rank a sigma noise n pi lambda_mode lambda C t alpha c0
/// truth_seed factor tolerance max_iterations acceleration. Missing keys keep
/// their defaults; unknown keys are rejected.
TrialParams params_from_json(const json& j);
json to_json(const TrialParams& params);

json to_json(const DiagnosticsReport& report);
json to_json(const CalibrationResult& result, bool with_samples = true);
json to_json(const SlopeFit& fit);
json to_json(const SweepResult& result);
json to_json(const PackingSet& packing, const PackingReport& report);

/// Compact seed/RNG block embedded in every artifact.
json rng_block(std::uint64_t seed);

} // namespace lrmc::report

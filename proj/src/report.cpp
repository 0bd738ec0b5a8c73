#include "lrmc/report.hpp"

#include "lrmc/errors.hpp"
#include "lrmc/rng.hpp"

#include <set>
#include <string>

namespace lrmc::report {

json matrix_to_json(const Matrix& A) {
    json rows = json::array();
    for (Eigen::Index j = 0; j < A.rows(); ++j) {
        json row = json::array();
        for (Eigen::Index k = 0; k < A.cols(); ++k) row.push_back(A(j, k));
        rows.push_back(std::move(row));
    }
    return rows;
}

json rng_block(std::uint64_t seed) {
    return {{"generator", std::string(kRngName)}, {"seed", seed}};
}

json to_json(const SolverConfig& c) {
    json j = {{"max_iterations", c.max_iterations},
              {"tolerance", c.relative_objective_tolerance},
              {"acceleration", c.acceleration}};
    j["step_size"] = c.step_size ? json(*c.step_size) : json("auto");
    return j;
}

namespace {

template <class T>
T get_as(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("config key '") + key + "' has the wrong type");
    }
}

} // namespace

void apply_solver_keys(const json& j, SolverConfig& c) {
    if (j.contains("max_iterations")) c.max_iterations = get_as<int>(j, "max_iterations");
    if (j.contains("tolerance")) c.relative_objective_tolerance = get_as<double>(j, "tolerance");
    if (j.contains("acceleration")) c.acceleration = get_as<bool>(j, "acceleration");
    if (j.contains("step_size")) {
        if (j["step_size"].is_string()) {
            if (j["step_size"].get<std::string>() != "auto") throw ValidationError("config key 'step_size' must be a number or \"auto\"");
            c.step_size.reset();
        } else {
            c.step_size = get_as<double>(j, "step_size");
        }
    }
    c.validate();
}

TrialParams params_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    static const std::set<std::string> known = {
        "m1", "m2", "rank", "a", "sigma", "noise", "n", "pi", "lambda_mode", "lambda", "C", "t", "alpha", "c0",
        "truth_seed", "factor", "tolerance", "max_iterations", "acceleration", "step_size"};
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) throw ValidationError("config: unknown key '" + key + "'");
    }
    TrialParams p;
    const int m1 = j.contains("m1") ? get_as<int>(j, "m1") : p.dims.m1;
    const int m2 = j.contains("m2") ? get_as<int>(j, "m2") : p.dims.m2;
    p.dims = Dimensions(m1, m2);
    if (j.contains("rank")) p.rank = get_as<int>(j, "rank");
    if (j.contains("a")) p.a = get_as<double>(j, "a");
    if (j.contains("sigma")) p.noise.sigma = get_as<double>(j, "sigma");
    if (j.contains("noise")) p.noise.kind = noise_kind_from_string(get_as<std::string>(j, "noise"));
    if (j.contains("n")) {
        const long long n = get_as<long long>(j, "n");
        if (n < 1) throw ValidationError("config: n must be >= 1");
        p.n = static_cast<std::size_t>(n);
    }
    if (j.contains("pi")) p.pi = get_as<std::string>(j, "pi");
    if (j.contains("lambda_mode")) p.lambda_mode = lambda_mode_from_string(get_as<std::string>(j, "lambda_mode"));
    if (j.contains("lambda")) p.lambda = get_as<double>(j, "lambda");
    if (j.contains("C")) p.C = get_as<double>(j, "C");
    if (j.contains("t")) p.t = get_as<double>(j, "t");
    if (j.contains("alpha")) p.alpha = get_as<double>(j, "alpha");
    if (j.contains("c0")) p.c0 = get_as<double>(j, "c0");
    if (j.contains("truth_seed")) p.truth_seed = get_as<std::uint64_t>(j, "truth_seed");
    if (j.contains("factor")) {
        const auto f = get_as<std::string>(j, "factor");
        if (f == "gaussian") p.factor = FactorKind::gaussian;
        else if (f == "rademacher") p.factor = FactorKind::rademacher;
        else throw ValidationError("config: factor must be gaussian or rademacher");
    }
    apply_solver_keys(j, p.solver);
    p.validate();
    make_distribution(p.dims, p.pi);
    return p;
}

json to_json(const TrialParams& p) {
    json j = {{"m1", p.dims.m1},
              {"m2", p.dims.m2},
              {"rank", p.rank},
              {"a", p.a},
              {"sigma", p.noise.sigma},
              {"noise", to_string(p.noise.kind)},
              {"n", p.n},
              {"pi", p.pi},
              {"lambda_mode", to_string(p.lambda_mode)},
              {"lambda", p.lambda},
              {"C", p.C},
              {"t", p.t},
              {"alpha", p.alpha},
              {"c0", p.c0},
              {"truth_seed", p.truth_seed},
              {"factor", p.factor == FactorKind::gaussian ? "gaussian" : "rademacher"}};
    const json s = to_json(p.solver);
    for (const auto& [k, v] : s.items()) j[k] = v;
    return j;
}

json to_json(const DiagnosticsReport& r) {
    json j;
    j["dims"] = {{"m1", r.dims.m1}, {"m2", r.dims.m2}};
    j["kappa1"] = r.kappa1;
    j["kappa1_prime"] = r.kappa1_prime;
    j["kappa1_search"] = {{"kappa", r.kappa1_search.kappa}, {"kappa_prime", r.kappa1_search.kappa_prime}};
    j["assumption3_constants"] = {{"c1", r.c1}, {"c1_prime", r.c1_prime}};
    j["rho_lower"] = r.rho.value;
    j["rho_exact"] = r.rho_exact;
    j["rho_search"] = {{"restarts", r.rho.restarts}, {"starts", r.rho.starts}};
    j["rho_witness"] = {{"A", matrix_to_json(r.rho.A)}, {"B", matrix_to_json(r.rho.B)}};
    const auto& c = r.assumption1;
    j["assumption1_certificate"] = {{"status", to_string(c.status)}, {"rho", c.rho},     {"threshold", c.threshold},
                                    {"c0", c.c0},                    {"alpha", c.alpha}, {"r", c.r},
                                    {"rho_exact", c.rho_exact}};
    if (r.mu_c0) {
        j["mu_c0_lower"] = r.mu_c0->value;
        j["mu_c0_samples"] = r.mu_c0->samples;
    } else {
        j["mu_c0_lower"] = nullptr;
    }
    j["mu_cap"] = r.mu_cap;
    j["M1_norm"] = r.M1_norm ? json(*r.M1_norm) : json(nullptr);
    j["M2_norm"] = r.M2_norm ? json(*r.M2_norm) : json(nullptr);
    j["lambda"] = r.lambda ? json(*r.lambda) : json(nullptr);
    j["oracle_event"] = r.oracle_event ? json(*r.oracle_event) : json(nullptr);
    j["bernstein_bounds"] = {{"t", r.bernstein.t},
                             {"noise_shape", r.bernstein.noise_shape},
                             {"sampling_bound", r.bernstein.sampling_bound},
                             {"sigma_X_squared", r.bernstein.sigma_X_squared}};
    j["rng"] = rng_block(r.seed);
    j["search_restarts"] = r.search_restarts;
    return j;
}

json to_json(const CalibrationResult& r, bool with_samples) {
    json j = {{"constant_C", r.constant_C}, {"raw_quantile", r.raw_quantile}, {"unit_lambda", r.unit_lambda},
              {"trials", r.trials},         {"quantile", r.quantile},         {"formula", to_string(r.formula)}};
    if (with_samples) j["samples"] = r.samples;
    return j;
}

json to_json(const SlopeFit& f) {
    return {{"slope", f.slope}, {"intercept", f.intercept}, {"stderr", f.stderr_slope}, {"points", f.points}};
}

json to_json(const SweepResult& r) {
    json j;
    j["axis"] = to_string(r.axis);
    j["grid"] = r.grid;
    j["trials_per_point"] = r.trials_per_point;
    j["base"] = to_json(r.base);
    j["rng"] = rng_block(r.seed);
    json pts = json::array();
    for (const auto& p : r.points) {
        pts.push_back({{"value", p.value},
                       {"valid", p.valid},
                       {"trials", p.trials},
                       {"median", p.median},
                       {"q10", p.q10},
                       {"q25", p.q25},
                       {"q75", p.q75},
                       {"q90", p.q90},
                       {"normalized_median", p.normalized_median},
                       {"fit_x", p.fit_x},
                       {"fit_y", p.fit_y},
                       {"oracle_frequency", p.oracle_frequency},
                       {"spectral_errors", p.spectral_errors}});
    }
    j["points"] = std::move(pts);
    j["fit"] = r.fit ? to_json(*r.fit) : json(nullptr);
    return j;
}

namespace {

json check_json(const ConditionCheck& c) {
    return {{"pass", c.pass}, {"observed", c.observed}, {"bound", c.bound}, {"margin", c.margin}};
}

} // namespace

json to_json(const PackingSet& p, const PackingReport& r) {
    json j;
    j["dims"] = {{"m1", p.dims.m1}, {"m2", p.dims.m2}};
    j["rank"] = p.rank_budget;
    j["sigma"] = p.sigma;
    j["a"] = p.a;
    j["n"] = p.n;
    j["gamma"] = p.gamma;
    j["delta"] = p.delta;
    j["tiles"] = p.tiles;
    j["cardinality"] = p.cardinality();
    j["target_cardinality"] = p.target_cardinality;
    j["min_hamming"] = p.min_hamming;
    j["hamming_floor"] = p.hamming_floor;
    j["attempts"] = p.attempts;
    j["rng"] = rng_block(p.seed);
    j["conditions"] = {{"all_pass", r.all_pass()},
                       {"trivial", r.trivial},
                       {"cardinality_ok", r.cardinality_ok},
                       {"class_ok", r.class_ok},
                       {"max_rank", r.max_rank},
                       {"max_entry", r.max_entry},
                       {"alpha", r.alpha},
                       {"c1", r.c1},
                       {"c1_prime", r.c1_prime},
                       {"kl", check_json(r.kl)},
                       {"frobenius_lower", check_json(r.frobenius_lower)},
                       {"frobenius_upper", check_json(r.frobenius_upper)},
                       {"spectral", check_json(r.spectral)},
                       {"spectral_literal", check_json(r.spectral_literal)},
                       {"l2pi", check_json(r.l2pi)}};
    return j;
}

} // namespace lrmc::report

#include "lrmc/experiments.hpp"

#include "lrmc/diagnostics.hpp"
#include "lrmc/errors.hpp"
#include "lrmc/io.hpp"
#include "lrmc/rng.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>
#include <thread>

namespace lrmc {

SamplingDistribution make_distribution(Dimensions dims, const std::string& spec) {
    if (spec == "uniform") return uniform_distribution(dims);
    const std::string prefix = "powerlaw:";
    if (spec.rfind(prefix, 0) == 0) {
        std::istringstream in(spec.substr(prefix.size()));
        double re = 0.0, ce = 0.0, floor = 0.0;
        char c1 = 0, c2 = 0;
        if (!(in >> re >> c1 >> ce >> c2 >> floor) || c1 != ',' || c2 != ',' || !(in >> std::ws).eof()) {
            throw ValidationError("distribution spec: expected powerlaw:row_exponent,col_exponent,floor_ratio, got '" +
                                  spec + "'");
        }
        return power_law_distribution(dims, re, ce, floor);
    }
    throw ValidationError("distribution spec: expected 'uniform' or 'powerlaw:...', got '" + spec + "'");
}

void TrialParams::validate() const {
    if (rank < 0 || rank > dims.min_dim()) throw ValidationError("params: rank must lie in [0, min(m1, m2)]");
    if (!(a >= 0.0)) throw ValidationError("params: a must be >= 0");
    if (!(noise.sigma >= 0.0)) throw ValidationError("params: sigma must be >= 0");
    if (n < 1) throw ValidationError("params: n must be >= 1");
    if (!(alpha > 1.0)) throw ValidationError("params: alpha must be > 1");
    if (!(c0 >= 0.0)) throw ValidationError("params: c0 must be >= 0");
    if (lambda_mode == LambdaMode::explicit_value && !(lambda >= 0.0)) {
        throw ValidationError("params: explicit lambda must be >= 0");
    }
    if (lambda_mode != LambdaMode::explicit_value && !(C >= 0.0)) throw ValidationError("params: C must be >= 0");
    solver.validate();
}

LambdaInputs TrialParams::lambda_inputs() const {
    LambdaInputs in;
    in.sigma = noise.sigma;
    in.a = a;
    in.dims = dims;
    in.n = n;
    in.t = t;
    in.C = C;
    in.beta = noise.psi_exponent();
    return in;
}

RegularizationSpec TrialParams::regularization() const {
    if (lambda_mode == LambdaMode::explicit_value) {
        // Zero is allowed here so that harness code can probe the unpenalized limit.
        RegularizationSpec spec;
        spec.mode = lambda_mode;
        spec.lambda = lambda;
        return spec;
    }
    LambdaInputs in = lambda_inputs();
    const double C_value = in.C;
    in.C = 1.0;
    RegularizationSpec spec = resolve_lambda(lambda_mode, in);
    spec.lambda *= C_value;
    spec.constant_C = C_value;
    return spec;
}

GroundTruth TrialParams::truth() const {
    return random_ground_truth(dims, rank, a, truth_seed, factor);
}

TrialRecord run_trial(const TrialParams& params, std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    params.validate();
    const SamplingDistribution pi = make_distribution(params.dims, params.pi);
    const GroundTruth truth = params.truth();
    const RegularizationSpec reg = params.regularization();
    const Dataset data = generate_dataset(pi, truth, params.noise, params.n, seed);

    TrialRecord rec;
    rec.seed = seed;
    rec.dims = params.dims;
    rec.rank = truth.rank();
    rec.a = params.a;
    rec.sigma = params.noise.sigma;
    rec.n = params.n;
    rec.lambda = reg.lambda;
    rec.C = reg.constant_C;
    rec.t = params.t;
    rec.below_sample_threshold = reg.below_sample_threshold;

    const FitResult fr = fit(pi, data, reg.lambda, params.solver);
    rec.iterations = fr.iterations_used;
    rec.converged = fr.converged;
    const Matrix A0 = truth.matrix();
    const Matrix delta = fr.estimate - A0;
    rec.spectral_error = spectral_norm(delta);
    rec.frobenius_error = delta.norm();
    rec.nuclear_error = nuclear_norm(delta);
    rec.l2pi_error = l2pi_norm(pi, delta);

    const StochasticErrors err = stochastic_errors(pi, data, truth);
    rec.M1_norm = spectral_norm(err.M1);
    rec.M2_norm = spectral_norm(err.M2);
    rec.M_sum_norm = spectral_norm(err.M1 + err.M2);
    rec.oracle_event = reg.lambda >= 3.0 * rec.M_sum_norm;

    const ProjectedParts parts = projector_decompose(truth, delta);
    rec.cone_complement = nuclear_norm(parts.complement);
    rec.cone_support = nuclear_norm(parts.on_support);
    rec.cone_event = rec.cone_complement <= params.c0 * rec.cone_support + 1e-6;

    const double k1 = kappa1(pi).kappa;
    const int r = std::max(1, truth.rank());
    rec.assumption1 = pi.is_uniform() && check_assumption_incoherence(k1, 0.0, params.c0, params.alpha, r, true).holds();
    rec.theorem1_bound = theorem1_bound(reg.lambda, k1, params.alpha);
    if (rec.oracle_event && rec.assumption1) rec.theorem1_satisfied = rec.spectral_error <= rec.theorem1_bound;

    rec.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

CalibrationResult calibrate(const TrialParams& params, int trials, double quantile, std::uint64_t seed) {
    params.validate();
    if (params.lambda_mode == LambdaMode::explicit_value) {
        throw ValidationError("calibrate: lambda_mode must be a rule (theorem, optimal or calibrated)");
    }
    CalibrationOptions opt;
    opt.formula = params.lambda_mode == LambdaMode::theorem_rule ? LambdaMode::theorem_rule : LambdaMode::optimal_rule;
    opt.t = params.t;
    return calibrate_lambda_constant(make_distribution(params.dims, params.pi), params.truth(), params.noise,
                                     params.n, trials, quantile, seed, opt);
}

const char* to_string(SweepAxis axis) {
    switch (axis) {
    case SweepAxis::n: return "n";
    case SweepAxis::M: return "M";
    case SweepAxis::r: return "r";
    case SweepAxis::sigma: return "sigma";
    }
    return "n";
}

SweepAxis sweep_axis_from_string(const std::string& name) {
    if (name == "n") return SweepAxis::n;
    if (name == "M") return SweepAxis::M;
    if (name == "r") return SweepAxis::r;
    if (name == "sigma") return SweepAxis::sigma;
    throw ValidationError("sweep axis must be one of n, M, r, sigma; got '" + name + "'");
}

TrialParams at_grid_point(const TrialParams& base, SweepAxis axis, double value) {
    TrialParams p = base;
    auto as_int = [&](const char* what) {
        if (value < 1.0 || value != std::floor(value)) {
            throw ValidationError(std::string("sweep grid: ") + what + " values must be positive integers");
        }
        return value;
    };
    switch (axis) {
    case SweepAxis::n: p.n = static_cast<std::size_t>(as_int("n")); break;
    case SweepAxis::M: {
        const int m = static_cast<int>(as_int("M"));
        p.dims = Dimensions(m, m);
        break;
    }
    case SweepAxis::r: p.rank = static_cast<int>(as_int("r")); break;
    case SweepAxis::sigma:
        if (!(value > 0.0)) throw ValidationError("sweep grid: sigma values must be positive");
        p.noise.sigma = value;
        break;
    }
    return p;
}

SlopeFit slope_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw ValidationError("slope_fit: xs and ys must have equal length");
    if (xs.size() < 3) throw ValidationError("slope_fit: needs at least 3 points");
    const std::size_t k = xs.size();
    std::vector<double> lx(k), ly(k);
    for (std::size_t i = 0; i < k; ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) throw ValidationError("slope_fit: values must be positive");
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < k; ++i) mx += lx[i], my += ly[i];
    mx /= k;
    my /= k;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx == 0.0) throw ValidationError("slope_fit: xs must be distinct");
    SlopeFit f;
    f.points = static_cast<int>(k);
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double res = ly[i] - f.intercept - f.slope * lx[i];
        ssr += res * res;
    }
    f.stderr_slope = k > 2 ? std::sqrt(ssr / static_cast<double>(k - 2) / sxx) : 0.0;
    return f;
}

namespace {

double fit_coordinate(SweepAxis axis, const TrialParams& p) {
    switch (axis) {
    case SweepAxis::n: return static_cast<double>(p.n);
    case SweepAxis::M: return std::sqrt(p.dims.max_dim() * std::log(static_cast<double>(p.dims.m())));
    case SweepAxis::r: return p.rank;
    case SweepAxis::sigma: return p.noise.sigma;
    }
    return 0.0;
}

bool grid_point_valid(const TrialParams& p) {
    if (p.lambda_mode != LambdaMode::optimal_rule && p.lambda_mode != LambdaMode::calibrated) return true;
    return static_cast<double>(p.n) > optimal_rule_sample_threshold(p.dims, p.noise.psi_exponent());
}

} // namespace

SweepResult sweep(SweepAxis axis, const std::vector<double>& grid, const TrialParams& base, int trials_per_point,
                  std::uint64_t seed, int threads) {
    if (grid.empty()) throw ValidationError("sweep: grid must not be empty");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) throw ValidationError("sweep: grid must be strictly increasing");
    }
    if (trials_per_point < 30) throw ValidationError("sweep: trials_per_point must be >= 30");
    if (threads < 1) throw ValidationError("sweep: threads must be >= 1");

    SweepResult res;
    res.axis = axis;
    res.grid = grid;
    res.base = base;
    res.trials_per_point = trials_per_point;
    res.seed = seed;

    std::vector<TrialParams> params;
    for (double v : grid) {
        params.push_back(at_grid_point(base, axis, v));
        params.back().validate();
    }

    const std::size_t total = grid.size() * static_cast<std::size_t>(trials_per_point);
    res.records.resize(total);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto worker = [&]() {
        for (std::size_t task = next++; task < total && !failed; task = next++) {
            const int point = static_cast<int>(task / trials_per_point);
            const int trial = static_cast<int>(task % trials_per_point);
            try {
                const std::uint64_t s = derive_seed(derive_seed(seed, point), trial);
                TrialRecord rec = run_trial(params[point], s);
                rec.point = point;
                rec.trial = trial;
                res.records[task] = std::move(rec);
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<double> xs, ys;
    for (std::size_t p = 0; p < grid.size(); ++p) {
        SweepPoint pt;
        pt.value = grid[p];
        pt.valid = grid_point_valid(params[p]);
        pt.trials = trials_per_point;
        int oracle = 0;
        for (int t = 0; t < trials_per_point; ++t) {
            const TrialRecord& rec = res.records[p * trials_per_point + t];
            pt.spectral_errors.push_back(rec.spectral_error);
            oracle += rec.oracle_event;
        }
        pt.oracle_frequency = static_cast<double>(oracle) / trials_per_point;
        pt.median = empirical_quantile(pt.spectral_errors, 0.5);
        pt.q10 = empirical_quantile(pt.spectral_errors, 0.1);
        pt.q25 = empirical_quantile(pt.spectral_errors, 0.25);
        pt.q75 = empirical_quantile(pt.spectral_errors, 0.75);
        pt.q90 = empirical_quantile(pt.spectral_errors, 0.9);
        const TrialParams& q = params[p];
        const double scale = std::max(q.noise.sigma, q.a) * std::sqrt(static_cast<double>(q.dims.entries()));
        pt.normalized_median = scale > 0.0 ? pt.median / scale : 0.0;
        pt.fit_x = fit_coordinate(axis, q);
        pt.fit_y = axis == SweepAxis::sigma ? pt.median : pt.normalized_median;
        if (pt.valid && pt.fit_y > 0.0) {
            xs.push_back(pt.fit_x);
            ys.push_back(pt.fit_y);
        }
        res.points.push_back(std::move(pt));
    }
    if (xs.size() >= 3) res.fit = slope_fit(xs, ys);
    return res;
}

double oracle_event_frequency(const TrialParams& params, int trials, std::uint64_t seed) {
    if (trials < 1) throw ValidationError("oracle_event_frequency: trials must be >= 1");
    params.validate();
    const SamplingDistribution pi = make_distribution(params.dims, params.pi);
    const GroundTruth truth = params.truth();
    const double lambda = params.regularization().lambda;
    int hits = 0;
    for (int i = 0; i < trials; ++i) {
        const Dataset d = generate_dataset(pi, truth, params.noise, params.n, derive_seed(seed, i));
        const StochasticErrors err = stochastic_errors(pi, d, truth);
        hits += lambda >= 3.0 * spectral_norm(err.M1 + err.M2);
    }
    return static_cast<double>(hits) / trials;
}

namespace {

template <class NormFn>
std::vector<double> norms_over(const TrialParams& params, int trials, std::uint64_t seed, NormFn norm) {
    const SamplingDistribution pi = make_distribution(params.dims, params.pi);
    const GroundTruth truth = params.truth();
    std::vector<double> out;
    out.reserve(trials);
    for (int i = 0; i < trials; ++i) {
        const Dataset d = generate_dataset(pi, truth, params.noise, params.n, derive_seed(seed, i));
        out.push_back(norm(stochastic_errors(pi, d, truth)));
    }
    return out;
}

void tally(CoverageResult& c) {
    c.trials = static_cast<int>(c.norms.size());
    c.covered = static_cast<int>(std::count_if(c.norms.begin(), c.norms.end(), [&](double v) { return v <= c.bound; }));
    c.frequency = c.trials > 0 ? static_cast<double>(c.covered) / c.trials : 0.0;
}

} // namespace

CoverageResult noise_bound_coverage(const TrialParams& params, int calibration_trials, int trials, double quantile,
                                    double t, std::uint64_t seed) {
    params.validate();
    if (calibration_trials < 30 || trials < 1) throw ValidationError("noise_bound_coverage: need >= 30 calibration trials");
    if (!(params.noise.sigma > 0.0)) throw ValidationError("noise_bound_coverage: sigma must be positive");
    const double shape = noise_error_shape(params.dims, static_cast<double>(params.n), params.noise.sigma,
                                           params.noise.psi_exponent(), t);
    auto m1 = [](const StochasticErrors& e) { return spectral_norm(e.M1); };
    std::vector<double> calib = norms_over(params, calibration_trials, derive_seed(seed, 0), m1);
    for (double& v : calib) v /= shape;
    CoverageResult c;
    c.constant = empirical_quantile(calib, quantile);
    c.bound = c.constant * shape;
    c.norms = norms_over(params, trials, derive_seed(seed, 1), m1);
    tally(c);
    return c;
}

CoverageResult sampling_bound_coverage(const TrialParams& params, int trials, double t, std::uint64_t seed) {
    params.validate();
    if (trials < 1) throw ValidationError("sampling_bound_coverage: trials must be >= 1");
    const SamplingDistribution pi = make_distribution(params.dims, params.pi);
    CoverageResult c;
    c.constant = 1.0;
    c.bound = sampling_error_bound(params.dims, static_cast<double>(params.n), pi.c1_prime(), params.a, t);
    c.norms = norms_over(params, trials, seed, [](const StochasticErrors& e) { return spectral_norm(e.M2); });
    tally(c);
    return c;
}

void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
    static const char* header =
        "point,trial,seed,m1,m2,rank,a,sigma,n,lambda,C,t,spectral_error,frobenius_error,nuclear_error,l2pi_error,"
        "M1_norm,M2_norm,M_sum_norm,oracle_event,cone_complement,cone_support,cone_event,assumption1,theorem1_bound,"
        "theorem1_satisfied,below_sample_threshold,iterations,converged";
    out << "# columns: " << header << "\n" << header << "\n";
    using io::format_double;
    for (const auto& r : records) {
        out << r.point << ',' << r.trial << ',' << r.seed << ',' << r.dims.m1 << ',' << r.dims.m2 << ',' << r.rank
            << ',' << format_double(r.a) << ',' << format_double(r.sigma) << ',' << r.n << ','
            << format_double(r.lambda) << ',' << format_double(r.C) << ',' << format_double(r.t) << ','
            << format_double(r.spectral_error) << ',' << format_double(r.frobenius_error) << ','
            << format_double(r.nuclear_error) << ',' << format_double(r.l2pi_error) << ','
            << format_double(r.M1_norm) << ',' << format_double(r.M2_norm) << ',' << format_double(r.M_sum_norm)
            << ',' << r.oracle_event << ',' << format_double(r.cone_complement) << ','
            << format_double(r.cone_support) << ',' << r.cone_event << ',' << r.assumption1 << ','
            << format_double(r.theorem1_bound) << ','
            << (r.theorem1_satisfied ? (*r.theorem1_satisfied ? "1" : "0") : "") << ','
            << r.below_sample_threshold << ',' << r.iterations << ',' << r.converged << '\n';
    }
}

std::string trials_csv(const std::vector<TrialRecord>& records) {
    std::ostringstream s;
    write_trials_csv(s, records);
    return s.str();
}

} // namespace lrmc

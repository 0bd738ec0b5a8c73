// Command-line front end: generate, fit, diagnose, sweep, lowerbound, calibrate.

#include "lrmc/diagnostics.hpp"
#include "lrmc/errors.hpp"
#include "lrmc/estimator.hpp"
#include "lrmc/experiments.hpp"
#include "lrmc/io.hpp"
#include "lrmc/lowerbound.hpp"
#include "lrmc/model.hpp"
#include "lrmc/report.hpp"
#include "lrmc/rng.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using lrmc::report::json;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitNoConvergence = 2;

void write_json(const std::string& path, const json& j) { lrmc::io::save_text(path, j.dump(2) + "\n"); }

json read_json(const std::string& path) {
    const std::string text = lrmc::io::load_text(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw lrmc::ParseError("'" + path + "' is not valid JSON: " + e.what());
    }
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw lrmc::ParseError("cannot create directory '" + dir + "': " + ec.message());
}

lrmc::Dimensions dims_from(const std::vector<int>& v) {
    if (v.size() != 2) throw lrmc::ValidationError("--dims takes two integers m1 m2");
    return lrmc::Dimensions(v[0], v[1]);
}

lrmc::FactorKind factor_from(const std::string& s) {
    if (s == "gaussian") return lrmc::FactorKind::gaussian;
    if (s == "rademacher") return lrmc::FactorKind::rademacher;
    throw lrmc::ValidationError("--factor must be gaussian or rademacher");
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
    std::vector<int> dims;
    int rank = 2;
    double sigma = 1.0;
    double a = 1.0;
    long long n = 1000;
    std::string pi = "uniform";
    std::string noise = "gaussian";
    std::string factor = "gaussian";
    std::uint64_t seed = 0;
    std::string out;
};

int run_generate(const GenerateArgs& g) {
    const lrmc::Dimensions dims = dims_from(g.dims);
    if (g.n < 1) throw lrmc::ValidationError("--n must be >= 1");
    const lrmc::SamplingDistribution pi = lrmc::make_distribution(dims, g.pi);
    const lrmc::GroundTruth truth =
        lrmc::random_ground_truth(dims, g.rank, g.a, lrmc::derive_seed(g.seed, 0), factor_from(g.factor));
    lrmc::NoiseModel noise{lrmc::noise_kind_from_string(g.noise), g.sigma};
    if (!(g.sigma >= 0.0)) throw lrmc::ValidationError("--sigma must be >= 0");
    const lrmc::Dataset data =
        lrmc::generate_dataset(pi, truth, noise, static_cast<std::size_t>(g.n), lrmc::derive_seed(g.seed, 1));

    ensure_dir(g.out);
    lrmc::io::save_observations((fs::path(g.out) / "observations.txt").string(), data);
    lrmc::io::save_distribution((fs::path(g.out) / "pi.txt").string(), pi);
    lrmc::io::save_matrix_csv((fs::path(g.out) / "truth.csv").string(), truth.matrix());
    json manifest;
    manifest["command"] = "generate";
    manifest["config"] = {{"m1", dims.m1},   {"m2", dims.m2},        {"rank", g.rank},
                          {"sigma", g.sigma}, {"a", g.a},             {"n", g.n},
                          {"pi", g.pi},       {"noise", noise.label()}, {"factor", g.factor}};
    manifest["rng"] = lrmc::report::rng_block(g.seed);
    manifest["truth_rank"] = truth.rank();
    manifest["files"] = {{"observations", "observations.txt"}, {"pi", "pi.txt"}, {"truth", "truth.csv"}};
    write_json((fs::path(g.out) / "manifest.json").string(), manifest);
    return 0;
}

// ---------------------------------------------------------------------------

struct FitArgs {
    std::string data;
    std::string pi;
    std::string config;
    std::string lambda_mode;
    std::optional<double> lambda;
    std::optional<double> C;
    std::optional<double> t;
    std::optional<double> sigma;
    std::optional<double> a;
    std::string noise;
    std::optional<int> max_iterations;
    std::optional<double> tolerance;
    bool no_acceleration = false;
    std::uint64_t seed = 0;
    std::string out;
};

int run_fit(const FitArgs& f) {
    json cfg = f.config.empty() ? json::object() : read_json(f.config);
    if (!cfg.is_object()) throw lrmc::ValidationError("fit config must be a JSON object");
    for (const auto& [key, value] : cfg.items()) {
        static const std::set<std::string> known = {"lambda_mode", "lambda",   "C",     "t",     "tolerance",
                                                    "max_iterations", "acceleration", "step_size", "sigma", "a",
                                                    "noise"};
        if (!known.count(key)) throw lrmc::ValidationError("fit config: unknown key '" + key + "'");
    }
    if (!f.lambda_mode.empty()) cfg["lambda_mode"] = f.lambda_mode;
    if (f.lambda) cfg["lambda"] = *f.lambda;
    if (f.C) cfg["C"] = *f.C;
    if (f.t) cfg["t"] = *f.t;
    if (f.sigma) cfg["sigma"] = *f.sigma;
    if (f.a) cfg["a"] = *f.a;
    if (!f.noise.empty()) cfg["noise"] = f.noise;
    if (f.max_iterations) cfg["max_iterations"] = *f.max_iterations;
    if (f.tolerance) cfg["tolerance"] = *f.tolerance;
    if (f.no_acceleration) cfg["acceleration"] = false;
    if (!cfg.contains("lambda_mode")) throw lrmc::ValidationError("fit: --lambda-mode is required");

    const lrmc::Dataset data = lrmc::io::load_observations(f.data);
    const lrmc::SamplingDistribution pi = lrmc::io::load_distribution(f.pi);
    if (!(data.dims == pi.dims())) throw lrmc::ValidationError("fit: observation dims differ from sampling distribution dims");

    lrmc::SolverConfig solver;
    lrmc::report::apply_solver_keys(cfg, solver);
    const lrmc::LambdaMode mode = lrmc::lambda_mode_from_string(cfg["lambda_mode"].get<std::string>());
    lrmc::RegularizationSpec reg;
    if (mode == lrmc::LambdaMode::explicit_value) {
        if (!cfg.contains("lambda")) throw lrmc::ValidationError("fit: explicit mode requires --lambda");
        reg = lrmc::resolve_lambda(mode, {}, cfg["lambda"].get<double>());
    } else {
        if (!cfg.contains("sigma") || !cfg.contains("a")) {
            throw lrmc::ValidationError("fit: rule modes require --sigma and --a");
        }
        if (mode == lrmc::LambdaMode::calibrated && !cfg.contains("C")) {
            throw lrmc::ValidationError("fit: calibrated mode requires --C (see the calibrate command)");
        }
        lrmc::LambdaInputs in;
        in.sigma = cfg["sigma"].get<double>();
        in.a = cfg["a"].get<double>();
        in.dims = data.dims;
        in.n = data.n();
        in.t = cfg.value("t", 1.0);
        in.C = cfg.value("C", 1.0);
        const lrmc::NoiseModel noise{lrmc::noise_kind_from_string(cfg.value("noise", std::string("gaussian"))), in.sigma};
        in.beta = noise.psi_exponent();
        reg = lrmc::resolve_lambda(mode, in);
    }

    const lrmc::FitResult res = lrmc::fit(pi, data, reg.lambda, solver);
    lrmc::io::save_matrix_csv(f.out, res.estimate);

    json side;
    side["command"] = "fit";
    json resolved = cfg;
    const json solver_json = lrmc::report::to_json(solver);
    for (const auto& [k, v] : solver_json.items()) resolved[k] = v;
    side["config"] = resolved;
    side["inputs"] = {{"data", f.data}, {"pi", f.pi}};
    side["rng"] = lrmc::report::rng_block(f.seed);
    side["lambda"] = reg.lambda;
    side["lambda_mode"] = lrmc::to_string(reg.mode);
    side["below_sample_threshold"] = reg.below_sample_threshold;
    side["warning"] = reg.below_sample_threshold
                          ? json("n <= M log^{1+2/beta}(m): the optimal-rule sample size condition fails")
                          : json(nullptr);
    side["iterations"] = res.iterations_used;
    side["converged"] = res.converged;
    side["objective"] = res.objective_trace.back();
    side["rank"] = res.rank;
    write_json(f.out + ".json", side);
    if (!res.converged) {
        std::cerr << "warning: solver did not converge within " << solver.max_iterations << " iterations\n";
        return kExitNoConvergence;
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct DiagnoseArgs {
    std::string pi;
    std::string truth;
    std::string data;
    std::optional<double> lambda;
    lrmc::DiagnosticsOptions opt;
    std::string out;
};

int run_diagnose(const DiagnoseArgs& d) {
    const lrmc::SamplingDistribution pi = lrmc::io::load_distribution(d.pi);
    std::optional<lrmc::GroundTruth> truth;
    std::optional<lrmc::Dataset> data;
    if (!d.truth.empty()) truth = lrmc::GroundTruth::from_matrix(lrmc::io::load_matrix_csv(d.truth));
    if (!d.data.empty()) data = lrmc::io::load_observations(d.data);
    if (data && !truth) throw lrmc::ValidationError("diagnose: --data needs --truth to recover the noise");
    lrmc::DiagnosticsOptions opt = d.opt;
    opt.lambda = d.lambda;
    const lrmc::DiagnosticsReport rep = lrmc::diagnose(pi, truth ? &*truth : nullptr, data ? &*data : nullptr, opt);

    json out;
    out["command"] = "diagnose";
    out["config"] = {{"pi", d.pi},           {"truth", d.truth},       {"data", d.data},
                     {"c0", opt.c0},         {"alpha", opt.alpha},     {"rank", opt.rank},
                     {"restarts", opt.restarts}, {"mu_samples", opt.mu_samples}, {"t", opt.t}};
    out["config"]["lambda"] = opt.lambda ? json(*opt.lambda) : json(nullptr);
    out["report"] = lrmc::report::to_json(rep);
    write_json(d.out, out);
    return 0;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
    std::string axis;
    std::vector<double> grid;
    std::string config;
    int trials = 30;
    int calibration_trials = 200;
    double quantile = 0.95;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out;
};

std::string timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::ostringstream s;
    s << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
    return s.str();
}

int run_sweep(const SweepArgs& s) {
    const auto start = std::chrono::steady_clock::now();
    const std::string started = timestamp();
    lrmc::TrialParams base = lrmc::report::params_from_json(read_json(s.config));
    const lrmc::SweepAxis axis = lrmc::sweep_axis_from_string(s.axis);
    if (s.grid.empty()) throw lrmc::ValidationError("sweep: --grid needs at least one value");
    std::optional<lrmc::CalibrationResult> calib;
    if (base.lambda_mode == lrmc::LambdaMode::calibrated) {
        // C is fixed once, at the first grid point, and reused along the axis.
        calib = lrmc::calibrate(lrmc::at_grid_point(base, axis, s.grid.front()), s.calibration_trials, s.quantile,
                                lrmc::derive_seed(s.seed, 0xCA11B));
        base.C = calib->constant_C;
    }
    const lrmc::SweepResult res = lrmc::sweep(axis, s.grid, base, s.trials, s.seed, s.threads);

    ensure_dir(s.out);
    lrmc::io::save_text((fs::path(s.out) / "trials.csv").string(), lrmc::trials_csv(res.records));
    json j;
    j["command"] = "sweep";
    j["config"] = {{"axis", s.axis},
                   {"grid", s.grid},
                   {"trials", s.trials},
                   {"calibration_trials", s.calibration_trials},
                   {"quantile", s.quantile},
                   {"calibration_point", s.grid.front()},
                   {"base", lrmc::report::to_json(base)}};
    j["calibration"] = calib ? lrmc::report::to_json(*calib, false) : json(nullptr);
    j["result"] = lrmc::report::to_json(res);
    write_json((fs::path(s.out) / "sweep.json").string(), j);

    std::ostringstream log;
    log << "started " << started << "\nthreads " << s.threads << "\n";
    for (const auto& r : res.records) log << "point " << r.point << " trial " << r.trial << " runtime_ms " << r.runtime_ms << "\n";
    log << "total_ms "
        << std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count() << "\n";
    lrmc::io::save_text((fs::path(s.out) / "run.log").string(), log.str());
    return 0;
}

// ---------------------------------------------------------------------------

struct LowerboundArgs {
    std::vector<int> dims;
    int rank = 1;
    double gamma = 1.0;
    double sigma = 1.0;
    double a = 1.0;
    long long n = 1;
    double alpha = 1.0 / 16.0;
    bool search = false;
    long long max_attempts = 200000;
    std::uint64_t seed = 0;
    std::string out;
};

int run_lowerbound(const LowerboundArgs& l) {
    const lrmc::Dimensions dims = dims_from(l.dims);
    if (l.n < 1) throw lrmc::ValidationError("--n must be >= 1");
    const lrmc::SamplingDistribution pi = lrmc::uniform_distribution(dims);
    lrmc::PackingSet packing;
    lrmc::PackingReport rep;
    std::vector<double> tried;
    if (l.search) {
        auto found = lrmc::search_gamma(dims, l.rank, l.sigma, l.a, static_cast<std::size_t>(l.n), pi, l.alpha, l.seed,
                                        l.gamma);
        packing = std::move(found.packing);
        rep = found.report;
        tried = found.tried;
    } else {
        packing = lrmc::build_packing(dims, l.rank, l.sigma, l.a, static_cast<std::size_t>(l.n), l.gamma, l.seed,
                                      l.max_attempts);
        rep = lrmc::check_packing_conditions(packing, pi, l.sigma, l.alpha);
        tried.push_back(l.gamma);
    }

    ensure_dir(l.out);
    json files = json::array();
    for (std::size_t i = 0; i < packing.members.size(); ++i) {
        std::ostringstream name;
        name << "member_" << std::setw(3) << std::setfill('0') << i << ".csv";
        lrmc::io::save_matrix_csv((fs::path(l.out) / name.str()).string(), packing.members[i]);
        files.push_back(name.str());
    }
    json j;
    j["command"] = "lowerbound";
    j["config"] = {{"m1", dims.m1}, {"m2", dims.m2}, {"rank", l.rank},   {"gamma", l.gamma},
                   {"sigma", l.sigma}, {"a", l.a},    {"n", l.n},        {"alpha", l.alpha},
                   {"search", l.search}, {"max_attempts", l.max_attempts}, {"pi", "uniform"}};
    j["gammas_tried"] = tried;
    j["packing"] = lrmc::report::to_json(packing, rep);
    j["members"] = files;
    write_json((fs::path(l.out) / "manifest.json").string(), j);
    return 0;
}

// ---------------------------------------------------------------------------

struct CalibrateArgs {
    std::string config;
    double quantile = 0.95;
    int trials = 200;
    std::uint64_t seed = 0;
    std::string out;
};

int run_calibrate(const CalibrateArgs& c) {
    const lrmc::TrialParams p = lrmc::report::params_from_json(read_json(c.config));
    const lrmc::CalibrationResult res = lrmc::calibrate(p, c.trials, c.quantile, c.seed);
    json j;
    j["command"] = "calibrate";
    j["config"] = {{"quantile", c.quantile}, {"trials", c.trials}, {"params", lrmc::report::to_json(p)}};
    j["rng"] = lrmc::report::rng_block(c.seed);
    j["calibration"] = lrmc::report::to_json(res);
    write_json(c.out, j);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nuclear-norm penalized matrix completion under non-uniform sampling"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Draw a synthetic dataset");
    g->add_option("--dims", gen.dims, "m1 m2")->expected(2)->required();
    g->add_option("--rank", gen.rank);
    g->add_option("--sigma", gen.sigma);
    g->add_option("--a", gen.a, "entry bound of the ground truth");
    g->add_option("--n", gen.n);
    g->add_option("--pi", gen.pi, "uniform | powerlaw:re,ce,floor");
    g->add_option("--noise", gen.noise, "gaussian | laplace | uniform");
    g->add_option("--factor", gen.factor, "gaussian | rademacher");
    g->add_option("--seed", gen.seed);
    g->add_option("--out", gen.out, "output directory")->required();

    FitArgs fa;
    auto* f = app.add_subcommand("fit", "Compute the penalized estimate");
    f->add_option("--data", fa.data)->required();
    f->add_option("--pi", fa.pi)->required();
    f->add_option("--config", fa.config, "JSON with lambda_mode, lambda, C, t, tolerance, max_iterations, acceleration");
    f->add_option("--lambda-mode", fa.lambda_mode, "explicit | theorem | optimal | calibrated");
    f->add_option("--lambda", fa.lambda);
    f->add_option("--C", fa.C);
    f->add_option("--t", fa.t);
    f->add_option("--sigma", fa.sigma);
    f->add_option("--a", fa.a);
    f->add_option("--noise", fa.noise);
    f->add_option("--max-iterations", fa.max_iterations);
    f->add_option("--tolerance", fa.tolerance);
    f->add_flag("--no-acceleration", fa.no_acceleration);
    f->add_option("--seed", fa.seed);
    f->add_option("--out", fa.out, "estimate CSV; metadata goes to <out>.json")->required();

    DiagnoseArgs da;
    auto* d = app.add_subcommand("diagnose", "Incoherence diagnostics and stochastic-error norms");
    d->add_option("--pi", da.pi)->required();
    d->add_option("--truth", da.truth);
    d->add_option("--data", da.data);
    d->add_option("--lambda", da.lambda);
    d->add_option("--c0", da.opt.c0);
    d->add_option("--alpha", da.opt.alpha);
    d->add_option("--rank", da.opt.rank);
    d->add_option("--restarts", da.opt.restarts);
    d->add_option("--mu-samples", da.opt.mu_samples);
    d->add_option("--t", da.opt.t);
    d->add_option("--seed", da.opt.seed);
    d->add_option("--out", da.out)->required();

    SweepArgs sa;
    auto* s = app.add_subcommand("sweep", "Monte Carlo rate sweep");
    s->add_option("--axis", sa.axis, "n | M | r | sigma")->required();
    s->add_option("--grid", sa.grid)->required();
    s->add_option("--config", sa.config)->required();
    s->add_option("--trials", sa.trials);
    s->add_option("--calibration-trials", sa.calibration_trials);
    s->add_option("--quantile", sa.quantile);
    s->add_option("--seed", sa.seed);
    s->add_option("--threads", sa.threads);
    s->add_option("--out", sa.out, "output directory")->required();

    LowerboundArgs la;
    auto* l = app.add_subcommand("lowerbound", "Build the minimax packing set");
    l->add_option("--dims", la.dims)->expected(2)->required();
    l->add_option("--rank", la.rank)->required();
    l->add_option("--gamma", la.gamma);
    l->add_option("--sigma", la.sigma);
    l->add_option("--a", la.a);
    l->add_option("--n", la.n)->required();
    l->add_option("--alpha", la.alpha);
    l->add_flag("--search", la.search, "halve gamma until every condition passes");
    l->add_option("--max-attempts", la.max_attempts);
    l->add_option("--seed", la.seed);
    l->add_option("--out", la.out, "output directory")->required();

    CalibrateArgs ca;
    auto* c = app.add_subcommand("calibrate", "Monte Carlo calibration of the lambda constant");
    c->add_option("--config", ca.config)->required();
    c->add_option("--quantile", ca.quantile);
    c->add_option("--trials", ca.trials);
    c->add_option("--seed", ca.seed);
    c->add_option("--out", ca.out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    try {
        if (*g) return run_generate(gen);
        if (*f) return run_fit(fa);
        if (*d) return run_diagnose(da);
        if (*s) return run_sweep(sa);
        if (*l) return run_lowerbound(la);
        if (*c) return run_calibrate(ca);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitValidation;
}

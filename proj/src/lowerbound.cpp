#include "lrmc/lowerbound.hpp"

#include "lrmc/errors.hpp"
#include "lrmc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace lrmc {

namespace {

int hamming(const std::vector<std::uint8_t>& x, const std::vector<std::uint8_t>& y) {
    int d = 0;
    for (std::size_t i = 0; i < x.size(); ++i) d += x[i] != y[i];
    return d;
}

Matrix expand(const std::vector<std::uint8_t>& code, Dimensions dims, int r, int tiles, double delta) {
    const int M = dims.max_dim();
    Matrix tall = Matrix::Zero(M, dims.min_dim());
    for (int t = 0; t < tiles; ++t)
        for (int c = 0; c < r; ++c)
            for (int j = 0; j < M; ++j)
                if (code[static_cast<std::size_t>(c) * M + j]) tall(j, t * r + c) = delta;
    if (dims.m1 >= dims.m2) return tall;
    return tall.transpose();
}

ConditionCheck at_least(double observed, double bound) {
    return {observed >= bound, observed, bound, observed - bound};
}

ConditionCheck at_most(double observed, double bound) {
    return {observed <= bound, observed, bound, bound - observed};
}

} // namespace

PackingSet build_packing(Dimensions dims, int r, double sigma, double a, std::size_t n, double gamma,
                         std::uint64_t seed, long long max_attempts) {
    const int M = dims.max_dim();
    if (r < 1 || r > dims.min_dim()) throw ValidationError("build_packing: r must lie in [1, min(m1, m2)]");
    if (static_cast<double>(M) * r > static_cast<double>(n)) throw ValidationError("build_packing: requires M r <= n");
    if (!(sigma > 0.0) || !(a > 0.0)) throw ValidationError("build_packing: sigma and a must be positive");
    if (!(gamma > 0.0) || gamma > std::sqrt(2.0)) throw ValidationError("build_packing: gamma must lie in (0, sqrt 2]");
    if (max_attempts < 1) throw ValidationError("build_packing: max_attempts must be >= 1");
    const double exponent = r * M / 8.0;
    if (exponent > 24.0) throw ValidationError("build_packing: target cardinality 2^{rM/8}+1 exceeds 2^24");

    PackingSet p;
    p.dims = dims;
    p.rank_budget = r;
    p.sigma = sigma;
    p.a = a;
    p.n = n;
    p.gamma = gamma;
    p.seed = seed;
    p.tiles = dims.min_dim() / r;
    p.delta = gamma / std::sqrt(2.0) * std::min(sigma, a) * std::sqrt(static_cast<double>(M) * r / static_cast<double>(n));
    if (p.delta > a) throw ValidationError("build_packing: entry magnitude delta exceeds a");
    p.hamming_floor = (r * M + 7) / 8;
    p.target_cardinality = static_cast<std::size_t>(std::ceil(std::exp2(exponent))) + 1;

    const std::size_t bits = static_cast<std::size_t>(r) * M;
    p.codewords.emplace_back(bits, 0);
    Philox4x32 engine(seed, 0);
    std::bernoulli_distribution coin(0.5);
    std::vector<std::uint8_t> candidate(bits);
    while (p.codewords.size() < p.target_cardinality && p.attempts < max_attempts) {
        ++p.attempts;
        for (auto& b : candidate) b = coin(engine) ? 1 : 0;
        bool far = true;
        for (const auto& w : p.codewords) {
            if (hamming(candidate, w) < p.hamming_floor) {
                far = false;
                break;
            }
        }
        if (far) p.codewords.push_back(candidate);
    }
    if (p.codewords.size() < p.target_cardinality) {
        std::ostringstream msg;
        msg << "build_packing: reached cardinality " << p.codewords.size() << " of " << p.target_cardinality
            << " after " << p.attempts << " attempts";
        throw ValidationError(msg.str());
    }

    p.min_hamming = std::numeric_limits<int>::max();
    for (std::size_t i = 0; i < p.codewords.size(); ++i)
        for (std::size_t k = i + 1; k < p.codewords.size(); ++k)
            p.min_hamming = std::min(p.min_hamming, hamming(p.codewords[i], p.codewords[k]));
    for (const auto& w : p.codewords) p.members.push_back(expand(w, dims, r, p.tiles, p.delta));
    return p;
}

double kl_gaussian(const SamplingDistribution& pi, const Matrix& A, double sigma, std::size_t n) {
    if (!(sigma > 0.0)) throw ValidationError("kl_gaussian: sigma must be positive");
    const double norm = l2pi_norm(pi, A);
    return static_cast<double>(n) / (2.0 * sigma * sigma) * norm * norm;
}

bool PackingReport::all_pass() const {
    return cardinality_ok && class_ok && kl.pass && frobenius_lower.pass && frobenius_upper.pass && spectral.pass &&
           l2pi.pass;
}

PackingReport check_packing_conditions(const PackingSet& packing, const SamplingDistribution& pi, double sigma,
                                       double alpha) {
    if (!(pi.dims() == packing.dims)) throw ValidationError("check_packing_conditions: dims mismatch");
    if (!(sigma > 0.0)) throw ValidationError("check_packing_conditions: sigma must be positive");
    if (!(alpha > 0.0)) throw ValidationError("check_packing_conditions: alpha must be positive");
    PackingReport rep;
    rep.alpha = alpha;
    rep.c1 = pi.c1();
    rep.c1_prime = pi.c1_prime();
    rep.cardinality = packing.cardinality();
    rep.target_cardinality = packing.target_cardinality;
    rep.cardinality_ok = rep.cardinality >= rep.target_cardinality;
    rep.trivial = rep.cardinality < 2;

    for (const auto& A : packing.members) {
        rep.max_rank = std::max(rep.max_rank, A.isZero(0.0) ? 0 : numerical_rank(A));
        rep.max_entry = std::max(rep.max_entry, A.cwiseAbs().maxCoeff());
    }
    rep.class_ok = rep.max_rank <= packing.rank_budget && rep.max_entry <= packing.a;

    const double M = packing.long_dim();
    const double N = packing.dims.min_dim();
    const double n = static_cast<double>(packing.n);
    const double Neff = packing.effective_short_dim();
    const double g = packing.gamma;
    const double s2 = std::pow(std::min(packing.sigma, packing.a), 2);
    const double r = packing.rank_budget;
    const double ratio = std::sqrt(rep.c1 / rep.c1_prime);

    const double frob_lo = g * g / 16.0 * s2 * M * M * r * Neff / n;
    const double frob_hi = g * g * s2 * M * M * r * Neff / n;
    const double spec_lo = ratio * g / 4.0 * std::sqrt(s2 * M * M * Neff / n);
    const double spec_literal = ratio * std::sqrt(g / 16.0) * std::sqrt(s2 * M * M * Neff / n);
    const double l2_lo = rep.c1 * g * g / 16.0 * s2 * M * r * Neff / (N * n);

    if (rep.trivial) {
        rep.kl = {true, 0.0, 0.0, 0.0};
        rep.frobenius_lower = {true, 0.0, frob_lo, 0.0};
        rep.frobenius_upper = {true, 0.0, frob_hi, 0.0};
        rep.spectral = {true, 0.0, spec_lo, 0.0};
        rep.spectral_literal = {true, 0.0, spec_literal, 0.0};
        rep.l2pi = {true, 0.0, l2_lo, 0.0};
        return rep;
    }

    double kl_sum = 0.0;
    for (std::size_t i = 1; i < packing.members.size(); ++i) kl_sum += kl_gaussian(pi, packing.members[i], sigma, packing.n);
    const double card_minus_one = static_cast<double>(rep.cardinality - 1);
    rep.kl = at_most(kl_sum / card_minus_one, alpha * std::log(card_minus_one));

    double min_frob = std::numeric_limits<double>::infinity();
    double max_frob = 0.0;
    double min_spec = std::numeric_limits<double>::infinity();
    double min_l2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < packing.members.size(); ++i) {
        for (std::size_t k = i + 1; k < packing.members.size(); ++k) {
            const Matrix D = packing.members[i] - packing.members[k];
            const double f = D.squaredNorm();
            min_frob = std::min(min_frob, f);
            max_frob = std::max(max_frob, f);
            min_spec = std::min(min_spec, spectral_norm(D));
            min_l2 = std::min(min_l2, l2pi_inner(pi, D, D));
        }
    }
    // Relative slack absorbs rounding in the norms when a bound is met with equality.
    const double rel = 1e-12;
    rep.frobenius_lower = at_least(min_frob * (1 + rel), frob_lo);
    rep.frobenius_upper = at_most(max_frob * (1 - rel), frob_hi);
    rep.spectral = at_least(min_spec * (1 + rel), spec_lo);
    rep.spectral_literal = at_least(min_spec, spec_literal);
    rep.l2pi = at_least(min_l2 * (1 + rel), l2_lo);
    return rep;
}

GammaSearch search_gamma(Dimensions dims, int r, double sigma, double a, std::size_t n,
                         const SamplingDistribution& pi, double alpha, std::uint64_t seed, double gamma0,
                         double shrink, int max_steps) {
    if (!(shrink > 0.0 && shrink < 1.0)) throw ValidationError("search_gamma: shrink must lie in (0, 1)");
    if (max_steps < 1) throw ValidationError("search_gamma: max_steps must be >= 1");
    GammaSearch out;
    double gamma = gamma0;
    for (int step = 0; step < max_steps; ++step, gamma *= shrink) {
        out.tried.push_back(gamma);
        out.packing = build_packing(dims, r, sigma, a, n, gamma, seed);
        out.report = check_packing_conditions(out.packing, pi, sigma, alpha);
        if (out.report.all_pass()) break;
    }
    return out;
}

} // namespace lrmc

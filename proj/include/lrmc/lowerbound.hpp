#pragma once

#include "lrmc/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace lrmc {

/// Finite family of well-separated matrices in the class A(r, a), zero included.
///
/// Members are binary M x r blocks with entries in {0, delta}, tiled
/// floor(N / r) times along the other dimension (M = max(m1, m2), N = min);
/// the remaining columns are zero. Blocks are drawn at random and kept when
/// their Hamming distance to every kept block, the zero block included, is
/// at least r M / 8.
struct PackingSet {
    Dimensions dims;
    int rank_budget = 1;
    double sigma = 1.0;
    double a = 1.0;
    std::size_t n = 1;
    double gamma = 1.0;
    double delta = 0.0;             ///< (gamma / sqrt 2) (sigma ^ a) sqrt(M r / n)
    int tiles = 0;                  ///< floor(N / r)
    std::vector<Matrix> members;    ///< members[0] is the zero matrix
    std::vector<std::vector<std::uint8_t>> codewords; ///< M r bits per member, column-major block
    int min_hamming = 0;            ///< smallest pairwise distance between codewords
    int hamming_floor = 0;          ///< ceil(r M / 8)
    std::size_t target_cardinality = 0; ///< ceil(2^{r M / 8}) + 1
    std::uint64_t seed = 0;
    long long attempts = 0;

    std::size_t cardinality() const { return members.size(); }
    int long_dim() const { return dims.max_dim(); }
    /// r * tiles: the number of columns actually carrying blocks.
    int effective_short_dim() const { return rank_budget * tiles; }
};

/// Builds the packing. Requires 1 <= r <= min(m1, m2), M r <= n, gamma in (0, sqrt 2].
/// Throws ValidationError if `max_attempts` random blocks do not reach the
/// target cardinality; the message reports the cardinality achieved.
PackingSet build_packing(Dimensions dims, int r, double sigma, double a, std::size_t n, double gamma,
                         std::uint64_t seed, long long max_attempts = 200000);

/// K(P_0, P_A) = n / (2 sigma^2) ||A||^2_{L2(Pi)} for Gaussian noise.
double kl_gaussian(const SamplingDistribution& pi, const Matrix& A, double sigma, std::size_t n);

struct ConditionCheck {
    bool pass = true;
    double observed = 0.0;  ///< worst case over members or pairs
    double bound = 0.0;
    double margin = 0.0;    ///< signed slack; >= 0 on pass
};

struct PackingReport {
    std::size_t cardinality = 0;
    std::size_t target_cardinality = 0;
    bool cardinality_ok = false;
    bool trivial = false;      ///< fewer than two members: no pairs to check
    int max_rank = 0;
    double max_entry = 0.0;
    bool class_ok = false;     ///< every member has rank <= r and entries <= a

    /// Average KL over nonzero members <= alpha log(Card - 1).
    ConditionCheck kl;
    /// Smallest pairwise ||A1 - A2||_2^2 against (gamma^2/16)(sigma^a)^2 M^2 r N_eff / n.
    ConditionCheck frobenius_lower;
    /// Largest pairwise ||A1 - A2||_2^2 against gamma^2 (sigma^a)^2 M^2 r N_eff / n.
    ConditionCheck frobenius_upper;
    /// Smallest pairwise spectral distance against sqrt(c1/c1') (gamma/4) (sigma^a) sqrt(M^2 N_eff / n).
    ConditionCheck spectral;
    /// Same distance against the bound with sqrt(gamma/16) in place of gamma/4.
    /// Reported only: for gamma < 1 it exceeds what the bracket implies.
    ConditionCheck spectral_literal;
    /// Smallest pairwise ||A1 - A2||^2_{L2(Pi)} against c1 (gamma^2/16)(sigma^a)^2 M r N_eff / (N n).
    ConditionCheck l2pi;
    double alpha = 0.0;
    double c1 = 0.0;
    double c1_prime = 0.0;

    /// Every asserted condition: cardinality, class, KL, bracket, spectral, L2(Pi).
    bool all_pass() const;
};

PackingReport check_packing_conditions(const PackingSet& packing, const SamplingDistribution& pi, double sigma,
                                       double alpha);

struct GammaSearch {
    PackingSet packing;
    PackingReport report;
    std::vector<double> tried;
};

/// Builds packings for gamma = gamma0, gamma0 * shrink, ... until every
/// condition passes or `max_steps` values have been tried. The result holds
/// the last packing built.
GammaSearch search_gamma(Dimensions dims, int r, double sigma, double a, std::size_t n,
                         const SamplingDistribution& pi, double alpha, std::uint64_t seed,
                         double gamma0 = 1.0, double shrink = 0.5, int max_steps = 20);

} // namespace lrmc

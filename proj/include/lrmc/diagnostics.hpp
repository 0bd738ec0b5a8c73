#pragma once

#include "lrmc/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lrmc {

// ---------------------------------------------------------------------------
// Distortion constants
// ---------------------------------------------------------------------------

struct KappaPair {
    double kappa = 0.0;       ///< kappa_r (or an upper bound on it)
    double kappa_prime = 0.0; ///< kappa'_r (or a lower bound on it)
};

/// Closed form for the completion basis: (sqrt(min pi), sqrt(max pi)).
/// For rank-one B = u v^T with ||B||_2 = 1, ||B||^2_{L2(Pi)} = sum pi(j,k) u_j^2 v_k^2
/// is bilinear in (u^2, v^2) over a product of simplices, so it is extremal at a vertex.
KappaPair kappa1(const SamplingDistribution& pi);

/// Search-based bounds on (kappa_r, kappa'_r): alternating minimization and
/// maximization of ||UV^T||_{L2(Pi)} / ||UV^T||_2 over factored B of rank <= r.
/// Each half-step solves a small symmetric eigenproblem exactly. Starts are
/// `restarts` random factors plus one start per coordinate column. Results for
/// every r' <= r are folded in, so the bounds are monotone in r.
KappaPair kappa_r_heuristic(const SamplingDistribution& pi, int r, int restarts, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Coherence
// ---------------------------------------------------------------------------

struct RhoResult {
    double value = 0.0; ///< |<A,B>_{L2(Pi)}| / (||A||_1 ||B||_1) of the witness
    Matrix A;
    Matrix B;
    int restarts = 0;   ///< random restarts used
    int starts = 0;     ///< total starting pairs (structured + random + user)
};

/// Coherence ratio of a pair; the pair need not be orthogonal.
double coherence_ratio(const SamplingDistribution& pi, const Matrix& A, const Matrix& B);

/// Lower bound on rho(Pi) by projected ascent over trace-orthogonal pairs.
/// Starting pairs: the two-entry witnesses (E_p + E_q, E_p - E_q) for every
/// pair of entries, `restarts` random pairs, and `seeds` supplied by the
/// caller. The result is never below the ratio of any starting pair.
RhoResult rho_search(const SamplingDistribution& pi, int restarts, std::uint64_t seed,
                     const std::vector<std::pair<Matrix, Matrix>>& seeds = {});

enum class CertificateStatus {
    holds,       ///< rho known exactly and the inequality holds
    not_refuted, ///< only a lower bound on rho is known and it satisfies the inequality
    refuted,     ///< a witness violates the inequality
};

const char* to_string(CertificateStatus status);

struct IncoherenceCertificate {
    CertificateStatus status = CertificateStatus::not_refuted;
    double rho = 0.0;
    double threshold = 0.0; ///< kappa1^2 / ((1 + 2 c0) alpha r)
    double c0 = 5.0;
    double alpha = 2.0;
    int r = 1;
    bool rho_exact = false;

    bool holds() const { return status == CertificateStatus::holds; }
};

/// Checks rho <= kappa1^2 / ((1 + 2 c0) alpha r). `rho_exact` says whether
/// `rho_value` is the true coherence (uniform Pi) or only a search lower bound.
IncoherenceCertificate check_assumption_incoherence(double kappa1, double rho_value, double c0, double alpha,
                                                    int r, bool rho_exact = false);

// ---------------------------------------------------------------------------
// Support projectors and the cone
// ---------------------------------------------------------------------------

/// Orthonormal bases of S1(A0) and S2(A0).
struct ProjectorPair {
    Matrix S1; ///< m1 x r
    Matrix S2; ///< m2 x r

    static ProjectorPair from_truth(const GroundTruth& truth);
    void validate() const;

    /// P_{S1^perp} B P_{S2^perp}
    Matrix complement(const Matrix& B) const;
    /// B - complement(B)
    Matrix support(const Matrix& B) const { return B - complement(B); }
};

struct ProjectedParts {
    Matrix on_support;  ///< P_{A0}(B)
    Matrix complement;  ///< P_{A0}^perp(B)
};

ProjectedParts projector_decompose(const GroundTruth& truth, const Matrix& B);

/// ||P^perp(B)||_1 <= c0 ||P(B)||_1 + slack.
bool cone_membership(const GroundTruth& truth, const Matrix& B, double c0, double slack = 1e-10);

struct MuResult {
    double value = 0.0;  ///< lower bound on mu_{c0}(A0)
    Matrix witness;      ///< cone member attaining `value`
    int samples = 0;
};

/// Lower bound on mu_{c0}(A0) = sup ||P(B)||_2 / ||B||_{L2(Pi)} over the cone.
/// Each sample is B = P(B0) + s P^perp(W) with s chosen optimally within the
/// cone. The fixed witness B = A0 / ||A0||_2 is always evaluated first.
MuResult mu_c0_search(const SamplingDistribution& pi, const GroundTruth& truth, double c0, int samples,
                      std::uint64_t seed);

// ---------------------------------------------------------------------------
// Stochastic errors and deviation bounds
// ---------------------------------------------------------------------------

struct StochasticErrors {
    Matrix M1; ///< (1/n) sum xi_i X_i
    Matrix M2; ///< (1/n) sum (a0(X_i) X_i - E a0(X) X)
};

/// Recovers xi_i = Y_i - a0(j_i, k_i) from the dataset and ground truth.
StochasticErrors stochastic_errors(const SamplingDistribution& pi, const Dataset& data, const GroundTruth& truth);
/// Same, with the noise draws given explicitly (must have length n).
StochasticErrors stochastic_errors(const SamplingDistribution& pi, const Dataset& data, const GroundTruth& truth,
                                   const std::vector<double>& noise_draws);

/// 2 max{ sigma_Z sqrt((t + log m)/n), U (t + log m)/n } (bounded matrix Bernstein).
double bernstein_bound_bounded(double sigma_Z, double U, double n, double m, double t);

/// C max{ sigma_Z sqrt((t + log m)/n), U (log(U/sigma_Z))^{1/beta} (t + log m)/n } (psi_beta version).
double bernstein_bound_psi(double sigma_Z, double U_beta, double beta, double n, double m, double t,
                           double C = 1.0);

/// The rate shape sigma max{ sqrt((t+log m)/((m1^m2) n)), (t+log m) log^{1/beta}(m1^m2) / n }
/// that bounds ||M1|| up to a constant.
double noise_error_shape(Dimensions dims, double n, double sigma, double beta, double t);

/// 2 c1' a max{ sqrt((t+log m)/((m1^m2) n)), 2 (t+log m)/n }, the explicit bound on ||M2||.
double sampling_error_bound(Dimensions dims, double n, double c1_prime, double a, double t);

/// (5/6 + 6 sqrt(2) / (11 (alpha - 1))) lambda / kappa1^2.
double theorem1_bound(double lambda, double kappa1, double alpha);

/// lambda mu sqrt(rank): the L2(Pi) error bound on the oracle event.
double klt_l2pi_bound(double lambda, double mu, int rank);

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct BernsteinSummary {
    double t = 3.0;
    double noise_shape = 0.0;          ///< noise_error_shape at t (times C = 1)
    double sampling_bound = 0.0;       ///< sampling_error_bound at t
    double sigma_X_squared = 0.0;      ///< max of largest row / column mass of Pi
};

struct DiagnosticsReport {
    Dimensions dims;
    double kappa1 = 0.0;
    double kappa1_prime = 0.0;
    KappaPair kappa1_search;           ///< optimization cross-check of the closed form
    RhoResult rho;
    bool rho_exact = false;
    IncoherenceCertificate assumption1;
    double c1 = 0.0;
    double c1_prime = 0.0;
    std::optional<MuResult> mu_c0;     ///< needs a ground truth
    double mu_cap = 0.0;               ///< (1/kappa1) sqrt(alpha/(alpha-1))
    std::optional<double> M1_norm;     ///< needs truth and data
    std::optional<double> M2_norm;
    std::optional<double> lambda;
    std::optional<bool> oracle_event;  ///< lambda >= 3 ||M1 + M2||
    BernsteinSummary bernstein;
    int search_restarts = 0;
    std::uint64_t seed = 0;
};

struct DiagnosticsOptions {
    double c0 = 5.0;
    double alpha = 2.0;
    int rank = 1;            ///< r in Assumption 1 (overridden by the truth rank when given)
    int restarts = 20;
    int mu_samples = 200;
    double t = 3.0;
    std::optional<double> lambda;
    std::uint64_t seed = 0;
};

DiagnosticsReport diagnose(const SamplingDistribution& pi, const GroundTruth* truth, const Dataset* data,
                           const DiagnosticsOptions& options);

} // namespace lrmc

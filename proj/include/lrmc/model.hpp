#pragma once

#include "lrmc/linalg.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lrmc {

/// Shape m1 x m2 of the unknown matrix.
struct Dimensions {
    int m1 = 1;
    int m2 = 1;

    Dimensions() = default;
    Dimensions(int rows, int cols);

    int m() const { return m1 + m2; }                     ///< m = m1 + m2
    int max_dim() const { return m1 > m2 ? m1 : m2; }      ///< M = m1 v m2
    int min_dim() const { return m1 < m2 ? m1 : m2; }      ///< m1 ^ m2
    long long entries() const { return static_cast<long long>(m1) * m2; }

    bool operator==(const Dimensions&) const = default;
};

/// Probability mass over the matrix-completion basis {e_j e_k^T}.
class SamplingDistribution {
public:
    /// Validates strict positivity and unit mass (abs tol 1e-12).
    explicit SamplingDistribution(Matrix pmf, std::string label = "custom");

    const Dimensions& dims() const { return dims_; }
    const Matrix& pmf() const { return pmf_; }
    double operator()(int j, int k) const { return pmf_(j, k); }
    double min_prob() const { return pmf_.minCoeff(); }
    double max_prob() const { return pmf_.maxCoeff(); }
    /// Assumption-3 constants: c1 = m1 m2 min pi, c1' = m1 m2 max pi.
    double c1() const { return static_cast<double>(dims_.entries()) * min_prob(); }
    double c1_prime() const { return static_cast<double>(dims_.entries()) * max_prob(); }
    bool is_uniform(double tol = 1e-15) const;
    const std::string& label() const { return label_; }

private:
    Dimensions dims_;
    Matrix pmf_;
    std::string label_;
};

SamplingDistribution uniform_distribution(Dimensions dims);

/// pi(j,k) proportional to max(j^-row_exponent * k^-col_exponent, floor_ratio),
/// with 1-based j, k. The largest weight is 1, so min pi / max pi >= floor_ratio.
SamplingDistribution power_law_distribution(Dimensions dims, double row_exponent,
                                            double col_exponent, double floor_ratio);

/// Rank-r matrix A0 = sum_j s_j u_j v_j^T with max |a0(j,k)| <= entry_bound.
struct GroundTruth {
    Dimensions dims;
    Matrix left;   ///< m1 x r, orthonormal columns
    Vector singular_values;
    Matrix right;  ///< m2 x r, orthonormal columns
    double entry_bound = 0.0;
    /// Dense form as loaded or generated; matrix() returns it verbatim so that
    /// responses and residuals computed from it are bit-reproducible.
    std::optional<Matrix> dense;

    int rank() const { return static_cast<int>(singular_values.size()); }
    Matrix matrix() const;
    /// Throws ValidationError if any invariant fails.
    void validate() const;

    /// Factors an arbitrary matrix; rank is the numerical rank at `rel_tol`.
    /// `entry_bound` defaults to the largest entry magnitude.
    static GroundTruth from_matrix(const Matrix& A, std::optional<double> entry_bound = {},
                                   double rel_tol = 1e-10);
    static GroundTruth zero(Dimensions dims);
};

enum class FactorKind {
    gaussian,   ///< i.i.d. normal factors; entries are spiky
    rademacher, ///< +-1 factors; entries are flat, so singular values are large relative to a
};

/// Random rank-r ground truth rescaled so that max |a0(j,k)| = entry_bound.
GroundTruth random_ground_truth(Dimensions dims, int rank, double entry_bound, std::uint64_t seed,
                                FactorKind kind = FactorKind::gaussian);

enum class NoiseKind { gaussian, laplace, bounded_uniform };

/// Centered i.i.d. noise with variance sigma^2.
struct NoiseModel {
    NoiseKind kind = NoiseKind::gaussian;
    double sigma = 1.0;

    /// psi-exponent beta of the Orlicz tail condition; +inf for bounded noise.
    double psi_exponent() const;
    double variance() const { return sigma * sigma; }
    std::string label() const;

    template <class Engine>
    double sample(Engine& engine) const;
};

const char* to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& name);

struct Observation {
    int row = 0;
    int col = 0;
    double value = 0.0;

    bool operator==(const Observation&) const = default;
};

/// What produced a synthetic dataset.
struct Provenance {
    std::string sampling;
    std::string truth;
    std::string noise;
    std::uint64_t seed = 0;
};

struct Dataset {
    Dimensions dims;
    std::vector<Observation> entries;
    std::optional<Provenance> provenance;

    std::size_t n() const { return entries.size(); }
    /// Throws ValidationError on out-of-range indices or empty data.
    void validate() const;
};

/// n i.i.d. draws (X_i, Y_i) with X_i ~ pi and Y_i = a0(X_i) + xi_i.
Dataset generate_dataset(const SamplingDistribution& pi, const GroundTruth& truth,
                         const NoiseModel& noise, std::size_t n, std::uint64_t seed);

/// <A,B>_{L2(Pi)} = sum pi(j,k) A(j,k) B(j,k).
double l2pi_inner(const SamplingDistribution& pi, const Matrix& A, const Matrix& B);
double l2pi_norm(const SamplingDistribution& pi, const Matrix& A);

} // namespace lrmc

#include "lrmc/model_inl.hpp"

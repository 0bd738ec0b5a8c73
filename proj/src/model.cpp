#include "lrmc/model.hpp"

#include "lrmc/errors.hpp"
#include "lrmc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace lrmc {

Dimensions::Dimensions(int rows, int cols) : m1(rows), m2(cols) {
    if (rows < 1 || cols < 1) {
        throw ValidationError("Dimensions: m1 >= 1 and m2 >= 1 required (got " + std::to_string(rows) +
                              " x " + std::to_string(cols) + ")");
    }
}

SamplingDistribution::SamplingDistribution(Matrix pmf, std::string label)
    : pmf_(std::move(pmf)), label_(std::move(label)) {
    if (pmf_.rows() < 1 || pmf_.cols() < 1) throw ValidationError("SamplingDistribution: empty pmf");
    dims_ = Dimensions(static_cast<int>(pmf_.rows()), static_cast<int>(pmf_.cols()));
    if (!pmf_.allFinite() || pmf_.minCoeff() <= 0.0) {
        throw ValidationError("SamplingDistribution: every pi(j,k) must be strictly positive");
    }
    const double total = pmf_.sum();
    if (std::abs(total - 1.0) > 1e-12) {
        std::ostringstream os;
        os.precision(17);
        os << "SamplingDistribution: probabilities must sum to 1 within 1e-12 (sum = " << total << ")";
        throw ValidationError(os.str());
    }
}

bool SamplingDistribution::is_uniform(double tol) const {
    return max_prob() - min_prob() <= tol;
}

SamplingDistribution uniform_distribution(Dimensions dims) {
    return SamplingDistribution(Matrix::Constant(dims.m1, dims.m2, 1.0 / static_cast<double>(dims.entries())),
                                "uniform");
}

SamplingDistribution power_law_distribution(Dimensions dims, double row_exponent, double col_exponent,
                                            double floor_ratio) {
    if (!(floor_ratio > 0.0) || floor_ratio > 1.0) {
        throw ValidationError("power_law_distribution: floor_ratio must lie in (0, 1]");
    }
    if (row_exponent < 0.0 || col_exponent < 0.0) {
        throw ValidationError("power_law_distribution: exponents must be >= 0");
    }
    Matrix w(dims.m1, dims.m2);
    for (int j = 0; j < dims.m1; ++j) {
        for (int k = 0; k < dims.m2; ++k) {
            const double v = std::pow(j + 1.0, -row_exponent) * std::pow(k + 1.0, -col_exponent);
            w(j, k) = std::max(v, floor_ratio);
        }
    }
    w /= w.sum();
    // One correction pass removes the last ulp of normalization drift.
    w /= w.sum();
    std::ostringstream label;
    label.precision(17);
    label << "powerlaw:" << row_exponent << "," << col_exponent << "," << floor_ratio;
    return SamplingDistribution(std::move(w), label.str());
}

// ---------------------------------------------------------------------------

Matrix GroundTruth::matrix() const {
    if (dense) return *dense;
    if (rank() == 0) return Matrix::Zero(dims.m1, dims.m2);
    return left * singular_values.asDiagonal() * right.transpose();
}

void GroundTruth::validate() const {
    const int r = rank();
    if (left.rows() != dims.m1 || right.rows() != dims.m2 || left.cols() != r || right.cols() != r) {
        throw ValidationError("GroundTruth: factor shapes inconsistent with dims and rank");
    }
    if (r > dims.min_dim()) throw ValidationError("GroundTruth: rank exceeds min(m1, m2)");
    if (r > 0) {
        const Matrix I = Matrix::Identity(r, r);
        if ((left.transpose() * left - I).cwiseAbs().maxCoeff() > 1e-10) {
            throw ValidationError("GroundTruth: left factors must have orthonormal columns");
        }
        if ((right.transpose() * right - I).cwiseAbs().maxCoeff() > 1e-10) {
            throw ValidationError("GroundTruth: right factors must have orthonormal columns");
        }
        for (int j = 0; j < r; ++j) {
            if (!(singular_values(j) > 0.0)) {
                throw ValidationError("GroundTruth: singular values must be strictly positive");
            }
            if (j > 0 && singular_values(j) > singular_values(j - 1)) {
                throw ValidationError("GroundTruth: singular values must be nonincreasing");
            }
        }
    }
    if (entry_bound < 0.0) throw ValidationError("GroundTruth: entry_bound must be >= 0");
    const double max_entry = r == 0 ? 0.0 : matrix().cwiseAbs().maxCoeff();
    if (max_entry > entry_bound * (1.0 + 1e-12) + 1e-300) {
        throw ValidationError("GroundTruth: max entry magnitude exceeds entry_bound (class A(r,a))");
    }
}

GroundTruth GroundTruth::from_matrix(const Matrix& A, std::optional<double> entry_bound, double rel_tol) {
    GroundTruth t;
    t.dims = Dimensions(static_cast<int>(A.rows()), static_cast<int>(A.cols()));
    const ThinSvd svd = thin_svd(A);
    int r = 0;
    if (svd.s.size() > 0 && svd.s(0) > 0.0) {
        while (r < svd.s.size() && svd.s(r) > rel_tol * svd.s(0)) ++r;
    }
    t.left = svd.U.leftCols(r);
    t.right = svd.V.leftCols(r);
    t.singular_values = svd.s.head(r);
    t.entry_bound = entry_bound.value_or(A.size() ? A.cwiseAbs().maxCoeff() : 0.0);
    t.dense = A;
    t.validate();
    if ((t.left * t.singular_values.asDiagonal() * t.right.transpose() - A).cwiseAbs().maxCoeff() >
        1e-8 * std::max(1.0, A.cwiseAbs().maxCoeff())) {
        throw ValidationError("GroundTruth: matrix is not numerically of the detected rank");
    }
    return t;
}

GroundTruth GroundTruth::zero(Dimensions dims) {
    GroundTruth t;
    t.dims = dims;
    t.left = Matrix(dims.m1, 0);
    t.right = Matrix(dims.m2, 0);
    t.singular_values = Vector(0);
    t.entry_bound = 0.0;
    return t;
}

GroundTruth random_ground_truth(Dimensions dims, int rank, double entry_bound, std::uint64_t seed,
                                FactorKind kind) {
    if (rank < 0 || rank > dims.min_dim()) {
        throw ValidationError("random_ground_truth: rank must lie in [0, min(m1, m2)]");
    }
    if (entry_bound < 0.0) throw ValidationError("random_ground_truth: entry bound must be >= 0");
    if (rank == 0 || entry_bound == 0.0) {
        GroundTruth t = GroundTruth::zero(dims);
        t.entry_bound = entry_bound;
        return t;
    }
    Philox4x32 engine(seed, 0);
    auto draw = [&]() -> double {
        if (kind == FactorKind::rademacher) return (engine() & 1u) ? 1.0 : -1.0;
        return std::normal_distribution<double>(0.0, 1.0)(engine);
    };
    for (int attempt = 0; attempt < 64; ++attempt) {
        Matrix U(dims.m1, rank), V(dims.m2, rank);
        for (int c = 0; c < rank; ++c) {
            for (int i = 0; i < dims.m1; ++i) U(i, c) = draw();
            for (int i = 0; i < dims.m2; ++i) V(i, c) = draw();
        }
        Matrix A = U * V.transpose();
        const double peak = A.cwiseAbs().maxCoeff();
        if (peak == 0.0) continue;
        A *= entry_bound / peak;
        GroundTruth t = GroundTruth::from_matrix(A, entry_bound, 1e-9);
        if (t.rank() == rank) return t;
    }
    throw ValidationError("random_ground_truth: could not draw a matrix of the requested rank");
}

// ---------------------------------------------------------------------------

double NoiseModel::psi_exponent() const {
    switch (kind) {
    case NoiseKind::gaussian: return 2.0;
    case NoiseKind::laplace: return 1.0;
    case NoiseKind::bounded_uniform: return std::numeric_limits<double>::infinity();
    }
    return 2.0;
}

const char* to_string(NoiseKind kind) {
    switch (kind) {
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::laplace: return "laplace";
    case NoiseKind::bounded_uniform: return "bounded_uniform";
    }
    return "gaussian";
}

NoiseKind noise_kind_from_string(const std::string& name) {
    if (name == "gaussian") return NoiseKind::gaussian;
    if (name == "laplace") return NoiseKind::laplace;
    if (name == "bounded_uniform" || name == "uniform") return NoiseKind::bounded_uniform;
    throw ValidationError("unknown noise kind '" + name + "' (expected gaussian|laplace|bounded_uniform)");
}

std::string NoiseModel::label() const {
    std::ostringstream os;
    os.precision(17);
    os << to_string(kind) << ":" << sigma;
    return os.str();
}

// ---------------------------------------------------------------------------

void Dataset::validate() const {
    if (entries.empty()) throw ValidationError("Dataset: n must be >= 1");
    for (const auto& e : entries) {
        if (e.row < 0 || e.row >= dims.m1 || e.col < 0 || e.col >= dims.m2) {
            throw ValidationError("Dataset: observation index (" + std::to_string(e.row) + ", " +
                                  std::to_string(e.col) + ") outside dims");
        }
        if (!std::isfinite(e.value)) throw ValidationError("Dataset: responses must be finite");
    }
}

Dataset generate_dataset(const SamplingDistribution& pi, const GroundTruth& truth, const NoiseModel& noise,
                         std::size_t n, std::uint64_t seed) {
    if (!(pi.dims() == truth.dims)) {
        throw ValidationError("generate_dataset: sampling distribution and ground truth dimensions differ");
    }
    if (n < 1) throw ValidationError("generate_dataset: n must be >= 1");
    if (noise.sigma < 0.0) throw ValidationError("generate_dataset: noise sigma must be >= 0");

    const Dimensions dims = pi.dims();
    const Matrix A0 = truth.matrix();
    const Eigen::Map<const Vector> mass(pi.pmf().data(), pi.pmf().size());
    std::discrete_distribution<long long> pick(mass.data(), mass.data() + mass.size());

    // Separate streams keep the index sequence independent of the noise law.
    Philox4x32 index_engine(seed, 1);
    Philox4x32 noise_engine(seed, 2);

    Dataset d;
    d.dims = dims;
    d.entries.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const long long flat = pick(index_engine);
        // pmf is column-major
        const int j = static_cast<int>(flat % dims.m1);
        const int k = static_cast<int>(flat / dims.m1);
        d.entries.push_back({j, k, A0(j, k) + noise.sample(noise_engine)});
    }
    std::ostringstream truth_label;
    truth_label << "rank" << truth.rank() << ":a=" << truth.entry_bound;
    d.provenance = Provenance{pi.label(), truth_label.str(), noise.label(), seed};
    return d;
}

double l2pi_inner(const SamplingDistribution& pi, const Matrix& A, const Matrix& B) {
    if (A.rows() != pi.dims().m1 || A.cols() != pi.dims().m2 || B.rows() != A.rows() || B.cols() != A.cols()) {
        throw ValidationError("l2pi_inner: matrix shapes must match the sampling distribution");
    }
    return (pi.pmf().array() * A.array() * B.array()).sum();
}

double l2pi_norm(const SamplingDistribution& pi, const Matrix& A) {
    return std::sqrt(l2pi_inner(pi, A, A));
}

} // namespace lrmc

#pragma once

#include <Eigen/Dense>

namespace lrmc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct ThinSvd {
    Matrix U;
    Vector s; // nonincreasing
    Matrix V;
};

ThinSvd thin_svd(const Matrix& A);

/// Schatten-1 norm.
double nuclear_norm(const Matrix& A);
/// Largest singular value.
double spectral_norm(const Matrix& A);

/// Number of singular values above `rel_tol * sigma_max`.
int numerical_rank(const Matrix& A, double rel_tol = 1e-10);

/// Orthonormal basis of the column space of `A`, truncated at `rel_tol`.
Matrix column_basis(const Matrix& A, double rel_tol = 1e-12);

/// Frobenius inner product tr(A^T B).
inline double trace_inner(const Matrix& A, const Matrix& B) { return A.cwiseProduct(B).sum(); }

} // namespace lrmc

#include "lrmc/linalg.hpp"

#include <Eigen/SVD>

#include <algorithm>

namespace lrmc {

ThinSvd thin_svd(const Matrix& A) {
    Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

double nuclear_norm(const Matrix& A) {
    if (A.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Matrix>(A).singularValues().sum();
}

double spectral_norm(const Matrix& A) {
    if (A.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Matrix>(A).singularValues()(0);
}

int numerical_rank(const Matrix& A, double rel_tol) {
    if (A.size() == 0) return 0;
    const Vector s = Eigen::JacobiSVD<Matrix>(A).singularValues();
    if (s(0) == 0.0) return 0;
    return static_cast<int>((s.array() > rel_tol * s(0)).count());
}

Matrix column_basis(const Matrix& A, double rel_tol) {
    if (A.size() == 0) return Matrix(A.rows(), 0);
    const ThinSvd svd = thin_svd(A);
    int k = 0;
    if (svd.s(0) > 0.0) {
        while (k < svd.s.size() && svd.s(k) > rel_tol * svd.s(0)) ++k;
    }
    return svd.U.leftCols(k);
}

} // namespace lrmc

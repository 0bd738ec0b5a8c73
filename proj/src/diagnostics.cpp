#include "lrmc/diagnostics.hpp"

#include "lrmc/errors.hpp"
#include "lrmc/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace lrmc {

namespace {

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Philox4x32& engine) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix M(rows, cols);
    for (Eigen::Index k = 0; k < cols; ++k)
        for (Eigen::Index j = 0; j < rows; ++j) M(j, k) = normal(engine);
    return M;
}

} // namespace

KappaPair kappa1(const SamplingDistribution& pi) {
    return {std::sqrt(pi.min_prob()), std::sqrt(pi.max_prob())};
}

// ---------------------------------------------------------------------------
// kappa_r search
// ---------------------------------------------------------------------------

namespace {

/// Best factor U for a fixed orthonormal right factor Q, i.e. the extreme
/// eigenpair of the row-blocks N_j = sum_k pi(j,k) q_k q_k^T.
/// Returns the ratio ||B||^2_{L2(Pi)} / ||B||^2_2 and writes B = U Q^T.
double best_left_factor(const Matrix& P, const Matrix& Q, bool minimize, Matrix& B) {
    const Eigen::Index q = Q.cols();
    double best = minimize ? std::numeric_limits<double>::infinity() : -1.0;
    Eigen::Index best_row = 0;
    Vector best_vec = Vector::Zero(q);
    for (Eigen::Index j = 0; j < P.rows(); ++j) {
        const Matrix N = Q.transpose() * P.row(j).transpose().asDiagonal() * Q;
        Eigen::SelfAdjointEigenSolver<Matrix> eig(N);
        const Eigen::Index idx = minimize ? 0 : q - 1;
        const double value = eig.eigenvalues()(idx);
        if (minimize ? value < best : value > best) {
            best = value;
            best_row = j;
            best_vec = eig.eigenvectors().col(idx);
        }
    }
    B = Matrix::Zero(P.rows(), Q.rows());
    B.row(best_row) = (Q * best_vec).transpose();
    return best;
}

double alternate(const Matrix& P, Matrix V, bool minimize) {
    Matrix B;
    double current = minimize ? std::numeric_limits<double>::infinity() : -1.0;
    for (int iter = 0; iter < 100; ++iter) {
        // Left update with V fixed, then right update with the new left factor fixed.
        Matrix Q = column_basis(V);
        if (Q.cols() == 0) break;
        best_left_factor(P, Q, minimize, B);
        Matrix Ub = column_basis(B);
        Matrix Bt;
        const double value = best_left_factor(P.transpose(), Ub, minimize, Bt);
        const bool improved = minimize ? value < current - 1e-15 : value > current + 1e-15;
        current = minimize ? std::min(current, value) : std::max(current, value);
        if (!improved) break;
        V = Bt;
    }
    return current;
}

} // namespace

KappaPair kappa_r_heuristic(const SamplingDistribution& pi, int r, int restarts, std::uint64_t seed) {
    const Dimensions d = pi.dims();
    if (r < 1 || r > d.min_dim()) throw ValidationError("kappa_r_heuristic: r must lie in [1, min(m1, m2)]");
    if (restarts < 0) throw ValidationError("kappa_r_heuristic: restarts must be >= 0");
    const Matrix& P = pi.pmf();
    Philox4x32 engine(seed, 0);

    double lo = std::numeric_limits<double>::infinity();
    double hi = -1.0;
    for (int rank = 1; rank <= r; ++rank) {
        std::vector<Matrix> starts;
        for (int k = 0; k < d.m2; ++k) {
            Matrix V = gaussian_matrix(d.m2, rank, engine) * 1e-3;
            V.col(0) = Vector::Unit(d.m2, k);
            starts.push_back(std::move(V));
        }
        for (int s = 0; s < restarts; ++s) starts.push_back(gaussian_matrix(d.m2, rank, engine));
        for (const auto& V : starts) {
            lo = std::min(lo, alternate(P, V, true));
            hi = std::max(hi, alternate(P, V, false));
        }
    }
    return {std::sqrt(std::max(lo, 0.0)), std::sqrt(std::max(hi, 0.0))};
}

// ---------------------------------------------------------------------------
// rho search
// ---------------------------------------------------------------------------

double coherence_ratio(const SamplingDistribution& pi, const Matrix& A, const Matrix& B) {
    const double na = nuclear_norm(A);
    const double nb = nuclear_norm(B);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::abs(l2pi_inner(pi, A, B)) / (na * nb);
}

namespace {

/// Removes the trace-inner-product component of `X` along `Y`.
void orthogonalize(Matrix& X, const Matrix& Y) {
    const double yy = Y.squaredNorm();
    if (yy > 0.0) X -= (trace_inner(X, Y) / yy) * Y;
}

struct Pair {
    Matrix A;
    Matrix B;
    double value = 0.0;
};

Matrix nuclear_subgradient(const Matrix& A) {
    const ThinSvd svd = thin_svd(A);
    int k = 0;
    while (k < svd.s.size() && svd.s(k) > 1e-12 * svd.s(0)) ++k;
    return svd.U.leftCols(k) * svd.V.leftCols(k).transpose();
}

/// Signed objective <A,B>_{L2(Pi)} / (||A||_1 ||B||_1) after making the pair orthogonal.
double signed_ratio(const SamplingDistribution& pi, const Matrix& A, const Matrix& B) {
    const double na = nuclear_norm(A);
    const double nb = nuclear_norm(B);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return l2pi_inner(pi, A, B) / (na * nb);
}

Pair polish(const SamplingDistribution& pi, Matrix A, Matrix B, int iterations) {
    orthogonalize(B, A);
    if (A.norm() == 0.0 || B.norm() == 0.0) return {A, B, 0.0};
    A /= A.norm();
    B /= B.norm();
    if (l2pi_inner(pi, A, B) < 0.0) B = -B;
    double f = signed_ratio(pi, A, B);
    double step = 0.1;

    auto ascend = [&](Matrix& X, const Matrix& Y, bool x_is_first) {
        const double nx = nuclear_norm(X);
        const double ny = nuclear_norm(Y);
        Matrix g = (pi.pmf().array() * Y.array()).matrix() / (nx * ny) - (f / nx) * nuclear_subgradient(X);
        orthogonalize(g, Y);
        const double gn = g.norm();
        if (gn < 1e-15) return false;
        g /= gn;
        while (step > 1e-12) {
            Matrix trial = X + step * g;
            orthogonalize(trial, Y);
            trial /= trial.norm();
            const double ft = x_is_first ? signed_ratio(pi, trial, Y) : signed_ratio(pi, Y, trial);
            if (ft > f) {
                X = std::move(trial);
                f = ft;
                step = std::min(1.0, step * 1.5);
                return true;
            }
            step *= 0.5;
        }
        return false;
    };

    for (int it = 0; it < iterations && step > 1e-12; ++it) {
        const bool moved_a = ascend(A, B, true);
        const bool moved_b = ascend(B, A, false);
        if (!moved_a && !moved_b) break;
    }
    orthogonalize(B, A);
    return {A, B, coherence_ratio(pi, A, B)};
}

} // namespace

RhoResult rho_search(const SamplingDistribution& pi, int restarts, std::uint64_t seed,
                     const std::vector<std::pair<Matrix, Matrix>>& seeds) {
    if (restarts < 0) throw ValidationError("rho_search: restarts must be >= 0");
    const Dimensions d = pi.dims();
    const Matrix& P = pi.pmf();
    std::vector<std::pair<Matrix, Matrix>> starts;

    // Two-entry witnesses A = E_p + E_q, B = E_p - E_q: ratio |pi_p - pi_q| / 2 when
    // p and q share a row or column (nuclear norms sqrt 2), / 4 otherwise.
    auto two_entry = [&](int j1, int k1, int j2, int k2) {
        Matrix A = Matrix::Zero(d.m1, d.m2), B = Matrix::Zero(d.m1, d.m2);
        A(j1, k1) = 1.0;
        A(j2, k2) += 1.0;
        B(j1, k1) = 1.0;
        B(j2, k2) -= 1.0;
        starts.emplace_back(std::move(A), std::move(B));
    };
    Eigen::Index jmax, kmax, jmin, kmin;
    P.maxCoeff(&jmax, &kmax);
    P.minCoeff(&jmin, &kmin);
    if (jmax != jmin || kmax != kmin) two_entry(int(jmax), int(kmax), int(jmin), int(kmin));
    if (d.m2 > 1) {
        Eigen::Index best_row = 0;
        double best_gap = -1.0;
        for (Eigen::Index j = 0; j < d.m1; ++j) {
            const double gap = P.row(j).maxCoeff() - P.row(j).minCoeff();
            if (gap > best_gap) best_gap = gap, best_row = j;
        }
        Eigen::Index ka, kb;
        P.row(best_row).maxCoeff(&ka);
        P.row(best_row).minCoeff(&kb);
        if (ka == kb) kb = (ka + 1) % d.m2;
        two_entry(int(best_row), int(ka), int(best_row), int(kb));
    }
    if (d.m1 > 1) {
        Eigen::Index best_col = 0;
        double best_gap = -1.0;
        for (Eigen::Index k = 0; k < d.m2; ++k) {
            const double gap = P.col(k).maxCoeff() - P.col(k).minCoeff();
            if (gap > best_gap) best_gap = gap, best_col = k;
        }
        Eigen::Index ja, jb;
        P.col(best_col).maxCoeff(&ja);
        P.col(best_col).minCoeff(&jb);
        if (ja == jb) jb = (ja + 1) % d.m1;
        two_entry(int(ja), int(best_col), int(jb), int(best_col));
    }
    Philox4x32 engine(seed, 0);
    for (int s = 0; s < restarts; ++s) {
        starts.emplace_back(gaussian_matrix(d.m1, d.m2, engine), gaussian_matrix(d.m1, d.m2, engine));
    }
    for (const auto& s : seeds) {
        if (s.first.rows() != d.m1 || s.first.cols() != d.m2 || s.second.rows() != d.m1 || s.second.cols() != d.m2) {
            throw ValidationError("rho_search: seed pair shape does not match the sampling distribution");
        }
        starts.push_back(s);
    }

    RhoResult best;
    best.A = Matrix::Zero(d.m1, d.m2);
    best.B = Matrix::Zero(d.m1, d.m2);
    best.restarts = restarts;
    best.starts = static_cast<int>(starts.size());
    for (const auto& [A0, B0] : starts) {
        Matrix A = A0, B = B0;
        orthogonalize(B, A);
        const double initial = coherence_ratio(pi, A, B);
        if (initial > best.value) {
            best.value = initial;
            best.A = A;
            best.B = B;
        }
        Pair p = polish(pi, A, B, 300);
        if (p.value > best.value) {
            best.value = p.value;
            best.A = std::move(p.A);
            best.B = std::move(p.B);
        }
    }
    return best;
}

const char* to_string(CertificateStatus status) {
    switch (status) {
    case CertificateStatus::holds: return "holds";
    case CertificateStatus::not_refuted: return "not_refuted";
    case CertificateStatus::refuted: return "refuted";
    }
    return "not_refuted";
}

IncoherenceCertificate check_assumption_incoherence(double kappa1_value, double rho_value, double c0, double alpha,
                                                    int r, bool rho_exact) {
    if (!(alpha > 1.0)) throw ValidationError("check_assumption_incoherence: alpha must be > 1");
    if (!(c0 >= 0.0)) throw ValidationError("check_assumption_incoherence: c0 must be >= 0");
    if (r < 1) throw ValidationError("check_assumption_incoherence: r must be >= 1");
    IncoherenceCertificate cert;
    cert.rho = rho_value;
    cert.c0 = c0;
    cert.alpha = alpha;
    cert.r = r;
    cert.rho_exact = rho_exact;
    cert.threshold = kappa1_value * kappa1_value / ((1.0 + 2.0 * c0) * alpha * r);
    if (rho_value > cert.threshold) {
        cert.status = CertificateStatus::refuted;
    } else {
        cert.status = rho_exact ? CertificateStatus::holds : CertificateStatus::not_refuted;
    }
    return cert;
}

// ---------------------------------------------------------------------------
// Projectors
// ---------------------------------------------------------------------------

ProjectorPair ProjectorPair::from_truth(const GroundTruth& truth) {
    ProjectorPair p{truth.left, truth.right};
    p.validate();
    return p;
}

void ProjectorPair::validate() const {
    if (S1.cols() != S2.cols()) throw ValidationError("ProjectorPair: bases must have the same number of columns");
    const Eigen::Index r = S1.cols();
    if (r == 0) return;
    const Matrix I = Matrix::Identity(r, r);
    if ((S1.transpose() * S1 - I).cwiseAbs().maxCoeff() > 1e-10 ||
        (S2.transpose() * S2 - I).cwiseAbs().maxCoeff() > 1e-10) {
        throw ValidationError("ProjectorPair: bases must have orthonormal columns");
    }
}

Matrix ProjectorPair::complement(const Matrix& B) const {
    // (I - S1 S1^T) B (I - S2 S2^T), expanded to avoid forming m x m projectors.
    const Matrix BS2 = B * S2;
    Matrix left = B - S1 * (S1.transpose() * B);
    return left - (BS2 - S1 * (S1.transpose() * BS2)) * S2.transpose();
}

ProjectedParts projector_decompose(const GroundTruth& truth, const Matrix& B) {
    if (B.rows() != truth.dims.m1 || B.cols() != truth.dims.m2) {
        throw ValidationError("projector_decompose: matrix shape does not match the ground truth");
    }
    const ProjectorPair proj = ProjectorPair::from_truth(truth);
    ProjectedParts parts;
    parts.complement = proj.complement(B);
    parts.on_support = B - parts.complement;
    return parts;
}

bool cone_membership(const GroundTruth& truth, const Matrix& B, double c0, double slack) {
    if (!(c0 >= 0.0)) throw ValidationError("cone_membership: c0 must be >= 0");
    const ProjectedParts parts = projector_decompose(truth, B);
    return nuclear_norm(parts.complement) <= c0 * nuclear_norm(parts.on_support) + slack;
}

MuResult mu_c0_search(const SamplingDistribution& pi, const GroundTruth& truth, double c0, int samples,
                      std::uint64_t seed) {
    if (!(c0 >= 0.0)) throw ValidationError("mu_c0_search: c0 must be >= 0");
    if (!(pi.dims() == truth.dims)) throw ValidationError("mu_c0_search: dims mismatch");
    const Dimensions d = pi.dims();
    const ProjectorPair proj = ProjectorPair::from_truth(truth);
    MuResult best;
    best.witness = Matrix::Zero(d.m1, d.m2);

    auto consider = [&](const Matrix& support_part, const Matrix& comp_part) {
        const double num = support_part.norm();
        if (num == 0.0) return;
        const double a = l2pi_inner(pi, support_part, support_part);
        double s = 0.0;
        const double comp_nuc = nuclear_norm(comp_part);
        if (comp_nuc > 0.0) {
            const double s_max = c0 * nuclear_norm(support_part) / comp_nuc;
            const double b = l2pi_inner(pi, support_part, comp_part);
            const double c = l2pi_inner(pi, comp_part, comp_part);
            s = std::clamp(-b / c, -s_max, s_max);
        }
        const Matrix B = support_part + s * comp_part;
        const double denom = l2pi_norm(pi, B);
        const double ratio = denom > 0.0 ? num / denom : 0.0;
        (void)a;
        ++best.samples;
        if (ratio > best.value) {
            best.value = ratio;
            best.witness = B;
        }
    };

    if (truth.rank() > 0) {
        const Matrix A0 = truth.matrix();
        consider(A0 / A0.norm(), Matrix::Zero(d.m1, d.m2));
    }
    Philox4x32 engine(seed, 0);
    std::uniform_int_distribution<int> row(0, d.m1 - 1), col(0, d.m2 - 1);
    for (int i = 0; i < samples; ++i) {
        Matrix B0, W;
        switch (i % 3) {
        case 0:
            B0 = gaussian_matrix(d.m1, d.m2, engine);
            W = gaussian_matrix(d.m1, d.m2, engine);
            break;
        case 1: {
            // Mass on single entries probes the sparsest directions of Pi.
            B0 = Matrix::Zero(d.m1, d.m2);
            B0(row(engine), col(engine)) = 1.0;
            W = Matrix::Zero(d.m1, d.m2);
            W(row(engine), col(engine)) = 1.0;
            break;
        }
        default: {
            B0 = Matrix::Zero(d.m1, d.m2);
            Eigen::Index j, k;
            pi.pmf().minCoeff(&j, &k);
            B0(j, k) = 1.0;
            B0 += 0.1 * gaussian_matrix(d.m1, d.m2, engine);
            W = gaussian_matrix(d.m1, d.m2, engine);
            break;
        }
        }
        consider(proj.support(B0), proj.complement(W));
    }
    return best;
}

// ---------------------------------------------------------------------------
// Stochastic errors
// ---------------------------------------------------------------------------

StochasticErrors stochastic_errors(const SamplingDistribution& pi, const Dataset& data, const GroundTruth& truth,
                                   const std::vector<double>& noise_draws) {
    if (!(pi.dims() == data.dims) || !(truth.dims == data.dims)) {
        throw ValidationError("stochastic_errors: dims of pi, data and truth must agree");
    }
    if (noise_draws.size() != data.n()) throw ValidationError("stochastic_errors: need one noise draw per observation");
    if (data.n() == 0) throw ValidationError("stochastic_errors: empty dataset");
    const Matrix A0 = truth.matrix();
    const double inv_n = 1.0 / static_cast<double>(data.n());
    StochasticErrors out;
    out.M1 = Matrix::Zero(data.dims.m1, data.dims.m2);
    Matrix sampled = Matrix::Zero(data.dims.m1, data.dims.m2);
    for (std::size_t i = 0; i < data.n(); ++i) {
        const auto& e = data.entries[i];
        out.M1(e.row, e.col) += noise_draws[i];
        sampled(e.row, e.col) += A0(e.row, e.col);
    }
    out.M1 *= inv_n;
    out.M2 = sampled * inv_n - (pi.pmf().array() * A0.array()).matrix();
    return out;
}

StochasticErrors stochastic_errors(const SamplingDistribution& pi, const Dataset& data, const GroundTruth& truth) {
    if (!(truth.dims == data.dims)) throw ValidationError("stochastic_errors: dims of data and truth must agree");
    const Matrix A0 = truth.matrix();
    std::vector<double> xi;
    xi.reserve(data.n());
    for (const auto& e : data.entries) {
        if (e.row < 0 || e.row >= data.dims.m1 || e.col < 0 || e.col >= data.dims.m2) {
            throw ValidationError("stochastic_errors: observation index outside dims");
        }
        xi.push_back(e.value - A0(e.row, e.col));
    }
    return stochastic_errors(pi, data, truth, xi);
}

double bernstein_bound_bounded(double sigma_Z, double U, double n, double m, double t) {
    if (!(sigma_Z > 0.0) || !(U > 0.0) || !(n > 0.0) || !(m > 0.0) || !(t > 0.0)) {
        throw ValidationError("bernstein_bound_bounded: all inputs must be positive");
    }
    const double tl = (t + std::log(m)) / n;
    return 2.0 * std::max(sigma_Z * std::sqrt(tl), U * tl);
}

double bernstein_bound_psi(double sigma_Z, double U_beta, double beta, double n, double m, double t, double C) {
    if (!(sigma_Z > 0.0) || !(n > 0.0) || !(m > 0.0) || !(t > 0.0) || !(C > 0.0)) {
        throw ValidationError("bernstein_bound_psi: sigma_Z, n, m, t, C must be positive");
    }
    if (!(beta >= 1.0)) throw ValidationError("bernstein_bound_psi: beta must be >= 1");
    if (U_beta < sigma_Z) throw ValidationError("bernstein_bound_psi: U_beta < sigma_Z makes log(U_beta/sigma_Z) negative");
    const double tl = (t + std::log(m)) / n;
    const double lg = std::log(U_beta / sigma_Z);
    const double log_factor = lg == 0.0 ? 0.0 : std::pow(lg, 1.0 / beta);
    return C * std::max(sigma_Z * std::sqrt(tl), U_beta * log_factor * tl);
}

double noise_error_shape(Dimensions dims, double n, double sigma, double beta, double t) {
    if (!(n > 0.0) || !(t > 0.0)) throw ValidationError("noise_error_shape: n and t must be positive");
    const double tl = t + std::log(static_cast<double>(dims.m()));
    const double mn = dims.min_dim();
    const double log_factor = std::isinf(beta) ? (mn > 1 ? 1.0 : 0.0) : std::pow(std::log(mn), 1.0 / beta);
    return sigma * std::max(std::sqrt(tl / (mn * n)), tl * log_factor / n);
}

double sampling_error_bound(Dimensions dims, double n, double c1_prime, double a, double t) {
    if (!(n > 0.0) || !(t > 0.0)) throw ValidationError("sampling_error_bound: n and t must be positive");
    const double tl = t + std::log(static_cast<double>(dims.m()));
    return 2.0 * c1_prime * a * std::max(std::sqrt(tl / (dims.min_dim() * n)), 2.0 * tl / n);
}

double theorem1_bound(double lambda, double kappa1_value, double alpha) {
    if (!(alpha > 1.0)) throw ValidationError("theorem1_bound: alpha must be > 1");
    if (!(kappa1_value > 0.0)) throw ValidationError("theorem1_bound: kappa1 must be > 0");
    const double constant = 5.0 / 6.0 + 6.0 * std::sqrt(2.0) / (11.0 * (alpha - 1.0));
    return constant * lambda / (kappa1_value * kappa1_value);
}

double klt_l2pi_bound(double lambda, double mu, int rank) {
    if (rank < 0) throw ValidationError("klt_l2pi_bound: rank must be >= 0");
    return lambda * mu * std::sqrt(static_cast<double>(rank));
}

// ---------------------------------------------------------------------------

DiagnosticsReport diagnose(const SamplingDistribution& pi, const GroundTruth* truth, const Dataset* data,
                           const DiagnosticsOptions& options) {
    DiagnosticsReport rep;
    rep.dims = pi.dims();
    rep.seed = options.seed;
    rep.search_restarts = options.restarts;
    const KappaPair k = kappa1(pi);
    rep.kappa1 = k.kappa;
    rep.kappa1_prime = k.kappa_prime;
    rep.kappa1_search = kappa_r_heuristic(pi, 1, options.restarts, derive_seed(options.seed, 1));
    rep.c1 = pi.c1();
    rep.c1_prime = pi.c1_prime();
    rep.rho_exact = pi.is_uniform();
    rep.rho = rho_search(pi, options.restarts, derive_seed(options.seed, 2));
    const double rho_value = rep.rho_exact ? 0.0 : rep.rho.value;
    const int r = truth ? std::max(1, truth->rank()) : std::max(1, options.rank);
    rep.assumption1 = check_assumption_incoherence(rep.kappa1, rho_value, options.c0, options.alpha, r, rep.rho_exact);
    rep.mu_cap = std::sqrt(options.alpha / (options.alpha - 1.0)) / rep.kappa1;
    if (truth) {
        if (!(truth->dims == pi.dims())) throw ValidationError("diagnose: truth dims differ from sampling distribution");
        rep.mu_c0 = mu_c0_search(pi, *truth, options.c0, options.mu_samples, derive_seed(options.seed, 3));
    }
    rep.lambda = options.lambda;
    if (truth && data) {
        const StochasticErrors err = stochastic_errors(pi, *data, *truth);
        rep.M1_norm = spectral_norm(err.M1);
        rep.M2_norm = spectral_norm(err.M2);
        if (options.lambda) rep.oracle_event = *options.lambda >= 3.0 * spectral_norm(err.M1 + err.M2);
    }
    rep.bernstein.t = options.t;
    rep.bernstein.sigma_X_squared =
        std::max(pi.pmf().rowwise().sum().maxCoeff(), pi.pmf().colwise().sum().maxCoeff());
    if (data) {
        const double n = static_cast<double>(data->n());
        rep.bernstein.noise_shape = noise_error_shape(pi.dims(), n, 1.0, 2.0, options.t);
        if (truth) rep.bernstein.sampling_bound = sampling_error_bound(pi.dims(), n, rep.c1_prime, truth->entry_bound, options.t);
    }
    return rep;
}

} // namespace lrmc

#include "lrmc/errors.hpp"
#include "lrmc/linalg.hpp"
#include "lrmc/lowerbound.hpp"
#include "lrmc/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace lrmc;

namespace {

double min_pairwise_spectral(const PackingSet& p) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < p.members.size(); ++i)
        for (std::size_t j = i + 1; j < p.members.size(); ++j)
            best = std::min(best, spectral_norm(p.members[i] - p.members[j]));
    return best;
}

} // namespace

TEST(BuildPacking, ReferenceCardinality) {
    const PackingSet p = build_packing({8, 8}, 2, 1.0, 1.0, 64, 0.125, 1);
    EXPECT_EQ(p.target_cardinality, 5u);
    EXPECT_GE(p.cardinality(), 5u);
    EXPECT_TRUE(p.members[0].isZero(0));
    EXPECT_EQ(p.hamming_floor, 2);
    EXPECT_GE(p.min_hamming, p.hamming_floor);
    EXPECT_EQ(p.tiles, 4);
    EXPECT_EQ(p.effective_short_dim(), 8);
    EXPECT_NEAR(p.delta, 0.125 / std::sqrt(2.0) * std::sqrt(16.0 / 64), 1e-15);
}

TEST(BuildPacking, PairwiseFrobeniusBracket) {
    for (auto dims : {Dimensions{8, 8}, Dimensions{16, 6}, Dimensions{5, 16}}) {
        const int r = 2;
        const std::size_t n = 400;
        const double gamma = 0.5, sigma = 0.8, a = 1.5;
        const PackingSet p = build_packing(dims, r, sigma, a, n, gamma, 3);
        const double M = dims.max_dim();
        const double N_eff = r * (dims.min_dim() / r);
        const double s = std::min(sigma, a);
        const double lower = gamma * gamma / 16 * s * s * M * M * r * N_eff / n;
        const double upper = gamma * gamma * s * s * M * M * r * N_eff / n;
        for (std::size_t i = 0; i < p.members.size(); ++i) {
            EXPECT_EQ(p.members[i].rows(), dims.m1);
            EXPECT_EQ(p.members[i].cols(), dims.m2);
            for (std::size_t j = i + 1; j < p.members.size(); ++j) {
                const double d2 = (p.members[i] - p.members[j]).squaredNorm();
                EXPECT_GE(d2, lower * (1 - 1e-12));
                EXPECT_LE(d2, upper * (1 + 1e-12));
            }
        }
    }
}

TEST(BuildPacking, MembersInClass) {
    const PackingSet p = build_packing({12, 9}, 3, 1.0, 0.7, 100, 1.0, 5);
    for (const auto& A : p.members) {
        EXPECT_LE(numerical_rank(A), 3);
        EXPECT_LE(A.cwiseAbs().maxCoeff(), 0.7);
        EXPECT_TRUE((A.array() == 0.0 || A.array() == p.delta).all());
    }
}

TEST(BuildPacking, DeterministicPerSeed) {
    const PackingSet a = build_packing({8, 8}, 2, 1.0, 1.0, 64, 0.5, 9);
    const PackingSet b = build_packing({8, 8}, 2, 1.0, 1.0, 64, 0.5, 9);
    EXPECT_EQ(a.codewords, b.codewords);
    ASSERT_EQ(a.members.size(), b.members.size());
    for (std::size_t i = 0; i < a.members.size(); ++i) EXPECT_TRUE(a.members[i] == b.members[i]);
}

TEST(BuildPacking, RejectsInvalidArguments) {
    EXPECT_THROW(build_packing({8, 8}, 2, 1, 1, 15, 0.5, 1), ValidationError);
    EXPECT_THROW(build_packing({8, 8}, 0, 1, 1, 64, 0.5, 1), ValidationError);
    EXPECT_THROW(build_packing({8, 8}, 9, 1, 1, 640, 0.5, 1), ValidationError);
    EXPECT_THROW(build_packing({8, 8}, 2, 1, 1, 64, 1.5, 1), ValidationError);
    EXPECT_THROW(build_packing({8, 8}, 2, 1, 1, 64, 0.0, 1), ValidationError);
    EXPECT_THROW(build_packing({8, 8}, 2, 0, 1, 64, 0.5, 1), ValidationError);
    EXPECT_THROW(build_packing({8, 8}, 2, 1, 1, 64, 0.5, 1, 1), ValidationError);
}

TEST(KlGaussian, Examples) {
    const auto pi = uniform_distribution({4, 5});
    EXPECT_EQ(kl_gaussian(pi, Matrix::Zero(4, 5), 1.0, 100), 0.0);
    EXPECT_NEAR(kl_gaussian(pi, Matrix::Ones(4, 5), 1.0, 100), 50.0, 1e-12);
    const auto skew = power_law_distribution({4, 5}, 1, 1, 0.1);
    const Matrix A = Matrix::Random(4, 5);
    EXPECT_NEAR(kl_gaussian(skew, 2 * A, 0.7, 30), 4 * kl_gaussian(skew, A, 0.7, 30), 1e-12);
    EXPECT_NEAR(kl_gaussian(skew, A, 0.7, 30) + kl_gaussian(skew, A, 0.7, 70), kl_gaussian(skew, A, 0.7, 100), 1e-12);
}

TEST(PackingConditions, ReferenceInstancePasses) {
    const auto pi = uniform_distribution({8, 8});
    const GammaSearch g = search_gamma({8, 8}, 2, 1.0, 1.0, 64, pi, 1.0 / 16, 1);
    EXPECT_TRUE(g.report.all_pass());
    EXPECT_TRUE(g.report.kl.pass && g.report.frobenius_lower.pass && g.report.frobenius_upper.pass);
    EXPECT_TRUE(g.report.spectral.pass && g.report.l2pi.pass && g.report.class_ok && g.report.cardinality_ok);
    EXPECT_FALSE(g.report.trivial);
    EXPECT_GE(g.report.cardinality, 5u);
    EXPECT_EQ(g.tried.back(), g.packing.gamma);
    for (std::size_t i = 1; i < g.tried.size(); ++i) EXPECT_DOUBLE_EQ(g.tried[i], g.tried[i - 1] * 0.5);
}

TEST(PackingConditions, KlAverageMatchesDirectSum) {
    const auto pi = power_law_distribution({8, 8}, 0.5, 0.5, 0.2);
    const PackingSet p = build_packing({8, 8}, 2, 1.0, 1.0, 64, 0.25, 2);
    const PackingReport r = check_packing_conditions(p, pi, 1.0, 0.5);
    double sum = 0.0;
    for (std::size_t i = 1; i < p.members.size(); ++i) sum += 64 / 2.0 * std::pow(l2pi_norm(pi, p.members[i]), 2);
    const double avg = sum / static_cast<double>(p.members.size() - 1);
    EXPECT_NEAR(r.kl.observed, avg, 1e-12);
    EXPECT_NEAR(r.kl.bound, 0.5 * std::log(static_cast<double>(p.members.size() - 1)), 1e-12);
    EXPECT_EQ(r.kl.pass, avg <= r.kl.bound);
    EXPECT_NEAR(r.c1, pi.c1(), 1e-14);
    EXPECT_NEAR(r.spectral.observed, min_pairwise_spectral(p), 1e-12);
}

TEST(PackingConditions, TrivialPackingIsVacuous) {
    PackingSet p = build_packing({8, 8}, 2, 1.0, 1.0, 64, 0.5, 1);
    p.members.resize(1);
    p.codewords.resize(1);
    const PackingReport r = check_packing_conditions(p, uniform_distribution({8, 8}), 1.0, 1.0 / 16);
    EXPECT_TRUE(r.trivial);
    EXPECT_TRUE(r.kl.pass && r.frobenius_lower.pass && r.frobenius_upper.pass && r.spectral.pass && r.l2pi.pass);
    EXPECT_FALSE(r.cardinality_ok);
}

TEST(PackingConditions, SeparationLinearInGamma) {
    const auto pi = uniform_distribution({8, 8});
    const PackingSet a = build_packing({8, 8}, 2, 1.0, 1.0, 64, 0.2, 4);
    const PackingSet b = build_packing({8, 8}, 2, 1.0, 1.0, 64, 0.4, 4);
    const PackingReport ra = check_packing_conditions(a, pi, 1.0, 1.0 / 16);
    const PackingReport rb = check_packing_conditions(b, pi, 1.0, 1.0 / 16);
    EXPECT_NEAR(rb.spectral.observed / ra.spectral.observed, 2.0, 1e-12);
    EXPECT_NEAR(rb.spectral.margin / ra.spectral.margin, 2.0, 1e-12);
}

TEST(PackingConditions, RateShapeIndependentOfN) {
    std::vector<double> ratios;
    for (std::size_t n : {64u, 256u, 1024u}) {
        const PackingSet p = build_packing({8, 8}, 2, 1.0, 1.0, n, 0.5, 6);
        const double scale = std::sqrt(64.0) * std::sqrt(8.0 * 2 / static_cast<double>(n));
        ratios.push_back(min_pairwise_spectral(p) / scale);
    }
    for (double r : ratios) {
        EXPECT_GT(r, 0.0);
        EXPECT_NEAR(r, ratios.front(), 1e-12);
    }
}

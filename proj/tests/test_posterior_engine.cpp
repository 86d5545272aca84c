#include <gtest/gtest.h>

#include <cmath>

#include "infkyle/posterior_engine.hpp"

using namespace infkyle;

namespace {

// mpmath quadrature of E[sigmoid(Z)] and E[sigmoid(Z) sigmoid(-Z)],
// Z ~ N(a^2, 2 a^2), at 30 significant digits.
struct Oracle {
    double alpha, phi1, phi2;
};
constexpr Oracle kOracle[] = {
    {0.5, 0.55593916284346498, 0.22203041857826751},
    {1.0, 0.67505670233756541, 0.1624716488312173},
    {2.0, 0.88449088903535219, 0.057754555482323905},
};

}  // namespace

TEST(SamplePosterior, ZeroTradingRecoversPrior) {
    const Vector xi = Eigen::Vector2d(1.3, -0.4);
    const auto s = sample_posterior(0.0, 2, 0, xi);
    EXPECT_EQ(s.q[0], 0.5);
    EXPECT_EQ(s.q[1], 0.5);
}

TEST(SamplePosterior, HandComputedSoftmax) {
    const auto s = sample_posterior(1.0, 2, 0, Vector::Zero(2));
    EXPECT_NEAR(s.q[0], std::exp(1.0) / (std::exp(1.0) + 1.0), 1e-15);
    EXPECT_NEAR(s.q[0], 0.7310585786300049, 1e-15);
}

TEST(SamplePosterior, SimplexAndPreconditions) {
    NormalStream rng(3);
    for (int t = 0; t < 200; ++t) {
        Vector xi(5);
        rng.fill(xi.data(), 5);
        const auto s = sample_posterior(2.5, 5, t % 5, xi);
        EXPECT_NEAR(s.q.sum(), 1.0, 1e-12);
        EXPECT_GE(s.q.minCoeff(), 0.0);
    }
    EXPECT_THROW(sample_posterior(-1.0, 2, 0, Vector::Zero(2)), Error);
    EXPECT_THROW(sample_posterior(1.0, 2, 2, Vector::Zero(2)), Error);
    EXPECT_THROW(sample_posterior(1.0, 3, 0, Vector::Zero(2)), Error);
}

TEST(SamplePosterior, BinaryLogRatioLaw) {
    const double a = 1.0;
    const CrnNoise noise(2, 50000, 17);
    ScalarStats st;
    for (std::size_t k = 0; k < noise.size(); ++k) {
        const auto s = sample_posterior(a, 2, 0, Vector(noise.draw(k)));
        st.add(std::log(s.q[0] / s.q[1]));
    }
    const double n = static_cast<double>(st.n);
    EXPECT_NEAR(st.mean(), a * a, 3.0 * st.std_err());
    // Var of the sample variance for a normal: 2 sigma^4 / (n - 1).
    const double var = 2.0 * a * a;
    EXPECT_NEAR(st.variance(), var, 3.0 * var * std::sqrt(2.0 / (n - 1.0)));
}

TEST(PosteriorMoments, ZeroAlphaIsUniform) {
    for (int I : {2, 3, 7}) {
        const auto m = posterior_moments(0.0, I, 0, 20000, 5);
        for (int j = 0; j < I; ++j) EXPECT_NEAR(m.m1[j], 1.0 / I, 1e-12);
        EXPECT_LT(m.std_err_m1, 1e-9);
    }
}

TEST(PosteriorMoments, BinaryMatchesQuadratureOracle) {
    const CrnNoise noise(2, 200000, 2024);
    for (const auto& o : kOracle) {
        const auto m = posterior_moments(o.alpha, 0, noise);
        EXPECT_NEAR(m.m1[0], o.phi1, 3.0 * m.std_err_m1) << "alpha " << o.alpha;
        // For I = 2, (diag(q) - qq^T)_{11} = q1 q2, whose mean is phi2.
        EXPECT_NEAR(m.cbar(0, 0), o.phi2, 3.0 * m.std_err_m1) << "alpha " << o.alpha;
    }
}

TEST(PosteriorMoments, BinaryCovarianceIsMultipleOfQ) {
    const auto m = posterior_moments(1.3, 2, 1, 20000, 8);
    EXPECT_NEAR(m.cbar(0, 0), -m.cbar(0, 1), 1e-12);
    EXPECT_NEAR(m.cbar(1, 1), -m.cbar(1, 0), 1e-12);
    EXPECT_NEAR(m.cbar(0, 0), m.cbar(1, 1), 1e-12);
    // Q cbar Q = cbar here, so the diagonal entry is unchanged.
    EXPECT_NEAR(m.qcq_diag, m.cbar(1, 1), 1e-12);
}

TEST(PosteriorMoments, InvariantsAndExchangeability) {
    const int I = 5;
    const auto m = posterior_moments(1.7, I, 2, 50000, 99);
    EXPECT_NEAR(m.m1.sum(), 1.0, 3.0 * m.std_err_m1 + 1e-12);
    for (int j = 0; j < I; ++j) {
        EXPECT_GE(m.m1[j], 0.0);
        EXPECT_LE(m.m1[j], 1.0);
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> es(m.cbar);
    EXPECT_GE(es.eigenvalues().minCoeff(), -3.0 * m.std_err_m1);
    for (int a = 0; a < I; ++a)
        for (int b = a + 1; b < I; ++b) {
            if (a == 2 || b == 2) continue;
            const double se = std::hypot(m.m1_std_err[a], m.m1_std_err[b]);
            EXPECT_NEAR(m.m1[a], m.m1[b], 3.0 * se);
        }
    EXPECT_GT(m.m1[2], m.m1[0]);
}

TEST(PosteriorMoments, SeedDeterminismAndWorkerIndependence) {
    const auto a = posterior_moments(1.1, 4, 0, 40000, 123, 1);
    const auto b = posterior_moments(1.1, 4, 0, 40000, 123, 3);
    EXPECT_EQ(a.m1, b.m1);
    EXPECT_EQ(a.cbar, b.cbar);
    EXPECT_EQ(a.qcq_diag, b.qcq_diag);
    EXPECT_EQ(a.std_err_m1, b.std_err_m1);
    const auto c = posterior_moments(1.1, 4, 0, 40000, 124, 1);
    EXPECT_NE(a.m1[0], c.m1[0]);
}

TEST(PosteriorMoments, RejectsBadInput) {
    EXPECT_THROW(posterior_moments(1.0, 2, 0, 0, 1), Error);
    EXPECT_THROW(posterior_moments(-0.5, 2, 0, 100, 1), Error);
    EXPECT_THROW(posterior_moments(1.0, 2, 3, 100, 1), Error);
}

TEST(BinaryQuadrature, ZeroAlpha) {
    const auto m = binary_moments_quadrature(0.0, 200);
    EXPECT_EQ(m.phi1, 0.5);
    EXPECT_EQ(m.phi2, 0.25);
}

TEST(BinaryQuadrature, MatchesHighPrecisionOracle) {
    const auto rule = quadrature::gauss_hermite(200);
    for (const auto& o : kOracle) {
        const auto m = binary_moments_quadrature(o.alpha, rule);
        EXPECT_NEAR(m.phi1, o.phi1, 1e-10) << o.alpha;
        EXPECT_NEAR(m.phi2, o.phi2, 1e-10) << o.alpha;
        EXPECT_NEAR(m.phi1 + m.one_minus_phi1, 1.0, 1e-13);
    }
}

TEST(BinaryQuadrature, ConcentrationInTheTail) {
    const auto rule = quadrature::gauss_hermite(200);
    double p1 = 0.0, p2 = 1.0;
    for (double a = 3.0; a <= 10.0; a += 0.5) {
        const auto m = binary_moments_quadrature(a, rule);
        EXPECT_GT(m.phi1, p1);
        EXPECT_LT(m.phi2, p2);
        p1 = m.phi1;
        p2 = m.phi2;
    }
    EXPECT_GT(p1, 0.999);
    EXPECT_LT(p2, 1e-3);
}

TEST(BinaryQuadrature, LogitNormalIdentity) {
    // For Z ~ N(a^2, 2a^2): E[sigmoid(-Z)] = 2 E[sigmoid(Z) sigmoid(-Z)].
    const auto rule = quadrature::gauss_hermite(200);
    for (double a : {0.3, 0.8, 1.2, 1.9}) {
        const auto m = binary_moments_quadrature(a, rule);
        EXPECT_NEAR(m.one_minus_phi1, 2.0 * m.phi2, 1e-12) << a;
    }
}

TEST(BinaryQuadrature, RejectsShortRule) { EXPECT_THROW(binary_moments_quadrature(1.0, 32), Error); }

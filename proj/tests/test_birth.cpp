#include "cdmtt/birth.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>

using namespace cdmtt;
using namespace cdmtt::birth;

namespace {

LinearSde example1_sde() {
    LinearSde sde;
    sde.a.resize(2, 2);
    sde.a << 0, 1, 0, -0.2;
    sde.u.resize(2);
    sde.u << 0, 2;
    sde.l.resize(2, 1);
    sde.l << 0, 1;
    sde.q_beta = Matrix::Identity(1, 1);
    return sde;
}

BirthDeathParams example1_params() {
    BirthDeathParams p;
    p.lambda_appear = 0.08;
    p.mu_death = 0.01;
    p.mean_appear = Vector::Zero(2);
    p.cov_appear = Matrix::Identity(2, 2);
    return p;
}

/// Damped-position OU model, Hurwitz so that a stationary law exists.
LinearSde hurwitz_sde() {
    LinearSde sde;
    sde.a = Matrix::Zero(4, 4);
    sde.a << -0.05, 1, 0, 0,  //
        0, -0.3, 0, 0,        //
        0, 0, -0.08, 1,       //
        0, 0, 0, -0.2;
    sde.u.resize(4);
    sde.u << 0.5, 0.3, -1.0, 0.2;
    sde.l = Matrix::Zero(4, 2);
    sde.l(1, 0) = 1.0;
    sde.l(3, 1) = 1.0;
    sde.q_beta = Matrix::Identity(2, 2) * 0.4;
    return sde;
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(BirthMoments, FrozenDynamicsReturnAppearance) {
    LinearSde sde;
    sde.a = Matrix::Zero(2, 2);
    sde.u = Vector::Zero(2);
    sde.l = Matrix::Zero(2, 1);
    sde.q_beta = Matrix::Identity(1, 1);
    auto p = example1_params();
    p.mean_appear << 3, -1;
    p.cov_appear << 2, 0.5, 0.5, 1;
    const Gaussian g = birth_moments_linear(sde, p, 1.7);
    EXPECT_LT(max_abs(g.mean - p.mean_appear), 1e-12);
    EXPECT_LT(max_abs(g.cov - p.cov_appear), 1e-12);
}

TEST(BirthMoments, MatchesQuadratureOracle) {
    for (double dt : {0.5, 1.0, 2.0}) {
        const auto want = oracle::birth_moments(example1_sde(), example1_params(), dt);
        const Gaussian got = birth_moments_linear(example1_sde(), example1_params(), dt);
        EXPECT_LT(oracle::rel_err(got.mean, want.mean), 1e-8) << dt;
        EXPECT_LT(oracle::rel_err(got.cov, want.cov()), 1e-8) << dt;
    }
}

TEST(BirthMoments, CovarianceTermsMatchQuadratureIndividually) {
    std::mt19937_64 rng(4);
    LinearSde sde;
    sde.a = oracle::random_hurwitz(3, rng);
    sde.u = oracle::random_matrix(3, 1, rng).col(0);
    sde.l = oracle::random_matrix(3, 2, rng);
    sde.q_beta = oracle::random_psd(2, rng);
    BirthDeathParams p;
    p.lambda_appear = 1.0;
    p.mu_death = 0.3;
    p.mean_appear = oracle::random_matrix(3, 1, rng).col(0);
    p.cov_appear = oracle::random_psd(3, rng);
    const auto want = oracle::birth_moments(sde, p, 1.5);
    const BirthMomentTerms got = birth_moment_terms(sde, p, 1.5);
    EXPECT_LT(oracle::rel_err(got.mean, want.mean), 1e-6);
    EXPECT_LT(oracle::rel_err(got.expected_cond_cov, want.expected_cond_cov), 1e-6);
    EXPECT_LT(oracle::rel_err(got.cov_cond_mean, want.cov_cond_mean), 1e-6);
    const Gaussian combined = birth_moments_linear(sde, p, 1.5);
    EXPECT_LT(oracle::rel_err(combined.cov, got.expected_cond_cov + got.cov_cond_mean), 1e-9);
}

TEST(BirthMoments, ZeroOffsetMeanIsTheDriftBlockAlone) {
    auto sde = example1_sde();
    sde.u.setZero();
    auto p = example1_params();
    p.mean_appear << 1, 2;
    const double dt = 1.5;
    const double mu = p.mu_death;
    const double norm = mu / -std::expm1(-mu * dt);
    const oracle::Quadrature quad;
    const Matrix want = quad(
        [&](double t) -> Matrix { return norm * std::exp(-mu * t) * oracle::expm(sde.a * t) * p.mean_appear; }, 0.0,
        dt);
    EXPECT_LT(oracle::rel_err(birth_moments_linear(sde, p, dt).mean, want), 1e-9);
}

TEST(BirthMoments, FastDeathConcentratesLagAtZero) {
    auto p = example1_params();
    p.mean_appear << 5, 1;
    p.mu_death = 200.0;
    const Gaussian g = birth_moments_linear(example1_sde(), p, 1.0);
    EXPECT_LT(max_abs(g.mean - p.mean_appear), 1e-2 * max_abs(p.mean_appear));
    EXPECT_LT(max_abs(g.cov - p.cov_appear), 1e-2 * max_abs(p.cov_appear));
    p.mu_death = 1e3;
    EXPECT_THROW(birth_moments_linear(example1_sde(), p, 1.0), NumericalError);
}

TEST(BirthMoments, RejectsNonPositiveInterval) {
    EXPECT_THROW(birth_moments_linear(example1_sde(), example1_params(), 0.0), InvalidInput);
}

TEST(BirthAugmented, MatchesClosedForm) {
    for (double dt : {0.3, 1.0, 2.0}) {
        const Gaussian a = birth_moments_linear(example1_sde(), example1_params(), dt);
        const Gaussian b = birth_moments_augmented(example1_sde(), example1_params(), dt);
        EXPECT_LT(max_abs(a.mean - b.mean), 1e-8);
        EXPECT_LT(max_abs(a.cov - b.cov), 1e-8);
    }
}

TEST(BirthAugmented, ZeroOffsetNeedsNoAugmentation) {
    auto sde = example1_sde();
    sde.u.setZero();
    const Gaussian a = birth_moments_linear(sde, example1_params(), 1.0);
    const Gaussian b = birth_moments_augmented(sde, example1_params(), 1.0);
    EXPECT_LT(max_abs(a.mean - b.mean), 1e-12);
    EXPECT_LT(max_abs(a.cov - b.cov), 1e-12);
}

TEST(BirthAugmented, RandomModels) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 8; ++trial) {
        LinearSde sde;
        sde.a = oracle::random_hurwitz(4, rng);
        sde.u = oracle::random_matrix(4, 1, rng).col(0);
        if (trial % 2) sde.u(1) = 0.0;
        sde.l = oracle::random_matrix(4, 2, rng);
        sde.q_beta = oracle::random_psd(2, rng);
        BirthDeathParams p;
        p.lambda_appear = 0.5;
        p.mu_death = 0.05 + 0.1 * trial;
        p.mean_appear = oracle::random_matrix(4, 1, rng).col(0);
        p.cov_appear = oracle::random_psd(4, rng);
        const Gaussian a = birth_moments_linear(sde, p, 0.5);
        const Gaussian b = birth_moments_augmented(sde, p, 0.5);
        EXPECT_LT(max_abs(a.mean - b.mean), 1e-8);
        EXPECT_LT(max_abs(a.cov - b.cov), 1e-8);
    }
}

TEST(SampleBirth, LagsBecomeUniformAsDeathRateVanishes) {
    const std::size_t n = 200000;
    const auto lags = sample_birth_lags(1e-9, 1.0, n, 17);
    std::vector<double> counts(20, 0.0);
    for (double t : lags) {
        ASSERT_GE(t, 0.0);
        ASSERT_LT(t, 1.0);
        counts[static_cast<std::size_t>(t * 20)] += 1.0;
    }
    double chi2 = 0.0;
    const double expected = static_cast<double>(n) / 20.0;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    const boost::math::chi_squared dist(19);
    EXPECT_LT(chi2, boost::math::quantile(dist, 0.999));
}

TEST(SampleBirth, MomentsWithinMonteCarloBands) {
    const std::size_t n = 200000;
    const auto samples = sample_birth(example1_sde(), example1_params(), 1.0, n, 5);
    const Gaussian fit = sample_moments(samples);
    const Gaussian prop = birth_moments_linear(example1_sde(), example1_params(), 1.0);
    for (int i = 0; i < 2; ++i) {
        const double se = std::sqrt(prop.cov(i, i) / n);
        EXPECT_LT(std::abs(fit.mean(i) - prop.mean(i)), 3.0 * se) << i;
        // variance of a sample variance ~ 2 sigma^4 / n for near-Gaussian data
        const double se_var = std::sqrt(2.0 / n) * prop.cov(i, i) * 1.5;
        EXPECT_LT(std::abs(fit.cov(i, i) - prop.cov(i, i)), 3.0 * se_var) << i;
    }
}

TEST(SampleBirth, MomentFitIsCloseInKld) {
    for (double dt : {1.0, 2.0}) {
        const auto samples = sample_birth(example1_sde(), example1_params(), dt, 200000, 11);
        const Gaussian fit = sample_moments(samples);
        const Gaussian prop = birth_moments_linear(example1_sde(), example1_params(), dt);
        EXPECT_LE(gaussian_kld(fit, prop), 1e-4) << dt;
    }
}

TEST(SampleBirth, Deterministic) {
    const auto a = sample_birth(example1_sde(), example1_params(), 1.0, 1, 42);
    const auto b = sample_birth(example1_sde(), example1_params(), 1.0, 1, 42);
    ASSERT_EQ(a.size(), 1u);
    EXPECT_EQ(a[0], b[0]);
}

TEST(SteadyState, ScalarOu) {
    LinearSde sde;
    const double a = 0.4, m = 3.0, q = 0.8;
    sde.a = Matrix::Constant(1, 1, -a);
    sde.u = Vector::Constant(1, a * m);
    sde.l = Matrix::Identity(1, 1);
    sde.q_beta = Matrix::Constant(1, 1, q);
    const Gaussian g = steady_state_moments(sde);
    EXPECT_NEAR(g.mean(0), m, 1e-14);
    EXPECT_NEAR(g.cov(0, 0), q / (2 * a), 1e-14);
}

TEST(SteadyState, SymmetricCase) {
    std::mt19937_64 rng(8);
    LinearSde sde;
    sde.a = -Matrix::Identity(3, 3);
    sde.u = Vector::Zero(3);
    sde.l = oracle::random_matrix(3, 2, rng);
    sde.q_beta = oracle::random_psd(2, rng);
    const Gaussian g = steady_state_moments(sde);
    EXPECT_LT(max_abs(g.cov - sde.diffusion() / 2), 1e-12);
}

TEST(SteadyState, MatchesLongHorizonIntegral) {
    std::mt19937_64 rng(12);
    LinearSde sde;
    sde.a = oracle::random_hurwitz(4, rng, 0.2, 1.0);
    sde.u = oracle::random_matrix(4, 1, rng).col(0);
    sde.l = oracle::random_matrix(4, 2, rng);
    sde.q_beta = oracle::random_psd(2, rng);
    const Gaussian g = steady_state_moments(sde);
    const double slowest = (-sde.a.eigenvalues().real().array()).minCoeff();
    const Matrix qc = sde.diffusion();
    const oracle::Quadrature quad(1e-13, 1e-11);
    const Matrix horizon = quad(
        [&](double s) -> Matrix { return oracle::expm(sde.a * s) * qc * oracle::expm(sde.a * s).transpose(); }, 0.0,
        40.0 / slowest);
    EXPECT_LT(oracle::rel_err(g.cov, horizon), 1e-6);
    const Matrix residual = sde.a * g.cov + g.cov * sde.a.transpose() + sde.diffusion();
    EXPECT_LE(residual.norm(), 1e-9 * sde.diffusion().norm());
}

TEST(SteadyState, RejectsNonHurwitz) {
    auto sde = example1_sde();
    EXPECT_THROW(steady_state_moments(sde), NotApplicable);
}

TEST(SteadyState, Lemma3BirthEqualsStationaryLaw) {
    const auto sde = hurwitz_sde();
    const Gaussian inf = steady_state_moments(sde);
    BirthDeathParams p;
    p.lambda_appear = 0.1;
    p.mu_death = 0.01;
    p.mean_appear = inf.mean;
    p.cov_appear = inf.cov;
    for (double dt : {0.1, 1.0, 10.0}) {
        const Gaussian g = birth_moments_linear(sde, p, dt);
        EXPECT_LT(max_abs(g.mean - inf.mean), 1e-7 * std::max(1.0, max_abs(inf.mean))) << dt;
        EXPECT_LT(max_abs(g.cov - inf.cov), 1e-7 * std::max(1.0, max_abs(inf.cov))) << dt;
    }
}

TEST(Lyapunov, Residual) {
    std::mt19937_64 rng(31);
    for (int n = 1; n <= 6; ++n) {
        const Matrix a = oracle::random_hurwitz(n, rng);
        const Matrix c = oracle::random_psd(n, rng);
        const Matrix p = solve_lyapunov(a, c);
        EXPECT_LT((a * p + p * a.transpose() + c).norm(), 1e-10 * c.norm()) << n;
    }
}

TEST(Csbd1, ExpectedLag) {
    EXPECT_NEAR(expected_lag(0.01, 1.0), 0.4992, 5e-5);
    EXPECT_NEAR(expected_lag(1e-9, 1.0), 0.5, 1e-6);
}

TEST(Csbd1, FrozenDynamics) {
    LinearSde sde;
    sde.a = Matrix::Zero(2, 2);
    sde.u = Vector::Zero(2);
    sde.l = Matrix::Zero(2, 1);
    sde.q_beta = Matrix::Identity(1, 1);
    auto p = example1_params();
    p.mean_appear << 1, 2;
    const Gaussian g = csbd1_moments(sde, p, 1.0);
    EXPECT_LT(max_abs(g.mean - p.mean_appear), 1e-14);
    EXPECT_LT(max_abs(g.cov - p.cov_appear), 1e-14);
}

TEST(Csbd1, ConditionalMomentsAtExpectedLag) {
    const auto p = example1_params();
    const Gaussian want =
        oracle::conditional(example1_sde(), p.mean_appear, p.cov_appear, expected_lag(p.mu_death, 1.0));
    const Gaussian got = csbd1_moments(example1_sde(), p, 1.0);
    EXPECT_LT(oracle::rel_err(got.mean, want.mean), 1e-9);
    EXPECT_LT(oracle::rel_err(got.cov, want.cov), 1e-9);
}

TEST(Csbd2, ReturnsAppearanceMoments) {
    BirthDeathParams p;
    p.lambda_appear = 0.08;
    p.mu_death = 0.01;
    p.mean_appear.resize(4);
    p.mean_appear << 200, 3, 250, 0;
    p.cov_appear = Vector(Eigen::Vector4d(2500, 1, 2500, 1)).asDiagonal();
    const Gaussian g = csbd2_moments(p);
    EXPECT_EQ(g.mean, p.mean_appear);
    EXPECT_EQ(g.cov, p.cov_appear);
}

TEST(GaussianKld, ClosedForms) {
    const Gaussian p{Vector::Zero(1), Matrix::Identity(1, 1)};
    const Gaussian q{Vector::Ones(1), Matrix::Identity(1, 1)};
    EXPECT_NEAR(gaussian_kld(p, p), 0.0, 1e-15);
    EXPECT_NEAR(gaussian_kld(p, q), 0.5, 1e-15);
    const Gaussian singular{Vector::Zero(1), Matrix::Zero(1, 1)};
    EXPECT_THROW(gaussian_kld(p, singular), InvalidInput);
}

TEST(GaussianKld, MatchesMonteCarlo) {
    std::mt19937_64 rng(77);
    const Gaussian p{oracle::random_matrix(2, 1, rng).col(0), oracle::random_psd(2, rng)};
    const Gaussian q{oracle::random_matrix(2, 1, rng).col(0), oracle::random_psd(2, rng)};
    const std::size_t n = 1000000;
    const Eigen::LLT<Matrix> chol(p.cov);
    std::normal_distribution<double> nd;
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vector x = p.mean + chol.matrixL() * Vector(Eigen::Vector2d(nd(rng), nd(rng)));
        const double v = log_gaussian_pdf(x, p.mean, p.cov) - log_gaussian_pdf(x, q.mean, q.cov);
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / n);
    EXPECT_LT(std::abs(gaussian_kld(p, q) - mean), 3.0 * se);
}

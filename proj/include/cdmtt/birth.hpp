#pragma once

#include "cdmtt/gaussian.hpp"
#include "cdmtt/model.hpp"

#include <cstdint>
#include <vector>

/// Discretization of the continuous-time birth process.
///
/// A target born at scan k appeared a lag t in [0, dt) before it, with t a
/// truncated exponential of rate mu. Conditional on t its state is Gaussian;
/// the functions here compute the Gaussian with the same first two moments as
/// the lag-marginal density, plus the cruder constant-density baselines.
namespace cdmtt::birth {

/// Gaussian Poisson intensity: weight * N(x; density).
struct BirthPpp {
    double weight = 0.0;
    Gaussian density;
};

/// E[x | t] and C[x | t] for a target that appeared with (mean_a, cov_a) a lag t ago.
Gaussian conditional_moments(const LinearSde& sde, const Vector& mean_a, const Matrix& cov_a, double t);

/// The two halves of the law of total covariance, kept apart for verification.
struct BirthMomentTerms {
    Vector mean;
    Matrix expected_cond_cov;  ///< E[C[x|t]]
    Matrix cov_cond_mean;      ///< C[E[x|t]]
};

/// Each term assembled from its own Van Loan integral (no combined exponentials).
BirthMomentTerms birth_moment_terms(const LinearSde& sde, const BirthDeathParams& params, double dt);

/// Closed-form birth mean and covariance for a linear SDE.
Gaussian birth_moments_linear(const LinearSde& sde, const BirthDeathParams& params, double dt);

/// Same moments via state augmentation with the nonzero entries of u.
Gaussian birth_moments_augmented(const LinearSde& sde, const BirthDeathParams& params, double dt);

/// Draws states at the scan time of targets born in an interval dt.
std::vector<Vector> sample_birth(const LinearSde& sde, const BirthDeathParams& params, double dt,
                                 std::size_t n, std::uint64_t seed);

/// Draws only the appearance lags, truncated exponential on [0, dt).
std::vector<double> sample_birth_lags(double mu_death, double dt, std::size_t n, std::uint64_t seed);

/// Stationary mean -A^{-1} u and covariance solving A P + P A^T + L Q L^T = 0.
/// Throws NotApplicable unless every eigenvalue of A has real part < -1e-12.
Gaussian steady_state_moments(const LinearSde& sde);

/// Solves A P + P A^T + C = 0 for P.
Matrix solve_lyapunov(const Matrix& a, const Matrix& c);

/// Expected appearance lag of a target born over an interval of length dt.
double expected_lag(double mu_death, double dt);

/// Conditional moments at the expected lag.
Gaussian csbd1_moments(const LinearSde& sde, const BirthDeathParams& params, double dt);

/// Appearance moments unchanged.
Gaussian csbd2_moments(const BirthDeathParams& params);

/// Relative tolerance for clipping a covariance that came out slightly indefinite.
inline constexpr double kPsdClipTolerance = 1e-8;

}  // namespace cdmtt::birth

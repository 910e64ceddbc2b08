#pragma once

#include "cdmtt/types.hpp"

#include <span>
#include <vector>

namespace cdmtt {

/// Moment-parameterized Gaussian density.
struct Gaussian {
    Vector mean;
    Matrix cov;

    [[nodiscard]] Eigen::Index dim() const { return mean.size(); }
};

/// Unnormalized mixture component; the Poisson intensities are lists of these.
struct WeightedGaussian {
    double weight = 0.0;
    Gaussian density;
};

using GaussianMixture = std::vector<WeightedGaussian>;

/// log N(x; mean, cov). Throws NumericalError if cov is not positive definite.
double log_gaussian_pdf(const Vector& x, const Vector& mean, const Matrix& cov);

/// Single Gaussian with the first two moments of sum_i w_i N(m_i, P_i) / sum_i w_i.
/// Weights must be non-negative with a positive sum.
Gaussian moment_match(std::span<const double> weights, std::span<const Gaussian> components);

/// Closed-form KL(p || q). Both covariances must be positive definite.
double gaussian_kld(const Gaussian& p, const Gaussian& q);

/// Symmetrizes and clips slightly negative eigenvalues of a covariance to zero.
///
/// Eigenvalues in [-rel_tol * |trace|, 0) are set to zero; anything more negative
/// throws NumericalError with `what` in the message.
Matrix enforce_psd(const Matrix& cov, double rel_tol, const char* what);

/// Empirical mean and (unbiased) covariance of column samples.
Gaussian sample_moments(std::span<const Vector> samples);

}  // namespace cdmtt

#pragma once

#include "cdmtt/gaussian.hpp"
#include "cdmtt/model.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace cdmtt {

/// Measurement-independent part of a Kalman update of one Gaussian: predicted
/// measurement, innovation covariance factor, gain and posterior covariance.
class Innovation {
public:
    Innovation(const Gaussian& prior, const MeasurementModel& mm)
        : mean_(prior.mean), z_pred_(mm.h * prior.mean) {
        const Matrix ph = prior.cov * mm.h.transpose();
        const Matrix s = symmetrize(mm.h * ph + mm.r);
        chol_.compute(s);
        if (chol_.info() != Eigen::Success) throw NumericalError("innovation covariance is not positive definite");
        gain_ = chol_.solve(ph.transpose()).transpose();
        post_cov_ = symmetrize(prior.cov - gain_ * ph.transpose());
        const Matrix& l = chol_.matrixLLT();
        double log_det = 0.0;
        for (Eigen::Index i = 0; i < l.rows(); ++i) log_det += 2.0 * std::log(l(i, i));
        log_norm_ = -0.5 * (static_cast<double>(z_pred_.size()) * std::log(2.0 * std::numbers::pi) + log_det);
    }

    /// Squared Mahalanobis distance of z from the predicted measurement.
    [[nodiscard]] double mahalanobis2(const Vector& z) const {
        return chol_.matrixL().solve(z - z_pred_).squaredNorm();
    }

    [[nodiscard]] double log_likelihood(const Vector& z) const { return log_norm_ - 0.5 * mahalanobis2(z); }

    [[nodiscard]] Gaussian posterior(const Vector& z) const { return {mean_ + gain_ * (z - z_pred_), post_cov_}; }

private:
    Vector mean_;
    Vector z_pred_;
    Eigen::LLT<Matrix> chol_;
    Matrix gain_;
    Matrix post_cov_;
    double log_norm_ = 0.0;
};

/// log(sum exp(values)); -inf for an empty or all -inf input.
template <typename Range>
double log_sum_exp(const Range& values) {
    double top = -std::numeric_limits<double>::infinity();
    for (double v : values) top = std::max(top, v);
    if (!std::isfinite(top)) return top;
    double acc = 0.0;
    for (double v : values) acc += std::exp(v - top);
    return top + std::log(acc);
}

inline double log_add_exp(double a, double b) {
    if (a < b) std::swap(a, b);
    if (a == -std::numeric_limits<double>::infinity()) return a;
    return a + std::log1p(std::exp(b - a));
}

}  // namespace cdmtt

#include "cdmtt/gaussian.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace cdmtt {

double log_gaussian_pdf(const Vector& x, const Vector& mean, const Matrix& cov) {
    if (x.size() != mean.size() || cov.rows() != mean.size())
        throw InvalidInput("log_gaussian_pdf: dimension mismatch");
    const Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) throw NumericalError("log_gaussian_pdf: covariance not positive definite");
    const Vector white = llt.matrixL().solve(x - mean);
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const double d = static_cast<double>(x.size());
    return -0.5 * (white.squaredNorm() + log_det + d * std::log(2.0 * std::numbers::pi));
}

Gaussian moment_match(std::span<const double> weights, std::span<const Gaussian> components) {
    if (weights.size() != components.size() || components.empty())
        throw InvalidInput("moment_match: need matching, non-empty weights and components");
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw InvalidInput("moment_match: negative weight");
        total += w;
    }
    if (!(total > 0.0)) throw InvalidInput("moment_match: weights sum to zero");

    const Eigen::Index n = components.front().dim();
    Vector mean = Vector::Zero(n);
    for (std::size_t i = 0; i < components.size(); ++i) mean += (weights[i] / total) * components[i].mean;
    Matrix cov = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < components.size(); ++i) {
        const Vector d = components[i].mean - mean;
        cov += (weights[i] / total) * (components[i].cov + d * d.transpose());
    }
    return {std::move(mean), symmetrize(cov)};
}

double gaussian_kld(const Gaussian& p, const Gaussian& q) {
    if (p.dim() != q.dim()) throw InvalidInput("gaussian_kld: dimension mismatch");
    const Eigen::LLT<Matrix> lp(p.cov);
    const Eigen::LLT<Matrix> lq(q.cov);
    if (lp.info() != Eigen::Success || lq.info() != Eigen::Success)
        throw InvalidInput("gaussian_kld: covariance is singular");
    const Matrix lp_l = lp.matrixL();
    const Matrix lq_l = lq.matrixL();
    // tr(Q^-1 P) = ||Lq^-1 Lp||_F^2
    const Matrix m = lq.matrixL().solve(lp_l);
    const Vector d = lq.matrixL().solve(q.mean - p.mean);
    const double logdet_p = 2.0 * lp_l.diagonal().array().log().sum();
    const double logdet_q = 2.0 * lq_l.diagonal().array().log().sum();
    const double k = static_cast<double>(p.dim());
    const double kld = 0.5 * (m.squaredNorm() + d.squaredNorm() - k + logdet_q - logdet_p);
    return std::max(kld, 0.0);
}

Matrix enforce_psd(const Matrix& cov, double rel_tol, const char* what) {
    Matrix sym = symmetrize(cov);
    const Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    if (es.info() != Eigen::Success) throw NumericalError(std::string(what) + ": eigen-decomposition failed");
    const double floor = -rel_tol * std::abs(sym.trace());
    Vector ev = es.eigenvalues();
    if (ev.minCoeff() >= 0.0) return sym;
    if (ev.minCoeff() < floor)
        throw NumericalError(std::string(what) + ": covariance is indefinite beyond tolerance");
    ev = ev.cwiseMax(0.0);
    return symmetrize(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose());
}

Gaussian sample_moments(std::span<const Vector> samples) {
    if (samples.size() < 2) throw InvalidInput("sample_moments: need at least two samples");
    const Eigen::Index n = samples.front().size();
    Vector mean = Vector::Zero(n);
    for (const auto& s : samples) mean += s;
    mean /= static_cast<double>(samples.size());
    Matrix cov = Matrix::Zero(n, n);
    for (const auto& s : samples) {
        const Vector d = s - mean;
        cov.noalias() += d * d.transpose();
    }
    cov /= static_cast<double>(samples.size() - 1);
    return {std::move(mean), std::move(cov)};
}

}  // namespace cdmtt

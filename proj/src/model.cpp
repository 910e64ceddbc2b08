#include "cdmtt/model.hpp"

#include "cdmtt/matexp.hpp"

#include <cmath>

namespace cdmtt {

namespace {

bool is_symmetric(const Matrix& m, double tol = 1e-10) {
    if (m.rows() != m.cols()) return false;
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

bool is_psd(const Matrix& m) {
    if (m.size() == 0) return true;
    const double floor = -1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff());
    return Eigen::SelfAdjointEigenSolver<Matrix>(symmetrize(m), Eigen::EigenvaluesOnly).eigenvalues().minCoeff() >= floor;
}

}  // namespace

void LinearSde::validate() const {
    const auto n = a.rows();
    require(n > 0 && a.cols() == n, "LinearSde: A must be square and non-empty");
    require(u.size() == n, "LinearSde: u must have the state dimension");
    require(l.rows() == n, "LinearSde: L must have state-dimension rows");
    require(q_beta.rows() == l.cols() && q_beta.cols() == l.cols(), "LinearSde: Qbeta must be n_beta x n_beta");
    require(a.allFinite() && u.allFinite() && l.allFinite() && q_beta.allFinite(), "LinearSde: non-finite entries");
    require(is_symmetric(q_beta), "LinearSde: Qbeta must be symmetric");
    require(is_psd(q_beta), "LinearSde: Qbeta must be positive semidefinite");
}

void BirthDeathParams::validate() const {
    require(lambda_appear > 0.0, "BirthDeathParams: appearance rate must be positive");
    require(mu_death > 0.0, "BirthDeathParams: death rate must be positive");
    require(mean_appear.size() > 0, "BirthDeathParams: empty appearance mean");
    require(cov_appear.rows() == mean_appear.size() && cov_appear.cols() == mean_appear.size(),
            "BirthDeathParams: appearance covariance dimension mismatch");
    require(is_symmetric(cov_appear), "BirthDeathParams: appearance covariance must be symmetric");
    require(is_psd(cov_appear), "BirthDeathParams: appearance covariance must be positive semidefinite");
}

double Box::volume() const {
    double v = 1.0;
    for (Eigen::Index i = 0; i < lower.size(); ++i) v *= upper(i) - lower(i);
    return v;
}

bool Box::contains(const Vector& z) const {
    if (z.size() != lower.size()) return false;
    return (z.array() >= lower.array()).all() && (z.array() <= upper.array()).all();
}

void MeasurementModel::validate() const {
    require(h.rows() > 0 && h.cols() > 0, "MeasurementModel: empty H");
    require(r.rows() == h.rows() && r.cols() == h.rows(), "MeasurementModel: R must be n_z x n_z");
    require(is_symmetric(r), "MeasurementModel: R must be symmetric");
    require(Eigen::LLT<Matrix>(r).info() == Eigen::Success, "MeasurementModel: R must be positive definite");
    require(p_detect >= 0.0 && p_detect <= 1.0, "MeasurementModel: p_detect outside [0, 1]");
    require(clutter_rate >= 0.0, "MeasurementModel: negative clutter rate");
    require(clutter_region.lower.size() == h.rows() && clutter_region.upper.size() == h.rows(),
            "MeasurementModel: clutter box dimension mismatch");
    require((clutter_region.upper.array() > clutter_region.lower.array()).all(),
            "MeasurementModel: clutter box must have positive volume");
}

double MeasurementModel::clutter_intensity(const Vector& z) const {
    if (clutter_rate == 0.0 || !clutter_region.contains(z)) return 0.0;
    return clutter_rate / clutter_region.volume();
}

double survival_prob(double mu_death, double dt) {
    require(dt >= 0.0, "survival_prob: negative duration");
    require(mu_death >= 0.0, "survival_prob: negative death rate");
    return std::exp(-mu_death * dt);
}

DiscretizedTransition discretize(const LinearSde& sde, double dt, double mu_death) {
    require(dt > 0.0, "discretize: dt must be positive");
    sde.validate();
    DiscretizedTransition out;
    out.f = matexp::expm(sde.a * dt);
    out.b = matexp::vanloan_type1(sde.a, sde.u, dt);
    out.q = matexp::vanloan_type2(sde.a, symmetrize(sde.diffusion()), dt);
    out.p_survival = survival_prob(mu_death, dt);
    out.dt = dt;
    return out;
}

DiscretizedTransition discretize(const LinearSde& sde, double dt) { return discretize(sde, dt, 0.0); }

double expected_births(const BirthDeathParams& params, double dt) {
    require(dt >= 0.0, "expected_births: negative duration");
    return params.lambda_appear / params.mu_death * -std::expm1(-params.mu_death * dt);
}

}  // namespace cdmtt

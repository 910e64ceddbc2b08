#include "cdmtt/birth.hpp"

#include "cdmtt/matexp.hpp"
#include "cdmtt/rng.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

namespace cdmtt::birth {

using matexp::expm;
using matexp::vanloan_type1;
using matexp::vanloan_type2;
using matexp::vanloan_type3;

namespace {

struct LagScaling {
    double survive_all;   // e^{-mu dt}
    double die_by_end;    // 1 - e^{-mu dt}
    double density_norm;  // mu / (1 - e^{-mu dt})
};

LagScaling lag_scaling(double mu, double dt) {
    const double die = -std::expm1(-mu * dt);
    return {std::exp(-mu * dt), die, mu / die};
}

void check_inputs(const LinearSde& sde, const BirthDeathParams& params, double dt) {
    require(dt > 0.0, "birth moments: dt must be positive");
    sde.validate();
    params.validate();
    require(params.mean_appear.size() == sde.state_dim(), "birth moments: appearance mean dimension mismatch");
}

Vector birth_mean(const Matrix& a, const Vector& u, const Vector& mean_a, double mu, double dt) {
    const auto n = a.rows();
    const Matrix id = Matrix::Identity(n, n);
    const LagScaling s = lag_scaling(mu, dt);

    // exp of [[A - mu I, mean_a], [0, 0]]: top-right block
    const Vector from_appearance = vanloan_type1(a - mu * id, mean_a, dt);

    // exp of [[A - mu I, u, 0], [0, -mu, 1], [0, 0, 0]]: first n rows of the last column
    Matrix abu = Matrix::Zero(n + 2, n + 2);
    abu.topLeftCorner(n, n) = a - mu * id;
    abu.block(0, n, n, 1) = u;
    abu(n, n) = -mu;
    abu(n, n + 1) = 1.0;
    const Vector from_drift = expm(abu * dt).block(0, n + 1, n, 1);

    return s.density_norm * (from_appearance + from_drift);
}

}  // namespace

Gaussian conditional_moments(const LinearSde& sde, const Vector& mean_a, const Matrix& cov_a, double t) {
    require(t >= 0.0, "conditional_moments: negative lag");
    if (t == 0.0) return {mean_a, cov_a};
    const Matrix f = expm(sde.a * t);
    Gaussian g;
    g.mean = f * mean_a + vanloan_type1(sde.a, sde.u, t);
    g.cov = symmetrize(f * cov_a * f.transpose() + vanloan_type2(sde.a, symmetrize(sde.diffusion()), t));
    return g;
}

BirthMomentTerms birth_moment_terms(const LinearSde& sde, const BirthDeathParams& params, double dt) {
    check_inputs(sde, params, dt);
    const auto n = sde.state_dim();
    const double mu = params.mu_death;
    const LagScaling s = lag_scaling(mu, dt);
    const Matrix id = Matrix::Identity(n, n);
    const Matrix& a = sde.a;
    const Vector& u = sde.u;
    const Vector& xa = params.mean_appear;
    const Matrix lql = symmetrize(sde.diffusion());
    const Matrix cb = lql + mu * symmetrize(params.cov_appear);

    BirthMomentTerms out;
    out.mean = birth_mean(a, u, xa, mu, dt);

    out.expected_cond_cov = (-s.survive_all / s.die_by_end) * vanloan_type2(a, lql, dt) +
                            (1.0 / s.die_by_end) * vanloan_type2(a - 0.5 * mu * id, cb, dt);

    const Matrix sigma_xx = s.density_norm * vanloan_type2(a - 0.5 * mu * id, xa * xa.transpose(), dt);
    const Matrix sigma_xu = s.density_norm * vanloan_type3(a - mu * id, xa * u.transpose(), a.transpose(), dt);
    const Vector drift_integral = vanloan_type1(a, u, dt);
    const Matrix sigma_uu1 = (s.survive_all / s.die_by_end) * drift_integral * drift_integral.transpose();
    const Matrix sigma_uu2 = (1.0 / s.die_by_end) * vanloan_type3(a - mu * id, u * u.transpose(), a.transpose(), dt);
    const Matrix sigma_uu = -sigma_uu1 + sigma_uu2 + sigma_uu2.transpose();

    out.cov_cond_mean = symmetrize(sigma_xx + sigma_xu + sigma_xu.transpose() + sigma_uu -
                                   out.mean * out.mean.transpose());
    out.expected_cond_cov = symmetrize(out.expected_cond_cov);
    return out;
}

Gaussian birth_moments_linear(const LinearSde& sde, const BirthDeathParams& params, double dt) {
    check_inputs(sde, params, dt);
    const auto n = sde.state_dim();
    const double mu = params.mu_death;
    const LagScaling s = lag_scaling(mu, dt);
    const Matrix id = Matrix::Identity(n, n);
    const Matrix& a = sde.a;
    const Vector& u = sde.u;
    const Vector& xa = params.mean_appear;
    const Matrix lql = symmetrize(sde.diffusion());
    const Matrix cb = lql + mu * symmetrize(params.cov_appear);

    Gaussian out;
    out.mean = birth_mean(a, u, xa, mu, dt);

    // Second term of E[C[x|t]] and Sigma_xx share one exponential, as do
    // Sigma_xu and Sigma_uu,2.
    const Matrix shared_quadratic =
        vanloan_type2(a - 0.5 * mu * id, cb / s.die_by_end + s.density_norm * xa * xa.transpose(), dt);
    const Matrix shared_cross = vanloan_type3(
        a - mu * id, s.density_norm * xa * u.transpose() + u * u.transpose() / s.die_by_end, a.transpose(), dt);
    const Vector drift_integral = vanloan_type1(a, u, dt);
    const Matrix sigma_uu1 = (s.survive_all / s.die_by_end) * drift_integral * drift_integral.transpose();

    const Matrix cov = shared_quadratic - (s.survive_all / s.die_by_end) * vanloan_type2(a, lql, dt) +
                       shared_cross + shared_cross.transpose() - sigma_uu1 - out.mean * out.mean.transpose();
    out.cov = enforce_psd(cov, kPsdClipTolerance, "birth_moments_linear");
    return out;
}

Gaussian birth_moments_augmented(const LinearSde& sde, const BirthDeathParams& params, double dt) {
    check_inputs(sde, params, dt);
    const auto n = sde.state_dim();
    std::vector<Eigen::Index> offsets;
    for (Eigen::Index i = 0; i < n; ++i)
        if (sde.u(i) != 0.0) offsets.push_back(i);
    if (offsets.empty()) return birth_moments_linear(sde, params, dt);

    const auto q = static_cast<Eigen::Index>(offsets.size());
    LinearSde aug;
    aug.a = Matrix::Zero(n + q, n + q);
    aug.a.topLeftCorner(n, n) = sde.a;
    for (Eigen::Index j = 0; j < q; ++j) aug.a(offsets[j], n + j) = 1.0;
    aug.u = Vector::Zero(n + q);
    aug.l = Matrix::Zero(n + q, sde.l.cols());
    aug.l.topRows(n) = sde.l;
    aug.q_beta = sde.q_beta;

    BirthDeathParams aug_params = params;
    aug_params.mean_appear = Vector::Zero(n + q);
    aug_params.mean_appear.head(n) = params.mean_appear;
    for (Eigen::Index j = 0; j < q; ++j) aug_params.mean_appear(n + j) = sde.u(offsets[j]);
    aug_params.cov_appear = Matrix::Zero(n + q, n + q);
    aug_params.cov_appear.topLeftCorner(n, n) = params.cov_appear;

    const Gaussian full = birth_moments_linear(aug, aug_params, dt);
    return {full.mean.head(n), full.cov.topLeftCorner(n, n)};
}

std::vector<double> sample_birth_lags(double mu_death, double dt, std::size_t n, std::uint64_t seed) {
    require(dt > 0.0 && mu_death > 0.0, "sample_birth_lags: need positive rate and interval");
    Rng rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double die = -std::expm1(-mu_death * dt);
    std::vector<double> lags(n);
    for (auto& t : lags) {
        // inverse CDF of the exponential truncated to [0, dt)
        t = -std::log1p(-unif(rng) * die) / mu_death;
        if (t >= dt) t = std::nextafter(dt, 0.0);
    }
    return lags;
}

std::vector<Vector> sample_birth(const LinearSde& sde, const BirthDeathParams& params, double dt, std::size_t n,
                                 std::uint64_t seed) {
    check_inputs(sde, params, dt);
    require(n >= 1, "sample_birth: need at least one sample");
    const auto lags = sample_birth_lags(params.mu_death, dt, n, seed);
    Rng rng(derive_seed(seed, {1}));
    std::vector<Vector> out;
    out.reserve(n);
    for (double t : lags) {
        const Gaussian g = conditional_moments(sde, params.mean_appear, params.cov_appear, t);
        out.push_back(sample_gaussian(g.mean, g.cov, rng));
    }
    return out;
}

Matrix solve_lyapunov(const Matrix& a, const Matrix& c) {
    require(a.rows() == a.cols() && c.rows() == a.rows() && c.cols() == a.cols(), "solve_lyapunov: dimension mismatch");
    const auto n = a.rows();
    const Matrix id = Matrix::Identity(n, n);
    // column-major vec: vec(A P) = (I kron A) vec(P), vec(P A^T) = (A kron I) vec(P)
    Matrix k = Matrix::Zero(n * n, n * n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            k.block(i * n, j * n, n, n) += id(i, j) * a;
            k.block(i * n, j * n, n, n) += a(i, j) * id;
        }
    const Eigen::Map<const Vector> rhs(c.data(), n * n);
    const Vector sol = k.fullPivLu().solve(-rhs);
    return symmetrize(Eigen::Map<const Matrix>(sol.data(), n, n));
}

Gaussian steady_state_moments(const LinearSde& sde) {
    sde.validate();
    const Eigen::EigenSolver<Matrix> es(sde.a, false);
    if (es.info() != Eigen::Success) throw NumericalError("steady_state_moments: eigenvalue computation failed");
    if (es.eigenvalues().real().maxCoeff() >= -1e-12)
        throw NotApplicable("steady_state_moments: drift matrix is not Hurwitz");
    Gaussian g;
    g.mean = -sde.a.partialPivLu().solve(sde.u);
    g.cov = solve_lyapunov(sde.a, symmetrize(sde.diffusion()));
    return g;
}

double expected_lag(double mu_death, double dt) {
    require(dt > 0.0 && mu_death >= 0.0, "expected_lag: need dt > 0 and mu >= 0");
    const double x = mu_death * dt;
    if (x < 1e-3) return dt * (0.5 - x / 12.0 + x * x * x / 720.0);
    return 1.0 / mu_death - dt / std::expm1(x);
}

Gaussian csbd1_moments(const LinearSde& sde, const BirthDeathParams& params, double dt) {
    check_inputs(sde, params, dt);
    return conditional_moments(sde, params.mean_appear, params.cov_appear, expected_lag(params.mu_death, dt));
}

Gaussian csbd2_moments(const BirthDeathParams& params) { return {params.mean_appear, params.cov_appear}; }

}  // namespace cdmtt::birth

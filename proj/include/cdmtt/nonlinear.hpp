#pragma once

#include "cdmtt/gaussian.hpp"
#include "cdmtt/model.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace cdmtt::nonlinear {

/// dx = f(x) dt + L(x) dbeta, beta Brownian with diffusion Qbeta.
/// The callables must be re-entrant; filters call them from several threads.
struct NonlinearSde {
    std::function<Vector(const Vector&)> drift;
    std::function<Matrix(const Vector&)> drift_jacobian;
    std::function<Matrix(const Vector&)> dispersion;
    Matrix q_beta;
    Eigen::Index dim = 0;
};

/// How mean and covariance are carried through the SDE between scans.
enum class MomentMethod {
    /// Re-linearize the drift along the mean trajectory (moment ODEs).
    kLinearizedOde,
    /// Linearize once at the initial mean and treat the SDE as linear.
    kFixedLinearization,
};

struct OdeSolverConfig {
    double rel_tol = 1e-6;
    double abs_tol = 1e-9;
    double max_step = std::numeric_limits<double>::infinity();
    MomentMethod method = MomentMethod::kLinearizedOde;

    void validate() const;
};

/// First-order Taylor model of the SDE around x: A = F_x(x), u = f(x) - A x, L = L(x).
LinearSde linearize_at(const NonlinearSde& nsde, const Vector& x);

/// Integrates dm/dt = f(m), dP/dt = P F_x(m)^T + F_x(m) P + L(m) Q L(m)^T over [0, dt].
Gaussian propagate_moments(const NonlinearSde& nsde, const Gaussian& init, double dt, const OdeSolverConfig& cfg = {});

/// The same integration reported at each of the increasing times in `times` (all >= 0).
std::vector<Gaussian> propagate_moments_at(const NonlinearSde& nsde, const Gaussian& init,
                                           std::span<const double> times, const OdeSolverConfig& cfg = {});

/// Birth mean and covariance under the moment-ODE approximation.
///
/// Integrates the moment ODEs jointly with the lag-weighted first and second
/// moments. The accumulated moments are taken about the appearance mean, which
/// leaves the result unchanged but avoids cancellation when the mean is large
/// relative to the spread.
Gaussian birth_moments_nonlinear(const NonlinearSde& nsde, const BirthDeathParams& params, double dt,
                                 const OdeSolverConfig& cfg = {});

/// Conditional moments at the expected appearance lag (constant-density baseline 1).
Gaussian csbd1_moments_nonlinear(const NonlinearSde& nsde, const BirthDeathParams& params, double dt,
                                 const OdeSolverConfig& cfg = {});

/// Euler-Maruyama sample path endpoint over dt with steps of at most `step`.
/// The final step is shortened so the path ends exactly at dt.
Vector euler_maruyama(const NonlinearSde& nsde, const Vector& x0, double dt, double step, std::uint64_t seed);

/// Same, drawing from a caller-owned generator.
template <typename Generator>
Vector euler_maruyama(const NonlinearSde& nsde, const Vector& x0, double dt, double step, Generator& rng);

/// Nonlinear wrapper around a linear SDE, f(x) = A x + u.
NonlinearSde from_linear(const LinearSde& sde);

/// Re-entry vehicle dynamics in 2-D (state [px, vx, py, vy], km and s).
struct ReentryParams {
    double gm0 = 3.986e5;     ///< km^3 / s^2
    double beta0 = 0.6;       ///< 1 / km
    double psi = 0.7;
    double r0 = 6374.0;       ///< km
    double h0 = 13.4;         ///< km
    double q = 1e-4;          ///< Brownian diffusion per axis
};

NonlinearSde reentry_model(const ReentryParams& p = {});

}  // namespace cdmtt::nonlinear

#include "cdmtt/rng.hpp"

#include <cmath>
#include <string>

namespace cdmtt::nonlinear {

template <typename Generator>
Vector euler_maruyama(const NonlinearSde& nsde, const Vector& x0, double dt, double step, Generator& rng) {
    require(step > 0.0 && step <= dt, "euler_maruyama: need 0 < step <= dt");
    require(x0.size() == nsde.dim, "euler_maruyama: initial state dimension mismatch");
    const Matrix noise_sqrt = psd_sqrt(nsde.q_beta);
    std::normal_distribution<double> nd(0.0, 1.0);
    Vector x = x0;
    Vector w(nsde.q_beta.rows());
    const auto n_steps = static_cast<long>(std::ceil(dt / step - 1e-9));
    for (long i = 0; i < n_steps; ++i) {
        const double h = (i + 1 == n_steps) ? dt - static_cast<double>(n_steps - 1) * step : step;
        for (Eigen::Index j = 0; j < w.size(); ++j) w(j) = nd(rng);
        x += nsde.drift(x) * h + nsde.dispersion(x) * (std::sqrt(h) * (noise_sqrt * w));
        if (!x.allFinite())
            throw NumericalError("euler_maruyama: state diverged at t=" + std::to_string(static_cast<double>(i) * step + h));
    }
    return x;
}

}  // namespace cdmtt::nonlinear

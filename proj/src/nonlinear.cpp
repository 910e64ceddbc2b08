#include "cdmtt/nonlinear.hpp"

#include "cdmtt/birth.hpp"
#include "cdmtt/matexp.hpp"

#include <boost/numeric/odeint/stepper/controlled_runge_kutta.hpp>
#include <boost/numeric/odeint/stepper/generation.hpp>
#include <boost/numeric/odeint/stepper/runge_kutta_dopri5.hpp>

#include <cmath>
#include <string>

namespace cdmtt::nonlinear {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::vector<double>;

constexpr long kMaxSteps = 1'000'000;

/// Adaptive Dormand-Prince integration of rhs from t0 to t1, calling
/// on_point(t, y) after every accepted step.
template <typename Rhs, typename OnPoint>
void integrate(Rhs&& rhs, State& y, double t0, double t1, const OdeSolverConfig& cfg, OnPoint&& on_point) {
    auto stepper = odeint::make_controlled(cfg.abs_tol, cfg.rel_tol, odeint::runge_kutta_dopri5<State>());
    auto system = [&rhs](const State& x, State& dxdt, double t) { rhs(x, dxdt, t); };
    double t = t0;
    double h = std::min(cfg.max_step, std::max((t1 - t0) * 1e-2, 1e-12));
    long steps = 0;
    while (t < t1) {
        if (++steps > kMaxSteps) throw NumericalError("moment ODE: step budget exhausted at t=" + std::to_string(t));
        const bool last = t + h >= t1;
        double step = last ? t1 - t : h;
        const double t_before = t;
        if (stepper.try_step(system, y, t, step) == odeint::success) {
            if (last) t = t1;
            for (double v : y)
                if (!std::isfinite(v)) throw NumericalError("moment ODE: non-finite state at t=" + std::to_string(t));
            on_point(t, y);
            h = std::min(step, cfg.max_step);
        } else {
            h = std::min(step, cfg.max_step);
            if (h <= 1e-14 * std::max(1.0, std::abs(t_before)))
                throw NumericalError("moment ODE: step size underflow at t=" + std::to_string(t_before));
        }
    }
}

/// y = [m; vec(P)] (P column-major).
struct MomentOde {
    const NonlinearSde& nsde;
    Eigen::Index n;

    void operator()(const State& x, State& dxdt, double /*t*/) const {
        const Eigen::Map<const Vector> m(x.data(), n);
        const Eigen::Map<const Matrix> p(x.data() + n, n, n);
        Eigen::Map<Vector> dm(dxdt.data(), n);
        Eigen::Map<Matrix> dp(dxdt.data() + n, n, n);
        const Matrix fx = nsde.drift_jacobian(m);
        const Matrix l = nsde.dispersion(m);
        dm = nsde.drift(m);
        dp = p * fx.transpose() + fx * p + l * nsde.q_beta * l.transpose();
    }
};

State pack(const Gaussian& g) {
    const auto n = g.dim();
    State y(static_cast<std::size_t>(n + n * n));
    Eigen::Map<Vector>(y.data(), n) = g.mean;
    Eigen::Map<Matrix>(y.data() + n, n, n) = g.cov;
    return y;
}

Gaussian unpack(const State& y, Eigen::Index n) {
    Gaussian g;
    g.mean = Eigen::Map<const Vector>(y.data(), n);
    g.cov = symmetrize(Eigen::Map<const Matrix>(y.data() + n, n, n));
    return g;
}

void check_init(const NonlinearSde& nsde, const Gaussian& init) {
    require(init.dim() == nsde.dim && init.cov.rows() == nsde.dim && init.cov.cols() == nsde.dim,
            "propagate_moments: initial moments do not match the state dimension");
}

Gaussian propagate_fixed_linearization(const NonlinearSde& nsde, const Gaussian& init, double dt) {
    const DiscretizedTransition tr = discretize(linearize_at(nsde, init.mean), dt);
    return {tr.f * init.mean + tr.b, symmetrize(tr.f * init.cov * tr.f.transpose() + tr.q)};
}

}  // namespace

void OdeSolverConfig::validate() const {
    require(rel_tol > 0.0 && rel_tol < 1.0, "OdeSolverConfig: rel_tol must lie in (0, 1)");
    require(abs_tol > 0.0 && abs_tol < 1.0, "OdeSolverConfig: abs_tol must lie in (0, 1)");
    require(max_step > 0.0, "OdeSolverConfig: max_step must be positive");
}

LinearSde linearize_at(const NonlinearSde& nsde, const Vector& x) {
    LinearSde sde;
    sde.a = nsde.drift_jacobian(x);
    sde.u = nsde.drift(x) - sde.a * x;
    sde.l = nsde.dispersion(x);
    sde.q_beta = nsde.q_beta;
    return sde;
}

std::vector<Gaussian> propagate_moments_at(const NonlinearSde& nsde, const Gaussian& init,
                                           std::span<const double> times, const OdeSolverConfig& cfg) {
    cfg.validate();
    check_init(nsde, init);
    const auto n = nsde.dim;
    std::vector<Gaussian> out;
    out.reserve(times.size());
    State y = pack(init);
    double t = 0.0;
    const MomentOde ode{nsde, n};
    for (double target : times) {
        require(target >= t, "propagate_moments_at: times must be non-negative and increasing");
        if (target > t) integrate(ode, y, t, target, cfg, [](double, const State&) {});
        t = target;
        out.push_back(unpack(y, n));
    }
    return out;
}

Gaussian propagate_moments(const NonlinearSde& nsde, const Gaussian& init, double dt, const OdeSolverConfig& cfg) {
    require(dt > 0.0, "propagate_moments: dt must be positive");
    if (cfg.method == MomentMethod::kFixedLinearization) {
        check_init(nsde, init);
        return propagate_fixed_linearization(nsde, init, dt);
    }
    const double times[] = {dt};
    return propagate_moments_at(nsde, init, times, cfg).front();
}

Gaussian birth_moments_nonlinear(const NonlinearSde& nsde, const BirthDeathParams& params, double dt,
                                 const OdeSolverConfig& cfg) {
    require(dt > 0.0, "birth_moments_nonlinear: dt must be positive");
    cfg.validate();
    params.validate();
    const auto n = nsde.dim;
    require(params.mean_appear.size() == n, "birth_moments_nonlinear: appearance mean dimension mismatch");

    if (cfg.method == MomentMethod::kFixedLinearization)
        return birth::birth_moments_linear(linearize_at(nsde, params.mean_appear), params, dt);

    const double mu = params.mu_death;
    const Vector& xa = params.mean_appear;
    // y = [m; vec(P); xbar_c; vec(Sigma_c)], with the lag-weighted moments centred on xa
    const auto nn = n * n;
    State y(static_cast<std::size_t>(2 * (n + nn)), 0.0);
    Eigen::Map<Vector>(y.data(), n) = xa;
    Eigen::Map<Matrix>(y.data() + n, n, n) = params.cov_appear;

    const MomentOde moments{nsde, n};
    auto rhs = [&](const State& x, State& dxdt, double t) {
        moments(x, dxdt, t);
        const Eigen::Map<const Vector> m(x.data(), n);
        const Eigen::Map<const Matrix> p(x.data() + n, n, n);
        Eigen::Map<Vector> dxbar(dxdt.data() + n + nn, n);
        Eigen::Map<Matrix> dsigma(dxdt.data() + 2 * n + nn, n, n);
        const double w = std::exp(-mu * t);
        const Vector d = m - xa;
        dxbar = w * d;
        dsigma = w * (p + d * d.transpose());
    };
    integrate(rhs, y, 0.0, dt, cfg, [](double, const State&) {});

    const double norm = mu / -std::expm1(-mu * dt);
    const Vector shift = norm * Eigen::Map<const Vector>(y.data() + n + nn, n);
    const Matrix second = norm * Eigen::Map<const Matrix>(y.data() + 2 * n + nn, n, n);
    Gaussian out;
    out.mean = xa + shift;
    out.cov = enforce_psd(second - shift * shift.transpose(), birth::kPsdClipTolerance, "birth_moments_nonlinear");
    return out;
}

Gaussian csbd1_moments_nonlinear(const NonlinearSde& nsde, const BirthDeathParams& params, double dt,
                                 const OdeSolverConfig& cfg) {
    params.validate();
    const double lag = birth::expected_lag(params.mu_death, dt);
    const Gaussian appear{params.mean_appear, params.cov_appear};
    if (lag <= 0.0) return appear;
    return propagate_moments(nsde, appear, lag, cfg);
}

Vector euler_maruyama(const NonlinearSde& nsde, const Vector& x0, double dt, double step, std::uint64_t seed) {
    Rng rng(seed);
    return euler_maruyama(nsde, x0, dt, step, rng);
}

NonlinearSde from_linear(const LinearSde& sde) {
    sde.validate();
    NonlinearSde out;
    out.dim = sde.state_dim();
    out.drift = [a = sde.a, u = sde.u](const Vector& x) -> Vector { return a * x + u; };
    out.drift_jacobian = [a = sde.a](const Vector&) -> Matrix { return a; };
    out.dispersion = [l = sde.l](const Vector&) -> Matrix { return l; };
    out.q_beta = sde.q_beta;
    return out;
}

NonlinearSde reentry_model(const ReentryParams& p) {
    NonlinearSde out;
    out.dim = 4;
    out.q_beta = p.q * Matrix::Identity(2, 2);

    out.drift = [p](const Vector& x) -> Vector {
        const double r = std::hypot(x(0), x(2));
        const double speed = std::hypot(x(1), x(3));
        const double g = -p.gm0 / (r * r * r);
        const double d = -p.beta0 * std::exp(p.psi + (p.r0 - r) / p.h0) * speed;
        Vector f(4);
        f << x(1), g * x(0) + d * x(1), x(3), g * x(2) + d * x(3);
        return f;
    };

    out.drift_jacobian = [p](const Vector& x) -> Matrix {
        const double px = x(0), vx = x(1), py = x(2), vy = x(3);
        const double r = std::hypot(px, py);
        const double speed = std::hypot(vx, vy);
        const double g = -p.gm0 / (r * r * r);
        const double drag = -p.beta0 * std::exp(p.psi + (p.r0 - r) / p.h0);
        const double d = drag * speed;
        // partial derivatives of g and d
        const double dg_dr = 3.0 * p.gm0 / (r * r * r * r);
        const double dd_dr = -d / p.h0;
        const double dd_dvx = speed > 0.0 ? drag * vx / speed : 0.0;
        const double dd_dvy = speed > 0.0 ? drag * vy / speed : 0.0;
        const double dr_dpx = px / r, dr_dpy = py / r;

        Matrix j = Matrix::Zero(4, 4);
        j(0, 1) = 1.0;
        j(2, 3) = 1.0;
        j(1, 0) = g + px * dg_dr * dr_dpx + vx * dd_dr * dr_dpx;
        j(1, 1) = d + vx * dd_dvx;
        j(1, 2) = px * dg_dr * dr_dpy + vx * dd_dr * dr_dpy;
        j(1, 3) = vx * dd_dvy;
        j(3, 0) = py * dg_dr * dr_dpx + vy * dd_dr * dr_dpx;
        j(3, 1) = vy * dd_dvx;
        j(3, 2) = g + py * dg_dr * dr_dpy + vy * dd_dr * dr_dpy;
        j(3, 3) = d + vy * dd_dvy;
        return j;
    };

    // [1; 1] kron [[0, 0], [1, 0]]
    Matrix l = Matrix::Zero(4, 2);
    l(1, 0) = 1.0;
    l(3, 0) = 1.0;
    out.dispersion = [l](const Vector&) -> Matrix { return l; };
    return out;
}

}  // namespace cdmtt::nonlinear

#pragma once

// Independent reference computations for the unit and acceptance tests. None
// of these call into the library's numerical kernels: matrix exponentials come
// from Eigen's MatrixFunctions module and integrals from adaptive quadrature.

#include "cdmtt/gaussian.hpp"
#include "cdmtt/model.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using cdmtt::Matrix;
using cdmtt::Vector;

inline Matrix expm(const Matrix& m) { return m.exp(); }

// Gauss-Kronrod 7/15 nodes on [-1, 1] (QUADPACK qk15).
inline constexpr std::array<double, 8> kXgk{0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                            0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk{0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg{0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

/// Adaptive Gauss-Kronrod integral of a matrix-valued function; every entry
/// meets max(abs_tol, rel_tol * |entry|).
class Quadrature {
public:
    using Integrand = std::function<Matrix(double)>;

    explicit Quadrature(double abs_tol = 1e-12, double rel_tol = 1e-11, int max_depth = 40)
        : abs_tol_(abs_tol), rel_tol_(rel_tol), max_depth_(max_depth) {}

    Matrix operator()(const Integrand& f, double a, double b) const {
        if (a == b) return Matrix::Zero(f(a).rows(), f(a).cols());
        return adapt(f, a, b, 0);
    }

private:
    Matrix adapt(const Integrand& f, double a, double b, int depth) const {
        const double c = 0.5 * (a + b);
        const double h = 0.5 * (b - a);
        const Matrix fc = f(c);
        Matrix kronrod = kWgk[7] * fc;
        Matrix gauss = kWg[3] * fc;
        for (int j = 0; j < 7; ++j) {
            const Matrix s = f(c - h * kXgk[j]) + f(c + h * kXgk[j]);
            kronrod += kWgk[j] * s;
            if (j % 2 == 1) gauss += kWg[j / 2] * s;
        }
        kronrod *= h;
        gauss *= h;
        const Matrix err = (kronrod - gauss).cwiseAbs();
        const Matrix tol = (rel_tol_ * kronrod.cwiseAbs()).cwiseMax(abs_tol_);
        if (depth >= max_depth_ || (err.array() <= tol.array()).all()) return kronrod;
        return adapt(f, a, c, depth + 1) + adapt(f, c, b, depth + 1);
    }

    double abs_tol_;
    double rel_tol_;
    int max_depth_;
};

inline double rel_err(const Matrix& got, const Matrix& want, double floor = 1e-12) {
    return (got - want).cwiseAbs().maxCoeff() / std::max(want.cwiseAbs().maxCoeff(), floor);
}

/// E[x | t] and C[x | t] by quadrature of the linear-SDE solution.
inline cdmtt::Gaussian conditional(const cdmtt::LinearSde& sde, const Vector& mean_a, const Matrix& cov_a, double t,
                                   const Quadrature& q = Quadrature()) {
    const Matrix ea = expm(sde.a * t);
    const Matrix qc = sde.l * sde.q_beta * sde.l.transpose();
    const Matrix offset = q([&](double s) -> Matrix { return expm(sde.a * s) * sde.u; }, 0.0, t);
    const Matrix noise =
        q([&](double s) -> Matrix { return expm(sde.a * s) * qc * expm(sde.a * s).transpose(); }, 0.0, t);
    return {ea * mean_a + offset.col(0), ea * cov_a * ea.transpose() + noise};
}

/// Lag-marginal birth moments by nested quadrature over the truncated
/// exponential lag density, split into E[C[x|t]] and C[E[x|t]].
struct BirthOracle {
    Vector mean;
    Matrix expected_cond_cov;
    Matrix cov_cond_mean;
    [[nodiscard]] Matrix cov() const { return expected_cond_cov + cov_cond_mean; }
};

inline BirthOracle birth_moments(const cdmtt::LinearSde& sde, const cdmtt::BirthDeathParams& p, double dt) {
    const double mu = p.mu_death;
    const double norm = mu / -std::expm1(-mu * dt);
    const Quadrature outer(1e-12, 1e-10);
    const Quadrature inner(1e-13, 1e-12);
    const auto n = sde.state_dim();
    auto cond = [&](double t) { return conditional(sde, p.mean_appear, p.cov_appear, t, inner); };
    const Matrix m = outer([&](double t) -> Matrix { return norm * std::exp(-mu * t) * cond(t).mean; }, 0.0, dt);
    const Matrix second = outer(
        [&](double t) -> Matrix {
            const Vector c = cond(t).mean;
            return norm * std::exp(-mu * t) * c * c.transpose();
        },
        0.0, dt);
    const Matrix ecc = outer([&](double t) -> Matrix { return norm * std::exp(-mu * t) * cond(t).cov; }, 0.0, dt);
    BirthOracle out;
    out.mean = m.col(0);
    out.cov_cond_mean = second - out.mean * out.mean.transpose();
    out.expected_cond_cov = ecc;
    (void)n;
    return out;
}

/// Every injective map rows -> columns (rows <= cols), as column indices.
inline void enumerate_injections(int rows, int cols, const std::function<void(const std::vector<int>&)>& visit) {
    std::vector<int> sel(rows, -1);
    std::vector<char> used(cols, 0);
    std::function<void(int)> rec = [&](int r) {
        if (r == rows) {
            visit(sel);
            return;
        }
        for (int c = 0; c < cols; ++c) {
            if (used[c]) continue;
            used[c] = 1;
            sel[r] = c;
            rec(r + 1);
            used[c] = 0;
        }
    };
    rec(0);
}

/// Brute-force GOSPA (alpha = 2): minimum over partial matchings of truth and
/// estimates, with unmatched elements each costing c^p / 2.
inline double gospa(const std::vector<Vector>& x, const std::vector<Vector>& y, double c, double p) {
    const int nx = static_cast<int>(x.size());
    const int ny = static_cast<int>(y.size());
    double best = std::numeric_limits<double>::infinity();
    // Pad the estimates with nx "unmatched" slots so any subset of x can stay unmatched.
    enumerate_injections(nx, ny + nx, [&](const std::vector<int>& sel) {
        double cost = 0.0;
        int matched = 0;
        for (int i = 0; i < nx; ++i) {
            if (sel[i] < ny) {
                const double d = (x[i] - y[sel[i]]).norm();
                if (d >= c) return;  // an unmatched pair is never worse
                cost += std::pow(d, p);
                ++matched;
            } else {
                cost += std::pow(c, p) / 2.0;
            }
        }
        cost += std::pow(c, p) / 2.0 * (ny - matched);
        best = std::min(best, cost);
    });
    return std::pow(best, 1.0 / p);
}

inline Matrix random_matrix(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = nd(rng);
    return m;
}

inline Matrix random_psd(int n, std::mt19937_64& rng) {
    const Matrix g = random_matrix(n, n, rng);
    return g * g.transpose() / n + 0.1 * Matrix::Identity(n, n);
}

/// Random matrix with every eigenvalue real part in [-max_decay, -min_decay].
inline Matrix random_hurwitz(int n, std::mt19937_64& rng, double min_decay = 0.1, double max_decay = 1.0) {
    const Matrix g = random_matrix(n, n, rng, 0.5 / std::sqrt(static_cast<double>(n)));
    const Matrix skew = g - g.transpose();
    std::uniform_real_distribution<double> ud(min_decay, max_decay);
    Vector d(n);
    for (int i = 0; i < n; ++i) d(i) = -ud(rng);
    // A = Q (D + S) Q^T with S skew and orthogonal Q keeps Re(eig) within [min d, max d].
    const Eigen::HouseholderQR<Matrix> qr(random_matrix(n, n, rng));
    const Matrix q = qr.householderQ();
    return q * (Matrix(d.asDiagonal()) + skew) * q.transpose();
}

}  // namespace oracle

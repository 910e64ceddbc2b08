#pragma once

#include "cdmtt/types.hpp"

namespace cdmtt {

/// dx = (A x + u) dt + L dbeta, with beta a Brownian motion of diffusion Qbeta.
/// Rates are per second and durations in seconds; state units are whatever the
/// scenario uses.
struct LinearSde {
    Matrix a;
    Vector u;
    Matrix l;
    Matrix q_beta;

    [[nodiscard]] Eigen::Index state_dim() const { return a.rows(); }
    /// L Qbeta L^T
    [[nodiscard]] Matrix diffusion() const { return l * q_beta * l.transpose(); }
    /// Throws InvalidInput on inconsistent dimensions or asymmetric Qbeta.
    void validate() const;
};

/// Appearance / disappearance of targets: Poisson appearances at rate lambda,
/// exponential life spans with rate mu, Gaussian state at appearance.
struct BirthDeathParams {
    double lambda_appear = 0.0;
    double mu_death = 0.0;
    Vector mean_appear;
    Matrix cov_appear;

    void validate() const;
};

/// Discrete-time Gaussian transition x_k = F x_{k-1} + b + w, w ~ N(0, Q).
struct DiscretizedTransition {
    Matrix f;
    Vector b;
    Matrix q;
    double p_survival = 1.0;
    double dt = 0.0;
};

/// Axis-aligned box in measurement space.
struct Box {
    Vector lower;
    Vector upper;

    [[nodiscard]] double volume() const;
    [[nodiscard]] bool contains(const Vector& z) const;
};

/// Linear-Gaussian point-target measurement model with uniform Poisson clutter.
struct MeasurementModel {
    Matrix h;
    Matrix r;
    double p_detect = 1.0;
    double clutter_rate = 0.0;
    Box clutter_region;

    void validate() const;
    /// rate / volume inside the clutter box, zero outside.
    [[nodiscard]] double clutter_intensity(const Vector& z) const;
    [[nodiscard]] Eigen::Index meas_dim() const { return h.rows(); }
};

/// e^{-mu dt}
double survival_prob(double mu_death, double dt);

/// Exact Gaussian transition of a linear SDE over dt > 0.
DiscretizedTransition discretize(const LinearSde& sde, double dt, double mu_death);
DiscretizedTransition discretize(const LinearSde& sde, double dt);

/// (lambda / mu)(1 - e^{-mu dt}): Poisson mean of the number of targets born in dt.
double expected_births(const BirthDeathParams& params, double dt);

}  // namespace cdmtt

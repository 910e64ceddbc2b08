#pragma once

#include "cdmtt/types.hpp"

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cdmtt {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for an independent stream identified by (base, ids...).
///
/// Streams used in the library: simulate_truth uses (seed, 1) for appearance
/// times and (seed, 2, track) per track; generate_measurements uses (seed, 3, step)
/// per scan; Monte Carlo replication r of a run uses (seed, 100, r).
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> ids) {
    std::uint64_t s = mix64(base);
    for (auto id : ids) s = mix64(s ^ mix64(id + 0x632be59bd9b4e019ULL));
    return s;
}

/// Matrix square root S with S S^T = cov, for a symmetric PSD cov.
inline Matrix psd_sqrt(const Matrix& cov) {
    const Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(cov));
    const Vector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal();
}

inline Vector standard_normal(Eigen::Index n, Rng& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = nd(rng);
    return v;
}

inline Vector sample_gaussian(const Vector& mean, const Matrix& cov, Rng& rng) {
    return mean + psd_sqrt(cov) * standard_normal(mean.size(), rng);
}

}  // namespace cdmtt

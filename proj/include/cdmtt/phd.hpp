#pragma once

#include "cdmtt/birth.hpp"
#include "cdmtt/gaussian.hpp"
#include "cdmtt/model.hpp"
#include "cdmtt/motion.hpp"

#include <vector>

/// Gaussian-mixture PHD and CPHD filters.
namespace cdmtt::phd {

/// Mixture reduction applied after every update.
struct MixtureCaps {
    double prune_threshold = 1e-5;
    double merge_threshold = 0.1;  ///< squared Mahalanobis distance
    int max_components = 30;

    void validate() const;
};

struct PhdState {
    GaussianMixture intensity;

    [[nodiscard]] double expected_count() const;
};

struct CphdState {
    GaussianMixture intensity;
    std::vector<double> cardinality{1.0};  ///< P(n targets), n = 0 .. size-1
    int max_cardinality = 50;

    [[nodiscard]] double expected_count() const;
};

/// Drops light components, greedily merges those within the merge threshold
/// of the heaviest remaining one, and keeps at most max_components.
GaussianMixture reduce_mixture(GaussianMixture mixture, const MixtureCaps& caps);

PhdState phd_predict(const PhdState& state, const MotionStep& motion, const birth::BirthPpp& birth);
PhdState phd_predict(const PhdState& state, const DiscretizedTransition& trans, const birth::BirthPpp& birth);
PhdState phd_update(const PhdState& state, const std::vector<Vector>& meas, const MeasurementModel& mm,
                    const MixtureCaps& caps);

/// Means of the round(sum of weights) heaviest components.
std::vector<Vector> phd_estimate(const GaussianMixture& intensity);

CphdState cphd_predict(const CphdState& state, const MotionStep& motion, const birth::BirthPpp& birth);
CphdState cphd_predict(const CphdState& state, const DiscretizedTransition& trans, const birth::BirthPpp& birth);
CphdState cphd_update(const CphdState& state, const std::vector<Vector>& meas, const MeasurementModel& mm,
                      const MixtureCaps& caps);

/// Means of the n heaviest components, n the most probable cardinality.
std::vector<Vector> cphd_estimate(const CphdState& state);

/// Elementary symmetric functions e_0 .. e_n of the values.
std::vector<double> elementary_symmetric(const std::vector<double>& values);

/// Clutter density relative to its mean count used by the CPHD update; outside
/// the clutter box it is floored at this fraction of the in-box density.
inline constexpr double kCphdClutterFloor = 1e-12;

}  // namespace cdmtt::phd

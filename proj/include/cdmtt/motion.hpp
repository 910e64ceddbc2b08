#pragma once

#include "cdmtt/gaussian.hpp"
#include "cdmtt/model.hpp"

#include <functional>

namespace cdmtt {

/// One prediction interval as seen by the filters: survival probability and a
/// moment propagator for single-target Gaussians.
struct MotionStep {
    double p_survival = 1.0;
    std::function<Gaussian(const Gaussian&)> propagate;
    /// Used for tracked (Bernoulli) targets when set; `propagate` otherwise.
    std::function<Gaussian(const Gaussian&)> propagate_tracks;

    [[nodiscard]] const std::function<Gaussian(const Gaussian&)>& for_tracks() const {
        return propagate_tracks ? propagate_tracks : propagate;
    }
};

inline std::function<Gaussian(const Gaussian&)> linear_propagator(const DiscretizedTransition& tr, bool with_offset) {
    return [tr, with_offset](const Gaussian& g) -> Gaussian {
        require(g.dim() == tr.f.cols(), "prediction: state dimension does not match the transition");
        Gaussian out;
        out.mean = tr.f * g.mean;
        if (with_offset) out.mean += tr.b;
        out.cov = symmetrize(tr.f * g.cov * tr.f.transpose() + tr.q);
        return out;
    };
}

/// F x + b, F P F^T + Q. With `track_offset` false, tracked targets skip b.
inline MotionStep linear_motion(const DiscretizedTransition& tr, bool track_offset = true) {
    MotionStep step;
    step.p_survival = tr.p_survival;
    step.propagate = linear_propagator(tr, true);
    if (!track_offset) step.propagate_tracks = linear_propagator(tr, false);
    return step;
}

}  // namespace cdmtt

#pragma once

#include "cdmtt/types.hpp"

#include <span>
#include <vector>

namespace cdmtt {

/// GOSPA distance and its alpha = 2 decomposition. The three components are
/// stored as p-th powers so that total^p = localisation + missed + false_targets.
struct GospaResult {
    double total = 0.0;
    double localisation = 0.0;
    double missed = 0.0;
    double false_targets = 0.0;
    int n_missed = 0;
    int n_false = 0;
};

struct GospaParams {
    double cutoff = 10.0;
    double order = 2.0;
    double alpha = 2.0;

    void validate() const;
};

/// Optimal-assignment GOSPA between two finite sets of equal-dimension vectors.
GospaResult gospa(std::span<const Vector> truth, std::span<const Vector> estimates, const GospaParams& params = {});

/// Root-mean-square aggregation of per-run results at one time step; the
/// decomposition terms are averaged as they are stored (p-th powers).
GospaResult rms_over_runs(std::span<const GospaResult> runs);

}  // namespace cdmtt

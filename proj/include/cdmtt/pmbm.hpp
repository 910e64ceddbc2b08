#pragma once

#include "cdmtt/birth.hpp"
#include "cdmtt/gaussian.hpp"
#include "cdmtt/model.hpp"
#include "cdmtt/motion.hpp"

#include <compare>
#include <string>
#include <utility>
#include <vector>

/// Gaussian Poisson multi-Bernoulli mixture filter for point targets.
namespace cdmtt::pmbm {

/// Measurement `index` of scan `step`.
struct MeasurementRef {
    int step = 0;
    int index = 0;
    auto operator<=>(const MeasurementRef&) const = default;
};

struct LocalHypothesis {
    double log_weight = 0.0;
    double existence = 0.0;
    Gaussian density;
    std::vector<MeasurementRef> history;  ///< increasing in step
};

struct BernoulliTree {
    std::vector<LocalHypothesis> hypotheses;
};

struct GlobalHypothesis {
    double weight = 1.0;
    std::vector<int> selection;  ///< local-hypothesis index for each Bernoulli
};

/// Undetected-target intensity, Bernoulli trees and the global hypotheses over
/// them. Globals are kept sorted by decreasing weight.
struct PmbmPosterior {
    GaussianMixture ppp;
    std::vector<BernoulliTree> bernoullis;
    std::vector<GlobalHypothesis> globals{GlobalHypothesis{}};
    int scans = 0;  ///< number of updates applied; used as the step of new history entries

    /// Throws InvalidInput if selections, weights or existences are inconsistent.
    void validate() const;
};

struct PruneConfig {
    int max_globals = 200;
    double ppp_weight_floor = 1e-5;
    double mbm_weight_floor = 1e-4;
    double existence_floor = 1e-5;
    double gate_threshold = 20.0;
    double estimate_threshold = 0.4;

    void validate() const;
};

/// Propagates every PPP component and local hypothesis through `motion` and adds
/// the birth intensity as one PPP component. A birth density equal to an
/// existing component (as under steady-state appearance) is merged into it.
PmbmPosterior predict(PmbmPosterior post, const MotionStep& motion, const birth::BirthPpp& birth);

/// Linear-transition prediction. With `bernoulli_offset` false the Bernoulli
/// means skip the offset b, as the prediction lemma is literally written.
PmbmPosterior predict(PmbmPosterior post, const DiscretizedTransition& trans, const birth::BirthPpp& birth,
                      bool bernoulli_offset = true);

/// Measurement update with gating, k-best global hypothesis generation and pruning.
PmbmPosterior update(const PmbmPosterior& pred, const std::vector<Vector>& meas, const MeasurementModel& mm,
                     const PruneConfig& cfg);

/// Means of the locals with existence above the threshold in the best global.
std::vector<Vector> estimate(const PmbmPosterior& post, const PruneConfig& cfg);

/// Single-global reduction: each Bernoulli becomes the weighted merge of its
/// locals across the global hypotheses.
PmbmPosterior pmb_project(const PmbmPosterior& post);

/// Expected number of undetected targets after one predict and update
/// for a single-component PPP under steady-state appearance.
std::pair<double, double> undetected_recursion(double prev_updated, const BirthDeathParams& params, double dt,
                                               double p_detect);

/// Fixed point of undetected_recursion for constant dt and detection probability.
std::pair<double, double> steady_state_lambda(const BirthDeathParams& params, double dt, double p_detect);

/// Human-readable snapshot of weights, existences and moments.
std::string dump(const PmbmPosterior& post);

/// Log-weight used for a missed detection that the model says is impossible
/// (p_D = 1 on a certain target); keeps the assignment costs finite.
inline constexpr double kImpossibleMissLogWeight = -1e6;

}  // namespace cdmtt::pmbm

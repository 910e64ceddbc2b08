#include "cdmtt/phd.hpp"

#include "cdmtt/kalman.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cdmtt::phd {

void MixtureCaps::validate() const {
    require(prune_threshold >= 0.0, "MixtureCaps: prune_threshold must be non-negative");
    require(merge_threshold >= 0.0, "MixtureCaps: merge_threshold must be non-negative");
    require(max_components >= 1, "MixtureCaps: max_components must be positive");
}

double PhdState::expected_count() const {
    double n = 0.0;
    for (const auto& c : intensity) n += c.weight;
    return n;
}

GaussianMixture reduce_mixture(GaussianMixture mixture, const MixtureCaps& caps) {
    caps.validate();
    std::erase_if(mixture, [&](const WeightedGaussian& c) { return c.weight <= caps.prune_threshold; });

    // heaviest first; ties keep the original order
    std::stable_sort(mixture.begin(), mixture.end(),
                     [](const WeightedGaussian& a, const WeightedGaussian& b) { return a.weight > b.weight; });
    std::vector<char> taken(mixture.size(), 0);
    GaussianMixture merged;
    for (std::size_t lead = 0; lead < mixture.size(); ++lead) {
        if (taken[lead]) continue;
        const Vector& centre = mixture[lead].density.mean;
        std::vector<double> w;
        std::vector<Gaussian> group;
        for (std::size_t i = lead; i < mixture.size(); ++i) {
            if (taken[i]) continue;
            const auto& c = mixture[i];
            const Vector d = c.density.mean - centre;
            const double dist = d.dot(c.density.cov.ldlt().solve(d));
            if (i == lead || dist <= caps.merge_threshold) {
                taken[i] = 1;
                w.push_back(c.weight);
                group.push_back(c.density);
            }
        }
        const double total = std::accumulate(w.begin(), w.end(), 0.0);
        merged.push_back({total, group.size() == 1 ? group.front() : moment_match(w, group)});
        if (static_cast<int>(merged.size()) == caps.max_components) break;
    }
    return merged;
}

PhdState phd_predict(const PhdState& state, const MotionStep& motion, const birth::BirthPpp& birth) {
    require(static_cast<bool>(motion.propagate), "phd_predict: missing propagator");
    PhdState out;
    out.intensity.reserve(state.intensity.size() + 1);
    for (const auto& c : state.intensity)
        out.intensity.push_back({c.weight * motion.p_survival, motion.propagate(c.density)});
    if (birth.weight > 0.0) {
        if (!out.intensity.empty())
            require(birth.density.dim() == out.intensity.front().density.dim(), "phd_predict: birth dimension mismatch");
        out.intensity.push_back({birth.weight, birth.density});
    }
    return out;
}

PhdState phd_predict(const PhdState& state, const DiscretizedTransition& trans, const birth::BirthPpp& birth) {
    return phd_predict(state, linear_motion(trans), birth);
}

PhdState phd_update(const PhdState& state, const std::vector<Vector>& meas, const MeasurementModel& mm,
                    const MixtureCaps& caps) {
    mm.validate();
    const double pd = mm.p_detect;
    PhdState out;
    for (const auto& c : state.intensity) out.intensity.push_back({c.weight * (1.0 - pd), c.density});

    if (pd > 0.0 && !state.intensity.empty()) {
        std::vector<Innovation> innov;
        innov.reserve(state.intensity.size());
        for (const auto& c : state.intensity) innov.emplace_back(c.density, mm);
        std::vector<double> lik(state.intensity.size());
        for (const auto& z : meas) {
            require(z.size() == mm.meas_dim(), "phd_update: measurement dimension mismatch");
            double denom = mm.clutter_intensity(z);
            for (std::size_t l = 0; l < lik.size(); ++l) {
                lik[l] = pd * state.intensity[l].weight * std::exp(innov[l].log_likelihood(z));
                denom += lik[l];
            }
            if (!(denom > 0.0)) continue;
            for (std::size_t l = 0; l < lik.size(); ++l)
                if (lik[l] > 0.0) out.intensity.push_back({lik[l] / denom, innov[l].posterior(z)});
        }
    }
    out.intensity = reduce_mixture(std::move(out.intensity), caps);
    return out;
}

namespace {

std::vector<Vector> heaviest_means(const GaussianMixture& intensity, std::size_t n) {
    std::vector<std::size_t> order(intensity.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return intensity[a].weight > intensity[b].weight; });
    std::vector<Vector> out;
    for (std::size_t i = 0; i < std::min(n, order.size()); ++i) out.push_back(intensity[order[i]].density.mean);
    return out;
}

}  // namespace

std::vector<Vector> phd_estimate(const GaussianMixture& intensity) {
    double total = 0.0;
    for (const auto& c : intensity) total += c.weight;
    return heaviest_means(intensity, static_cast<std::size_t>(std::llround(total)));
}

std::vector<Vector> cphd_estimate(const CphdState& state) {
    const auto it = std::max_element(state.cardinality.begin(), state.cardinality.end());
    return heaviest_means(state.intensity, static_cast<std::size_t>(it - state.cardinality.begin()));
}

std::vector<double> elementary_symmetric(const std::vector<double>& values) {
    std::vector<double> e(values.size() + 1, 0.0);
    e[0] = 1.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        for (std::size_t j = i + 1; j > 0; --j) e[j] += values[i] * e[j - 1];
    return e;
}

}  // namespace cdmtt::phd

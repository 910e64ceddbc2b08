#include "cdmtt/sim.hpp"

#include "cdmtt/rng.hpp"

#include <algorithm>
#include <functional>
#include <random>

namespace cdmtt::sim {

namespace {

void check_timestamps(const std::vector<double>& timestamps) {
    require(!timestamps.empty(), "simulate_truth: no timestamps");
    require(timestamps.front() > 0.0, "simulate_truth: timestamps must be positive");
    for (std::size_t k = 1; k < timestamps.size(); ++k)
        require(timestamps[k] > timestamps[k - 1], "simulate_truth: timestamps must be strictly increasing");
}

using Advance = std::function<Vector(const Vector&, double, Rng&)>;

// Appearance times from stream (seed, 1); per-track randomness from (seed, 2, id).
Scenario simulate(const BirthDeathParams& params, const std::vector<double>& timestamps, std::uint64_t seed,
                  const Advance& advance) {
    params.validate();
    check_timestamps(timestamps);
    Scenario scn;
    scn.timestamps = timestamps;
    const double horizon = timestamps.back();

    Rng arrivals(derive_seed(seed, {1}));
    std::exponential_distribution<double> gap(params.lambda_appear);
    std::exponential_distribution<double> life(params.mu_death);
    double t = 0.0;
    for (std::uint64_t id = 0;; ++id) {
        t += gap(arrivals);
        if (t >= horizon) break;
        Rng rng(derive_seed(seed, {2, id}));
        Track track;
        track.id = static_cast<int>(id);
        track.appear_time = t;
        track.death_time = t + life(rng);
        const auto first = std::lower_bound(timestamps.begin(), timestamps.end(), t);
        if (first == timestamps.end() || *first >= track.death_time) continue;
        track.birth_step = static_cast<int>(first - timestamps.begin());

        Vector x = sample_gaussian(params.mean_appear, params.cov_appear, rng);
        double now = t;
        for (auto it = first; it != timestamps.end() && *it < track.death_time; ++it) {
            x = advance(x, *it - now, rng);
            now = *it;
            track.states.push_back(x);
        }
        scn.tracks.push_back(std::move(track));
    }
    return scn;
}

}  // namespace

std::vector<Vector> Scenario::states_at(int step) const {
    std::vector<Vector> out;
    for (const auto& tr : tracks)
        if (tr.alive_at(step)) out.push_back(tr.states[step - tr.birth_step]);
    return out;
}

std::vector<double> sample_timestamps(std::size_t n, double mean_interval, std::uint64_t seed) {
    require(n >= 1, "sample_timestamps: need at least one time");
    require(mean_interval > 0.0, "sample_timestamps: mean interval must be positive");
    Rng rng(seed);
    std::exponential_distribution<double> gap(1.0 / mean_interval);
    std::vector<double> out(n);
    double t = 0.0;
    for (auto& v : out) {
        double dt = 0.0;
        while (dt <= 0.0) dt = gap(rng);
        t += dt;
        v = t;
    }
    return out;
}

Scenario simulate_truth(const LinearSde& sde, const BirthDeathParams& params, const std::vector<double>& timestamps,
                        std::uint64_t seed) {
    sde.validate();
    require(params.mean_appear.size() == sde.state_dim(), "simulate_truth: appearance mean dimension mismatch");
    return simulate(params, timestamps, seed, [&sde](const Vector& x, double dt, Rng& rng) -> Vector {
        if (dt <= 0.0) return x;
        const DiscretizedTransition tr = discretize(sde, dt);
        return sample_gaussian(tr.f * x + tr.b, tr.q, rng);
    });
}

Scenario simulate_truth(const nonlinear::NonlinearSde& nsde, const BirthDeathParams& params,
                        const std::vector<double>& timestamps, std::uint64_t seed, double em_step) {
    require(em_step > 0.0, "simulate_truth: Euler-Maruyama step must be positive");
    require(params.mean_appear.size() == nsde.dim, "simulate_truth: appearance mean dimension mismatch");
    return simulate(params, timestamps, seed, [&nsde, em_step](const Vector& x, double dt, Rng& rng) -> Vector {
        if (dt <= 0.0) return x;
        return nonlinear::euler_maruyama(nsde, x, dt, std::min(em_step, dt), rng);
    });
}

MeasurementLog generate_measurements(const Scenario& scn, const MeasurementModel& mm, std::uint64_t seed) {
    mm.validate();
    MeasurementLog log(scn.steps());
    std::bernoulli_distribution detect(mm.p_detect);
    std::poisson_distribution<int> clutter_count(mm.clutter_rate > 0.0 ? mm.clutter_rate : 1.0);
    const Box& box = mm.clutter_region;
    for (std::size_t k = 0; k < scn.steps(); ++k) {
        Rng rng(derive_seed(seed, {3, k}));
        auto& out = log[k];
        for (const auto& x : scn.states_at(static_cast<int>(k))) {
            require(x.size() == mm.h.cols(), "generate_measurements: state dimension mismatch");
            if (detect(rng)) out.push_back(sample_gaussian(mm.h * x, mm.r, rng));
        }
        const int n_clutter = mm.clutter_rate > 0.0 ? clutter_count(rng) : 0;
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (int c = 0; c < n_clutter; ++c) {
            Vector z(box.lower.size());
            for (Eigen::Index d = 0; d < z.size(); ++d) z(d) = box.lower(d) + unit(rng) * (box.upper(d) - box.lower(d));
            out.push_back(std::move(z));
        }
        std::shuffle(out.begin(), out.end(), rng);
    }
    return log;
}

}  // namespace cdmtt::sim

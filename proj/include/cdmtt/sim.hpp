#pragma once

#include "cdmtt/model.hpp"
#include "cdmtt/nonlinear.hpp"

#include <cstdint>
#include <string>
#include <vector>

/// Ground truth and measurement generation from the continuous-time model.
namespace cdmtt::sim {

/// A target alive on the contiguous scan range [birth_step, birth_step + states.size()).
struct Track {
    int id = 0;
    int birth_step = 0;
    double appear_time = 0.0;
    double death_time = 0.0;
    std::vector<Vector> states;

    [[nodiscard]] int last_step() const { return birth_step + static_cast<int>(states.size()) - 1; }
    [[nodiscard]] bool alive_at(int step) const { return step >= birth_step && step <= last_step(); }
};

struct Scenario {
    std::vector<double> timestamps;
    std::vector<Track> tracks;
    std::string unit_system = "m";

    /// States of the targets alive at a scan, in track order.
    [[nodiscard]] std::vector<Vector> states_at(int step) const;
    [[nodiscard]] std::size_t steps() const { return timestamps.size(); }
};

/// Per scan, the unordered list of measurements.
using MeasurementLog = std::vector<std::vector<Vector>>;

/// n sensor times with i.i.d. exponential spacing, starting after t = 0.
std::vector<double> sample_timestamps(std::size_t n, double mean_interval, std::uint64_t seed);

/// Truth from the appearance/death process with exact linear transitions.
Scenario simulate_truth(const LinearSde& sde, const BirthDeathParams& params, const std::vector<double>& timestamps,
                        std::uint64_t seed);

/// Truth with Euler-Maruyama paths at `em_step` between consecutive times.
Scenario simulate_truth(const nonlinear::NonlinearSde& nsde, const BirthDeathParams& params,
                        const std::vector<double>& timestamps, std::uint64_t seed, double em_step = 0.01);

MeasurementLog generate_measurements(const Scenario& scn, const MeasurementModel& mm, std::uint64_t seed);

}  // namespace cdmtt::sim

#pragma once

#include "cdmtt/sim.hpp"

#include <filesystem>
#include <iosfwd>

/// Line-oriented text files for scenarios and measurement logs.
///
/// Scenario file:
///
///     # cdmtt-scenario 1
///     units m
///     steps <n>
///     time <step> <t>                                        (n lines)
///     track <id> <birth_step> <n_states> <appear_time> <death_time>
///     state <step> <id> <x_1> ... <x_d>                      (per track and alive step)
///
/// Measurement file:
///
///     # cdmtt-measurements 1
///     steps <n>
///     meas <step> <index> <z_1> ... <z_m>
///
/// Steps are 0-based; numbers are written with 17 significant digits so a
/// write/read cycle is exact. Blank lines and lines starting with '#' after the
/// header are ignored.
namespace cdmtt::harness {

void write_scenario(std::ostream& os, const sim::Scenario& scn);
sim::Scenario read_scenario(std::istream& is);

void write_measurements(std::ostream& os, const sim::MeasurementLog& log);
sim::MeasurementLog read_measurements(std::istream& is);

void save_scenario(const std::filesystem::path& path, const sim::Scenario& scn);
sim::Scenario load_scenario(const std::filesystem::path& path);
void save_measurements(const std::filesystem::path& path, const sim::MeasurementLog& log);
sim::MeasurementLog load_measurements(const std::filesystem::path& path);

}  // namespace cdmtt::harness

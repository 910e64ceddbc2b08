#pragma once

#include "cdmtt/birth.hpp"
#include "cdmtt/gospa.hpp"
#include "cdmtt/harness/config.hpp"
#include "cdmtt/motion.hpp"
#include "cdmtt/sim.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace cdmtt::harness {

/// Prediction ingredients for an interval dt, built from the scenario dynamics
/// and the configured birth discretization. Thread-safe; results are cached by dt.
class FilterModel {
public:
    explicit FilterModel(const ExperimentConfig& cfg);

    [[nodiscard]] MotionStep motion(double dt) const;
    [[nodiscard]] birth::BirthPpp birth(double dt) const;
    [[nodiscard]] const MeasurementModel& measurement() const { return cfg_.scenario.measurement; }

private:
    [[nodiscard]] Gaussian birth_density(double dt) const;

    ExperimentConfig cfg_;
    nonlinear::NonlinearSde nsde_;
    mutable std::mutex mutex_;
    mutable std::map<double, DiscretizedTransition> transitions_;
    mutable std::map<double, Gaussian> births_;
};

/// Filter output for one measurement log.
struct FilterTrace {
    std::vector<std::vector<Vector>> estimates;  ///< per scan
    double seconds = 0.0;
    long predictions = 0;  ///< prediction steps performed (ticks for discrete baselines)
};

/// Runs the configured variant over the scans. Discrete baselines predict on a
/// fixed grid of the smallest interval and update at the tick nearest each scan.
FilterTrace run_filter(const ExperimentConfig& cfg, const FilterModel& model, const std::vector<double>& timestamps,
                       const sim::MeasurementLog& log);

struct StepMetrics {
    int step = 0;
    double time = 0.0;
    double rms_gospa = 0.0;
    double localisation = 0.0;  ///< mean squared terms; rms_gospa^2 = sum of the three
    double missed = 0.0;
    double false_targets = 0.0;
};

struct RunReport {
    std::string config_json;
    std::uint64_t seed = 0;
    std::vector<StepMetrics> steps;
    std::vector<double> run_seconds;
    std::vector<std::vector<double>> run_gospa;  ///< [run][step], scaled
    double summary_rms_gospa = 0.0;

    [[nodiscard]] double mean_seconds() const;
};

/// Ground truth from the scenario's truth seed (shared by all replications).
sim::Scenario make_truth(const ExperimentConfig& cfg);

/// Seed of the measurement log of Monte Carlo replication `run`.
std::uint64_t replication_seed(std::uint64_t seed, int run);

/// Scaled GOSPA between truth and estimates on the configured position entries.
GospaResult evaluate(const ExperimentConfig& cfg, const std::vector<Vector>& truth, const std::vector<Vector>& estimates);

/// Monte Carlo evaluation: one truth, cfg.run.runs measurement logs, runs in parallel.
RunReport run_experiment(const ExperimentConfig& cfg, const sim::Scenario* truth = nullptr);

/// sqrt of the mean over steps of the squared per-step RMS-GOSPA.
double summary_from_steps(const std::vector<StepMetrics>& steps);

/// Worker threads: CDMTT_THREADS if set to a positive integer, else the hardware count.
int thread_count();

void write_steps_csv(const std::filesystem::path& path, const RunReport& report);
void write_summary_json(const std::filesystem::path& path, const RunReport& report);
/// Reads back step, time and rms_gospa columns.
std::vector<StepMetrics> read_steps_csv(const std::filesystem::path& path);

}  // namespace cdmtt::harness

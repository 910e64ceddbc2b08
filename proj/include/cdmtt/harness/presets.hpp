#pragma once

#include "cdmtt/harness/experiment.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

/// Built-in configurations of the two benchmark scenarios and the reference
/// values they are compared against.
namespace cdmtt::harness {

enum class Benchmark { kLinear, kNonlinear };

/// Appearance-model variants of the ablation tables. kNominal uses the base
/// appearance mean; the others follow the table columns left to right.
enum class BenchmarkCase { kNominal, kFast, kFaster, kInformative, kInformativeUniform };

std::string to_string(Benchmark b);
std::string to_string(BenchmarkCase c);
Benchmark parse_benchmark(std::string_view s);
BenchmarkCase parse_case(std::string_view s);

/// Truth seed of the built-in scenarios: the smallest seed >= 1 whose linear
/// ground truth (fast case) contains exactly 10 trajectories. See truth_seed_with_tracks().
inline constexpr std::uint64_t kBenchmarkTruthSeed = 9;

/// Smallest seed in [1, max_seed] giving `tracks` trajectories under `cfg`'s scenario.
std::optional<std::uint64_t> truth_seed_with_tracks(ExperimentConfig cfg, std::size_t tracks, std::uint64_t max_seed);

/// Ready-to-run configuration. Defaults: 100 runs, the benchmark's own birth
/// discretization (prop1 for linear, prop8 for nonlinear).
ExperimentConfig benchmark_config(Benchmark b, BenchmarkCase c, FilterVariant variant = FilterVariant::kCdPmbm);
ExperimentConfig benchmark_config(Benchmark b, BenchmarkCase c, FilterVariant variant, BirthMethod birth);

/// The benchmark's primary birth discretization.
BirthMethod exact_birth(Benchmark b);

/// Published summary RMS-GOSPA (m) for a continuous-discrete variant, if tabulated.
std::optional<double> reference_value(Benchmark b, BenchmarkCase c, FilterVariant variant, BirthMethod birth);

struct ReproOptions {
    Benchmark benchmark = Benchmark::kLinear;
    int runs = 100;
    std::uint64_t seed = 1;
    std::vector<BenchmarkCase> cases{BenchmarkCase::kFast};
    bool ablations = false;  ///< add CSBD1 and CSBD2 rows
    bool baselines = false;  ///< add discrete-time filters with the exact birth
};

struct ReproRow {
    BenchmarkCase benchmark_case = BenchmarkCase::kFast;
    FilterVariant variant = FilterVariant::kCdPmbm;
    BirthMethod birth = BirthMethod::kProp1;
    double summary = 0.0;
    std::optional<double> reference;
    double mean_seconds = 0.0;
    RunReport report;
};

using ReproProgress = std::function<void(const ReproRow&)>;

std::vector<ReproRow> run_repro(const ReproOptions& opts, const ReproProgress& progress = {});

/// Table of rows (case, variant, birth, summary, paper, difference, seconds) as CSV.
void write_repro_csv(const std::filesystem::path& path, const std::vector<ReproRow>& rows);
/// Human-readable fixed-width table.
std::string format_repro_table(const std::vector<ReproRow>& rows);

}  // namespace cdmtt::harness

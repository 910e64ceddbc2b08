// Command-line front end: simulate scenarios, run Monte Carlo evaluations,
// reproduce the benchmark tables and check configuration files.

#include "cdmtt/harness/config.hpp"
#include "cdmtt/harness/experiment.hpp"
#include "cdmtt/harness/presets.hpp"
#include "cdmtt/harness/scenario_io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace cdmtt;
using namespace cdmtt::harness;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitOther = 1;

struct CommonArgs {
    std::string config;
    std::string preset;
    std::optional<int> runs;
    std::optional<std::uint64_t> seed;
    std::string variant;
    std::string birth;
};

/// "linear:fast" or "nonlinear:informative"
ExperimentConfig preset_config(const std::string& name) {
    const auto colon = name.find(':');
    const Benchmark b = parse_benchmark(name.substr(0, colon));
    const BenchmarkCase c = colon == std::string::npos ? BenchmarkCase::kFast : parse_case(name.substr(colon + 1));
    return benchmark_config(b, c);
}

ExperimentConfig resolve_config(const CommonArgs& args) {
    if (args.config.empty() == args.preset.empty())
        throw ConfigError("--config", "give exactly one of --config or --preset");
    ExperimentConfig cfg = args.config.empty() ? preset_config(args.preset) : load_config(args.config);
    if (args.runs) cfg.run.runs = *args.runs;
    if (args.seed) cfg.run.seed = *args.seed;
    if (!args.variant.empty()) cfg.filter.variant = parse_variant(args.variant);
    if (!args.birth.empty()) cfg.filter.birth = parse_birth(args.birth);
    cfg.validate();
    return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args, bool filter_flags) {
    cmd->add_option("--config", args.config, "experiment configuration (JSON)");
    cmd->add_option("--preset", args.preset, "built-in benchmark, e.g. linear:fast or nonlinear:informative");
    cmd->add_option("--runs", args.runs, "Monte Carlo replications")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", args.seed, "measurement seed");
    if (filter_flags) {
        cmd->add_option("--variant", args.variant, "cd-pmbm, cd-pmb, cd-phd, cd-cphd or discrete-*");
        cmd->add_option("--birth", args.birth, "prop1, prop8, csbd1, csbd2 or steady");
    }
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InvalidInput("cannot create " + dir.string() + ": " + ec.message());
}

int cmd_simulate(const CommonArgs& args, const std::string& out) {
    const ExperimentConfig cfg = resolve_config(args);
    const fs::path dir(out);
    ensure_dir(dir);
    const sim::Scenario truth = make_truth(cfg);
    const auto log = sim::generate_measurements(truth, cfg.scenario.measurement, replication_seed(cfg.run.seed, 0));
    save_scenario(dir / "scenario.txt", truth);
    save_measurements(dir / "measurements.txt", log);

    std::size_t detections = 0;
    std::size_t peak = 0;
    for (std::size_t k = 0; k < truth.steps(); ++k) {
        detections += log[k].size();
        peak = std::max(peak, truth.states_at(static_cast<int>(k)).size());
    }
    std::printf("steps %zu, trajectories %zu, peak concurrent %zu, measurements %zu\n", truth.steps(),
                truth.tracks.size(), peak, detections);
    std::printf("wrote %s and %s\n", (dir / "scenario.txt").c_str(), (dir / "measurements.txt").c_str());
    return kExitOk;
}

int cmd_run(const CommonArgs& args, const std::string& scenario_path, const std::string& out) {
    const ExperimentConfig cfg = resolve_config(args);
    std::optional<sim::Scenario> truth;
    if (!scenario_path.empty()) truth = load_scenario(scenario_path);
    const fs::path dir(out);
    ensure_dir(dir);
    const RunReport report = run_experiment(cfg, truth ? &*truth : nullptr);
    write_steps_csv(dir / "steps.csv", report);
    write_summary_json(dir / "summary.json", report);
    std::printf("%s %s/%s: summary RMS-GOSPA %.4f over %zu runs, %.3f s per run\n", cfg.name.c_str(),
                to_string(cfg.filter.variant).c_str(), to_string(cfg.filter.birth).c_str(), report.summary_rms_gospa,
                report.run_seconds.size(), report.mean_seconds());
    return kExitOk;
}

int cmd_repro(const std::string& table, int runs, std::uint64_t seed, const std::vector<std::string>& cases,
              bool ablations, bool baselines, const std::string& out) {
    ReproOptions opts;
    opts.benchmark = parse_benchmark(table);
    opts.runs = runs;
    opts.seed = seed;
    opts.ablations = ablations;
    opts.baselines = baselines;
    if (!cases.empty()) {
        opts.cases.clear();
        for (const auto& c : cases) opts.cases.push_back(parse_case(c));
    }
    const fs::path dir(out);
    ensure_dir(dir);
    const auto rows = run_repro(opts, [](const ReproRow& r) {
        std::fprintf(stderr, "  %s %s/%s: %.3f\n", to_string(r.benchmark_case).c_str(), to_string(r.variant).c_str(),
                     to_string(r.birth).c_str(), r.summary);
    });
    write_repro_csv(dir / "repro.csv", rows);
    for (const auto& r : rows) {
        const std::string stem = to_string(r.benchmark_case) + "_" + to_string(r.variant) + "_" + to_string(r.birth);
        write_steps_csv(dir / (stem + ".csv"), r.report);
    }
    std::cout << format_repro_table(rows);
    return kExitOk;
}

int cmd_validate(const CommonArgs& args, bool print) {
    const ExperimentConfig cfg = resolve_config(args);
    if (print) std::cout << serialize_config(cfg) << "\n";
    else std::printf("%s: ok\n", args.config.empty() ? args.preset.c_str() : args.config.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Continuous-discrete multi-target tracking toolkit"};
    app.require_subcommand(1);

    CommonArgs sim_args, run_args, val_args;
    std::string sim_out, run_out, run_scenario, repro_out = "repro";
    std::string table = "linear";
    int repro_runs = 100;
    std::uint64_t repro_seed = 1;
    std::vector<std::string> repro_cases;
    bool ablations = false, baselines = false, print = false;

    auto* simulate = app.add_subcommand("simulate", "sample a ground truth and one measurement log");
    add_common(simulate, sim_args, false);
    simulate->add_option("--out", sim_out, "output directory")->required();

    auto* run = app.add_subcommand("run", "Monte Carlo evaluation of one filter");
    add_common(run, run_args, true);
    run->add_option("--scenario", run_scenario, "ground truth file (default: sampled from the config)");
    run->add_option("--out", run_out, "output directory")->required();

    auto* repro = app.add_subcommand("repro", "reproduce a benchmark table");
    repro->add_option("--table", table, "linear or nonlinear");
    repro->add_option("--runs", repro_runs, "Monte Carlo replications")->check(CLI::PositiveNumber);
    repro->add_option("--seed", repro_seed, "measurement seed");
    repro->add_option("--case", repro_cases, "nominal, fast, faster, informative, informative-uniform (repeatable)");
    repro->add_flag("--ablations", ablations, "add CSBD1 and CSBD2 birth rows");
    repro->add_flag("--baselines", baselines, "add discrete-time filter rows");
    repro->add_option("--out", repro_out, "output directory");

    auto* validate = app.add_subcommand("validate", "check a configuration file");
    add_common(validate, val_args, true);
    validate->add_flag("--print", print, "print the normalized configuration");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*simulate) return cmd_simulate(sim_args, sim_out);
        if (*run) return cmd_run(run_args, run_scenario, run_out);
        if (*repro) return cmd_repro(table, repro_runs, repro_seed, repro_cases, ablations, baselines, repro_out);
        if (*validate) return cmd_validate(val_args, print);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumerical;
    } catch (const InvalidInput& e) {
        std::fprintf(stderr, "invalid input: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitOther;
    }
    return kExitOther;
}

#include "cdmtt/harness/presets.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cdmtt::harness {

namespace {

constexpr std::array kCaseNames{"nominal", "fast", "faster", "informative", "informative-uniform"};

// Summary RMS-GOSPA (m) per benchmark column: rows PMBM, PMB, PHD, CPHD;
// columns exact birth, CSBD1, CSBD2. Column order: fast, faster, informative,
// informative with unit intervals.
using TableColumn = std::array<std::array<double, 3>, 4>;

constexpr std::array<TableColumn, 4> kLinearTable{{
    {{{5.43, 5.47, 5.51}, {5.46, 5.48, 5.54}, {8.77, 9.17, 9.41}, {8.45, 8.80, 9.14}}},
    {{{5.43, 5.47, 5.54}, {5.46, 5.50, 5.53}, {8.83, 9.34, 9.74}, {8.48, 9.12, 9.61}}},
    {{{4.94, 6.38, 9.12}, {5.04, 6.24, 9.14}, {8.26, 9.23, 10.28}, {8.16, 9.37, 10.75}}},
    {{{4.92, 5.55, 5.62}, {4.95, 5.57, 5.60}, {8.38, 9.46, 9.50}, {8.26, 9.61, 9.64}}},
}};

constexpr std::array<TableColumn, 4> kNonlinearTable{{
    {{{194.40, 196.11, 196.14}, {193.71, 195.56, 195.62}, {218.82, 218.96, 219.17}, {219.31, 219.46, 219.28}}},
    {{{199.69, 199.89, 200.15}, {199.68, 199.86, 200.11}, {221.61, 221.54, 221.90}, {222.41, 222.35, 222.43}}},
    {{{184.99, 219.84, 230.59}, {185.17, 220.82, 231.28}, {214.98, 232.66, 235.51}, {215.16, 230.75, 234.77}}},
    {{{186.32, 208.24, 214.85}, {186.82, 208.99, 214.88}, {215.32, 229.89, 229.70}, {214.35, 228.93, 228.08}}},
}};

Matrix diag(std::initializer_list<double> d) {
    Vector v(static_cast<Eigen::Index>(d.size()));
    Eigen::Index i = 0;
    for (double x : d) v(i++) = x;
    return v.asDiagonal();
}

Vector vec(std::initializer_list<double> d) {
    Vector v(static_cast<Eigen::Index>(d.size()));
    Eigen::Index i = 0;
    for (double x : d) v(i++) = x;
    return v;
}

MeasurementModel position_sensor(double variance, double width, double height) {
    MeasurementModel mm;
    mm.h = Matrix::Zero(2, 4);
    mm.h(0, 0) = 1.0;
    mm.h(1, 2) = 1.0;
    mm.r = variance * Matrix::Identity(2, 2);
    mm.p_detect = 0.9;
    mm.clutter_rate = 10.0;
    mm.clutter_region = Box{vec({0.0, 0.0}), vec({width, height})};
    return mm;
}

LinearSde ou_velocity_model() {
    constexpr double gamma = 0.1;
    constexpr double q = 0.2;
    const double mean_vx = 1.0;
    const double mean_vy = 1.0;
    LinearSde sde;
    sde.a = Matrix::Zero(4, 4);
    sde.a(0, 1) = 1.0;
    sde.a(1, 1) = -gamma;
    sde.a(2, 3) = 1.0;
    sde.a(3, 3) = -gamma;
    sde.u = vec({0.0, gamma * mean_vx, 0.0, gamma * mean_vy});
    sde.l = Matrix::Zero(4, 2);
    sde.l(1, 0) = 1.0;
    sde.l(3, 1) = 1.0;
    sde.q_beta = q * Matrix::Identity(2, 2);
    return sde;
}

ScenarioSpec linear_scenario(BenchmarkCase c) {
    ScenarioSpec s;
    s.dynamics.kind = DynamicsKind::kLinear;
    s.dynamics.linear = ou_velocity_model();
    s.birth_death.lambda_appear = 0.08;
    s.birth_death.mu_death = 0.01;
    s.birth_death.mean_appear = vec({200.0, 3.0, 250.0, 0.0});
    s.birth_death.cov_appear = diag({50.0 * 50.0, 1.0, 50.0 * 50.0, 1.0});
    s.measurement = position_sensor(4.0, 600.0, 400.0);
    double v = 0.0;
    switch (c) {
        case BenchmarkCase::kNominal: break;
        case BenchmarkCase::kFast: v = 20.0; break;
        default: v = 25.0; break;
    }
    if (v != 0.0) {
        s.birth_death.mean_appear(1) = v;
        s.birth_death.mean_appear(3) = -v;
    }
    s.units = "m";
    return s;
}

ScenarioSpec nonlinear_scenario(BenchmarkCase c) {
    ScenarioSpec s;
    s.dynamics.kind = DynamicsKind::kReentry;
    s.birth_death.lambda_appear = 0.3;
    s.birth_death.mu_death = 0.01;
    s.birth_death.mean_appear = vec({450.0, -0.1, 6500.0, -1.0});
    s.birth_death.cov_appear = diag({100.0 * 100.0, 9.0, 50.0 * 50.0, 1.0});
    s.measurement = position_sensor(1e-2, 900.0, 6600.0);
    double v = 0.0;
    switch (c) {
        case BenchmarkCase::kNominal: break;
        case BenchmarkCase::kFast: v = 10.0; break;
        default: v = 15.0; break;
    }
    if (v != 0.0) {
        s.birth_death.mean_appear(1) = v;
        s.birth_death.mean_appear(3) = -v;
    }
    s.em_step = 0.01;
    s.units = "km";
    return s;
}

int variant_row(FilterVariant v) {
    switch (continuous_counterpart(v)) {
        case FilterVariant::kCdPmbm: return 0;
        case FilterVariant::kCdPmb: return 1;
        case FilterVariant::kCdPhd: return 2;
        default: return 3;
    }
}

std::string fmt(double v, int digits = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace

std::string to_string(Benchmark b) { return b == Benchmark::kLinear ? "linear" : "nonlinear"; }

std::string to_string(BenchmarkCase c) { return kCaseNames[static_cast<std::size_t>(c)]; }

Benchmark parse_benchmark(std::string_view s) {
    if (s == "linear") return Benchmark::kLinear;
    if (s == "nonlinear") return Benchmark::kNonlinear;
    throw ConfigError("table", "expected 'linear' or 'nonlinear', got '" + std::string(s) + "'");
}

BenchmarkCase parse_case(std::string_view s) {
    for (std::size_t i = 0; i < kCaseNames.size(); ++i)
        if (s == kCaseNames[i]) return static_cast<BenchmarkCase>(i);
    throw ConfigError("case", "unknown benchmark case '" + std::string(s) + "'");
}

BirthMethod exact_birth(Benchmark b) { return b == Benchmark::kLinear ? BirthMethod::kProp1 : BirthMethod::kProp8; }

ExperimentConfig benchmark_config(Benchmark b, BenchmarkCase c, FilterVariant variant) {
    return benchmark_config(b, c, variant, exact_birth(b));
}

ExperimentConfig benchmark_config(Benchmark b, BenchmarkCase c, FilterVariant variant, BirthMethod birth) {
    ExperimentConfig cfg;
    cfg.name = to_string(b) + "-" + to_string(c);
    cfg.scenario = b == Benchmark::kLinear ? linear_scenario(c) : nonlinear_scenario(c);
    if (c == BenchmarkCase::kInformative || c == BenchmarkCase::kInformativeUniform)
        cfg.scenario.birth_death.cov_appear = Matrix::Identity(4, 4);
    cfg.scenario.timestamps.kind =
        c == BenchmarkCase::kInformativeUniform ? TimestampKind::kUniform : TimestampKind::kExponential;
    cfg.scenario.timestamps.count = 100;
    cfg.scenario.timestamps.interval = 1.0;
    cfg.scenario.timestamps.seed = 1;
    cfg.scenario.truth_seed = kBenchmarkTruthSeed;

    cfg.filter.variant = variant;
    cfg.filter.birth = birth;
    cfg.filter.csbd_interval = 1.0;

    cfg.run.runs = 100;
    cfg.run.seed = 1;
    if (b == Benchmark::kNonlinear) {
        cfg.run.gospa.cutoff = 0.1;
        cfg.run.metric_scale = 1000.0;
    } else {
        cfg.run.gospa.cutoff = 10.0;
        cfg.run.metric_scale = 1.0;
    }
    cfg.validate();
    return cfg;
}

std::optional<std::uint64_t> truth_seed_with_tracks(ExperimentConfig cfg, std::size_t tracks, std::uint64_t max_seed) {
    for (std::uint64_t seed = 1; seed <= max_seed; ++seed) {
        cfg.scenario.truth_seed = seed;
        if (make_truth(cfg).tracks.size() == tracks) return seed;
    }
    return std::nullopt;
}

std::optional<double> reference_value(Benchmark b, BenchmarkCase c, FilterVariant variant, BirthMethod birth) {
    if (c == BenchmarkCase::kNominal || is_discrete(variant)) return std::nullopt;
    int col = 0;
    if (birth == exact_birth(b)) col = 0;
    else if (birth == BirthMethod::kCsbd1) col = 1;
    else if (birth == BirthMethod::kCsbd2) col = 2;
    else return std::nullopt;
    const auto& table = b == Benchmark::kLinear ? kLinearTable : kNonlinearTable;
    return table[static_cast<std::size_t>(c) - 1][variant_row(variant)][col];
}

std::vector<ReproRow> run_repro(const ReproOptions& opts, const ReproProgress& progress) {
    require(opts.runs > 0, "run_repro: runs must be positive");
    constexpr std::array kFilters{FilterVariant::kCdPmbm, FilterVariant::kCdPmb, FilterVariant::kCdPhd,
                                  FilterVariant::kCdCphd};
    std::vector<ReproRow> rows;
    for (BenchmarkCase c : opts.cases) {
        const sim::Scenario truth = make_truth(benchmark_config(opts.benchmark, c));
        std::vector<std::pair<FilterVariant, BirthMethod>> plan;
        for (auto v : kFilters) plan.emplace_back(v, exact_birth(opts.benchmark));
        if (opts.ablations)
            for (auto birth : {BirthMethod::kCsbd1, BirthMethod::kCsbd2})
                for (auto v : kFilters) plan.emplace_back(v, birth);
        if (opts.baselines)
            for (auto v : kFilters) plan.emplace_back(discrete_counterpart(v), exact_birth(opts.benchmark));

        for (const auto& [variant, birth] : plan) {
            ExperimentConfig cfg = benchmark_config(opts.benchmark, c, variant, birth);
            cfg.run.runs = opts.runs;
            cfg.run.seed = opts.seed;
            ReproRow row;
            row.benchmark_case = c;
            row.variant = variant;
            row.birth = birth;
            row.report = run_experiment(cfg, &truth);
            row.summary = row.report.summary_rms_gospa;
            row.reference = reference_value(opts.benchmark, c, variant, birth);
            row.mean_seconds = row.report.mean_seconds();
            if (progress) progress(row);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

void write_repro_csv(const std::filesystem::path& path, const std::vector<ReproRow>& rows) {
    std::ofstream os(path);
    if (!os) throw InvalidInput("cannot write " + path.string());
    os << "case,variant,birth,rms_gospa,paper,difference,mean_run_seconds\n";
    for (const auto& r : rows) {
        os << to_string(r.benchmark_case) << ',' << to_string(r.variant) << ',' << to_string(r.birth) << ','
           << fmt(r.summary, 6) << ',';
        if (r.reference) os << fmt(*r.reference, 2) << ',' << fmt(r.summary - *r.reference, 6);
        else os << ',';
        os << ',' << fmt(r.mean_seconds, 6) << '\n';
    }
}

std::string format_repro_table(const std::vector<ReproRow>& rows) {
    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-20s %-14s %-7s %12s %10s %10s %10s\n", "case", "variant", "birth", "rms_gospa",
                  "paper", "diff", "sec/run");
    os << buf;
    for (const auto& r : rows) {
        const std::string paper = r.reference ? fmt(*r.reference, 2) : "-";
        const std::string diff = r.reference ? fmt(r.summary - *r.reference, 2) : "-";
        std::snprintf(buf, sizeof buf, "%-20s %-14s %-7s %12.3f %10s %10s %10.3f\n", to_string(r.benchmark_case).c_str(),
                      to_string(r.variant).c_str(), to_string(r.birth).c_str(), r.summary, paper.c_str(), diff.c_str(),
                      r.mean_seconds);
        os << buf;
    }
    return os.str();
}

}  // namespace cdmtt::harness

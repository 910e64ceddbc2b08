#include "cdmtt/harness/experiment.hpp"

#include "cdmtt/phd.hpp"
#include "cdmtt/pmbm.hpp"
#include "cdmtt/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

namespace cdmtt::harness {

namespace {

class Tracker {
public:
    virtual ~Tracker() = default;
    virtual void predict(const MotionStep& motion, const birth::BirthPpp& birth) = 0;
    virtual void update(const std::vector<Vector>& meas) = 0;
    [[nodiscard]] virtual std::vector<Vector> estimates() const = 0;
    /// Mixture reduction between prediction ticks of the discrete baselines.
    virtual void reduce() {}
};

class PmbmTracker final : public Tracker {
public:
    PmbmTracker(const MeasurementModel& mm, const pmbm::PruneConfig& prune, bool project)
        : mm_(mm), prune_(prune), project_(project) {}

    void predict(const MotionStep& motion, const birth::BirthPpp& birth) override {
        post_ = pmbm::predict(std::move(post_), motion, birth);
    }
    void update(const std::vector<Vector>& meas) override {
        post_ = pmbm::update(post_, meas, mm_, prune_);
        if (project_) post_ = pmbm::pmb_project(post_);
    }
    [[nodiscard]] std::vector<Vector> estimates() const override { return pmbm::estimate(post_, prune_); }

private:
    const MeasurementModel& mm_;
    pmbm::PruneConfig prune_;
    bool project_;
    pmbm::PmbmPosterior post_;
};

class PhdTracker final : public Tracker {
public:
    PhdTracker(const MeasurementModel& mm, const phd::MixtureCaps& caps) : mm_(mm), caps_(caps) {}

    void predict(const MotionStep& motion, const birth::BirthPpp& birth) override {
        state_ = phd::phd_predict(state_, motion, birth);
    }
    void update(const std::vector<Vector>& meas) override { state_ = phd::phd_update(state_, meas, mm_, caps_); }
    [[nodiscard]] std::vector<Vector> estimates() const override { return phd::phd_estimate(state_.intensity); }
    void reduce() override { state_.intensity = phd::reduce_mixture(std::move(state_.intensity), caps_); }

private:
    const MeasurementModel& mm_;
    phd::MixtureCaps caps_;
    phd::PhdState state_;
};

class CphdTracker final : public Tracker {
public:
    CphdTracker(const MeasurementModel& mm, const phd::MixtureCaps& caps, int max_cardinality)
        : mm_(mm), caps_(caps) {
        state_.max_cardinality = max_cardinality;
    }

    void predict(const MotionStep& motion, const birth::BirthPpp& birth) override {
        state_ = phd::cphd_predict(state_, motion, birth);
    }
    void update(const std::vector<Vector>& meas) override { state_ = phd::cphd_update(state_, meas, mm_, caps_); }
    [[nodiscard]] std::vector<Vector> estimates() const override { return phd::cphd_estimate(state_); }
    void reduce() override { state_.intensity = phd::reduce_mixture(std::move(state_.intensity), caps_); }

private:
    const MeasurementModel& mm_;
    phd::MixtureCaps caps_;
    phd::CphdState state_;
};

std::unique_ptr<Tracker> make_tracker(const ExperimentConfig& cfg, const MeasurementModel& mm) {
    const auto& f = cfg.filter;
    switch (continuous_counterpart(f.variant)) {
        case FilterVariant::kCdPmbm: return std::make_unique<PmbmTracker>(mm, f.prune, false);
        case FilterVariant::kCdPmb: return std::make_unique<PmbmTracker>(mm, f.prune, true);
        case FilterVariant::kCdPhd: return std::make_unique<PhdTracker>(mm, f.mixture);
        case FilterVariant::kCdCphd: return std::make_unique<CphdTracker>(mm, f.mixture, f.max_cardinality);
        default: break;
    }
    throw ConfigError("filter.variant", "unsupported variant");
}

std::vector<Vector> positions(const std::vector<Vector>& states, const std::vector<int>& idx, double scale) {
    std::vector<Vector> out;
    out.reserve(states.size());
    for (const auto& x : states) {
        Vector p(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i) p(static_cast<Eigen::Index>(i)) = x(idx[i]) * scale;
        out.push_back(std::move(p));
    }
    return out;
}

/// Runs body(i) for i in [0, n) on the worker threads; rethrows the first failure.
template <typename Body>
void parallel_for(int n, Body&& body) {
    const int workers = std::max(1, std::min(thread_count(), n));
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (int i = next++; i < n; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = n;
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace

FilterModel::FilterModel(const ExperimentConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    if (cfg_.scenario.dynamics.kind == DynamicsKind::kReentry)
        nsde_ = nonlinear::reentry_model(cfg_.scenario.dynamics.reentry);
    else
        nsde_ = nonlinear::from_linear(cfg_.scenario.dynamics.linear);
}

MotionStep FilterModel::motion(double dt) const {
    require(dt > 0.0, "FilterModel::motion: dt must be positive");
    const double mu = cfg_.scenario.birth_death.mu_death;
    if (cfg_.scenario.dynamics.kind == DynamicsKind::kLinear) {
        DiscretizedTransition tr;
        {
            std::lock_guard lock(mutex_);
            auto it = transitions_.find(dt);
            if (it == transitions_.end())
                it = transitions_.emplace(dt, discretize(cfg_.scenario.dynamics.linear, dt, mu)).first;
            tr = it->second;
        }
        return linear_motion(tr, !cfg_.filter.strict_paper);
    }
    MotionStep step;
    step.p_survival = survival_prob(mu, dt);
    step.propagate = [nsde = nsde_, dt, ode = cfg_.filter.ode](const Gaussian& g) {
        return nonlinear::propagate_moments(nsde, g, dt, ode);
    };
    return step;
}

Gaussian FilterModel::birth_density(double dt) const {
    const auto& params = cfg_.scenario.birth_death;
    const bool linear = cfg_.scenario.dynamics.kind == DynamicsKind::kLinear;
    const auto& sde = cfg_.scenario.dynamics.linear;
    const auto& ode = cfg_.filter.ode;
    switch (cfg_.filter.birth) {
        case BirthMethod::kProp1: return birth::birth_moments_linear(sde, params, dt);
        case BirthMethod::kProp8: return nonlinear::birth_moments_nonlinear(nsde_, params, dt, ode);
        case BirthMethod::kCsbd1:
            return linear ? birth::csbd1_moments(sde, params, cfg_.filter.csbd_interval)
                          : nonlinear::csbd1_moments_nonlinear(nsde_, params, cfg_.filter.csbd_interval, ode);
        case BirthMethod::kCsbd2: return birth::csbd2_moments(params);
        case BirthMethod::kSteady: return birth::steady_state_moments(sde);
    }
    throw ConfigError("filter.birth", "unsupported birth method");
}

birth::BirthPpp FilterModel::birth(double dt) const {
    require(dt > 0.0, "FilterModel::birth: dt must be positive");
    // CSBD and steady densities do not depend on dt
    const BirthMethod method = cfg_.filter.birth;
    const double key = method == BirthMethod::kProp1 || method == BirthMethod::kProp8 ? dt : 0.0;
    birth::BirthPpp out;
    out.weight = expected_births(cfg_.scenario.birth_death, dt);
    {
        std::lock_guard lock(mutex_);
        if (auto it = births_.find(key); it != births_.end()) {
            out.density = it->second;
            return out;
        }
    }
    Gaussian density = birth_density(dt);
    std::lock_guard lock(mutex_);
    out.density = births_.emplace(key, std::move(density)).first->second;
    return out;
}

FilterTrace run_filter(const ExperimentConfig& cfg, const FilterModel& model, const std::vector<double>& timestamps,
                       const sim::MeasurementLog& log) {
    require(timestamps.size() == log.size(), "run_filter: timestamps and measurement log differ in length");
    FilterTrace trace;
    trace.estimates.reserve(log.size());
    const auto start = std::chrono::steady_clock::now();
    auto tracker = make_tracker(cfg, model.measurement());

    if (!is_discrete(cfg.filter.variant)) {
        double prev = 0.0;
        for (std::size_t k = 0; k < log.size(); ++k) {
            const double dt = timestamps[k] - prev;
            tracker->predict(model.motion(dt), model.birth(dt));
            ++trace.predictions;
            tracker->update(log[k]);
            trace.estimates.push_back(tracker->estimates());
            prev = timestamps[k];
        }
    } else {
        double tick = timestamps.empty() ? 1.0 : timestamps.front();
        for (std::size_t k = 1; k < timestamps.size(); ++k) tick = std::min(tick, timestamps[k] - timestamps[k - 1]);
        const MotionStep motion = model.motion(tick);
        const birth::BirthPpp birth = model.birth(tick);
        long done = 0;
        for (std::size_t k = 0; k < log.size(); ++k) {
            const long target = std::max(done + 1, std::lround(timestamps[k] / tick));
            for (; done < target; ++done) {
                tracker->predict(motion, birth);
                if (done + 1 < target) tracker->reduce();
                ++trace.predictions;
            }
            tracker->update(log[k]);
            trace.estimates.push_back(tracker->estimates());
        }
    }
    trace.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return trace;
}

double RunReport::mean_seconds() const {
    if (run_seconds.empty()) return 0.0;
    double s = 0.0;
    for (double v : run_seconds) s += v;
    return s / static_cast<double>(run_seconds.size());
}

sim::Scenario make_truth(const ExperimentConfig& cfg) {
    const auto& s = cfg.scenario;
    const auto times = s.timestamps.generate();
    sim::Scenario scn;
    if (s.dynamics.kind == DynamicsKind::kLinear)
        scn = sim::simulate_truth(s.dynamics.linear, s.birth_death, times, s.truth_seed);
    else
        scn = sim::simulate_truth(nonlinear::reentry_model(s.dynamics.reentry), s.birth_death, times, s.truth_seed,
                                  s.em_step);
    scn.unit_system = s.units;
    return scn;
}

std::uint64_t replication_seed(std::uint64_t seed, int run) {
    return derive_seed(seed, {100, static_cast<std::uint64_t>(run)});
}

GospaResult evaluate(const ExperimentConfig& cfg, const std::vector<Vector>& truth, const std::vector<Vector>& estimates) {
    const auto& idx = cfg.run.position_indices;
    GospaResult g = gospa(positions(truth, idx, 1.0), positions(estimates, idx, 1.0), cfg.run.gospa);
    const double s = cfg.run.metric_scale;
    g.total *= s;
    g.localisation *= s * s;
    g.missed *= s * s;
    g.false_targets *= s * s;
    return g;
}

RunReport run_experiment(const ExperimentConfig& cfg, const sim::Scenario* truth) {
    cfg.validate();
    const sim::Scenario generated = truth ? sim::Scenario{} : make_truth(cfg);
    const sim::Scenario& scn = truth ? *truth : generated;
    const FilterModel model(cfg);
    const int runs = cfg.run.runs;
    const std::size_t steps = scn.steps();

    std::vector<std::vector<GospaResult>> per_run(runs);
    std::vector<double> seconds(runs, 0.0);
    parallel_for(runs, [&](int r) {
        const auto log = sim::generate_measurements(scn, model.measurement(), replication_seed(cfg.run.seed, r));
        const FilterTrace trace = run_filter(cfg, model, scn.timestamps, log);
        seconds[r] = trace.seconds;
        per_run[r].resize(steps);
        for (std::size_t k = 0; k < steps; ++k)
            per_run[r][k] = evaluate(cfg, scn.states_at(static_cast<int>(k)), trace.estimates[k]);
    });

    RunReport report;
    report.config_json = serialize_config(cfg);
    report.seed = cfg.run.seed;
    report.run_seconds = seconds;
    report.run_gospa.assign(runs, std::vector<double>(steps));
    std::vector<GospaResult> column(runs);
    for (std::size_t k = 0; k < steps; ++k) {
        for (int r = 0; r < runs; ++r) {
            column[r] = per_run[r][k];
            report.run_gospa[r][k] = per_run[r][k].total;
        }
        const GospaResult agg = rms_over_runs(column);
        report.steps.push_back({static_cast<int>(k), scn.timestamps[k], agg.total, agg.localisation, agg.missed,
                                agg.false_targets});
    }
    report.summary_rms_gospa = summary_from_steps(report.steps);
    return report;
}

double summary_from_steps(const std::vector<StepMetrics>& steps) {
    if (steps.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& s : steps) acc += s.rms_gospa * s.rms_gospa;
    return std::sqrt(acc / static_cast<double>(steps.size()));
}

int thread_count() {
    if (const char* env = std::getenv("CDMTT_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<int>(std::min(v, 1024L));
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void write_steps_csv(const std::filesystem::path& path, const RunReport& report) {
    std::ofstream os(path);
    if (!os) throw InvalidInput("cannot write " + path.string());
    os << "step,time,rms_gospa,loc,missed,false\n";
    char buf[256];
    for (const auto& s : report.steps) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.step, s.time, s.rms_gospa,
                      s.localisation, s.missed, s.false_targets);
        os << buf;
    }
}

void write_summary_json(const std::filesystem::path& path, const RunReport& report) {
    nlohmann::ordered_json j;
    j["summary_rms_gospa"] = report.summary_rms_gospa;
    j["runs"] = report.run_seconds.size();
    j["seed"] = report.seed;
    j["mean_run_seconds"] = report.mean_seconds();
    j["run_seconds"] = report.run_seconds;
    j["config"] = nlohmann::ordered_json::parse(report.config_json);
    std::ofstream os(path);
    if (!os) throw InvalidInput("cannot write " + path.string());
    os << j.dump(2) << "\n";
}

std::vector<StepMetrics> read_steps_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw InvalidInput("cannot read " + path.string());
    std::string line;
    std::getline(is, line);
    std::vector<StepMetrics> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        StepMetrics s;
        if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf,%lf", &s.step, &s.time, &s.rms_gospa, &s.localisation,
                        &s.missed, &s.false_targets) != 6)
            throw InvalidInput("malformed CSV row: " + line);
        out.push_back(s);
    }
    return out;
}

}  // namespace cdmtt::harness

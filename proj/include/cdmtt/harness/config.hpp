#pragma once

#include "cdmtt/gospa.hpp"
#include "cdmtt/model.hpp"
#include "cdmtt/nonlinear.hpp"
#include "cdmtt/phd.hpp"
#include "cdmtt/pmbm.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cdmtt::harness {

/// Invalid or incomplete experiment configuration. `field` is a JSON path such
/// as "filter.prune.max_globals", or "line 12, column 4" for syntax errors.
class ConfigError : public InvalidInput {
public:
    ConfigError(std::string field, const std::string& message)
        : InvalidInput(field + ": " + message), field_(std::move(field)) {}
    [[nodiscard]] const std::string& field() const { return field_; }

private:
    std::string field_;
};

enum class DynamicsKind { kLinear, kReentry };

enum class FilterVariant {
    kCdPmbm,
    kCdPmb,
    kCdPhd,
    kCdCphd,
    kDiscretePmbm,
    kDiscretePmb,
    kDiscretePhd,
    kDiscreteCphd,
};

enum class BirthMethod { kProp1, kProp8, kCsbd1, kCsbd2, kSteady };

enum class TimestampKind { kExponential, kUniform, kExplicit };

struct DynamicsSpec {
    DynamicsKind kind = DynamicsKind::kLinear;
    LinearSde linear;
    nonlinear::ReentryParams reentry;
};

struct TimestampSpec {
    TimestampKind kind = TimestampKind::kExponential;
    std::size_t count = 100;
    double interval = 1.0;  ///< mean interval (exponential) or spacing (uniform)
    std::uint64_t seed = 1;
    std::vector<double> times;  ///< explicit kind only

    [[nodiscard]] std::vector<double> generate() const;
};

struct ScenarioSpec {
    DynamicsSpec dynamics;
    BirthDeathParams birth_death;
    MeasurementModel measurement;
    TimestampSpec timestamps;
    std::uint64_t truth_seed = 1;
    double em_step = 0.01;
    std::string units = "m";
};

struct FilterSpec {
    FilterVariant variant = FilterVariant::kCdPmbm;
    BirthMethod birth = BirthMethod::kProp1;
    pmbm::PruneConfig prune;
    phd::MixtureCaps mixture;
    int max_cardinality = 50;
    /// Bernoulli prediction without the SDE offset, as the prediction lemma is printed.
    bool strict_paper = false;
    nonlinear::OdeSolverConfig ode;
    /// Expected sensor interval assumed by the CSBD1 birth approximation.
    double csbd_interval = 1.0;
};

struct RunSpec {
    int runs = 100;
    std::uint64_t seed = 1;
    GospaParams gospa;
    std::vector<int> position_indices{0, 2};
    /// Multiplies reported GOSPA values (e.g. 1000 to report km scenarios in m).
    double metric_scale = 1.0;
};

struct ExperimentConfig {
    std::string name = "experiment";
    ScenarioSpec scenario;
    FilterSpec filter;
    RunSpec run;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& cfg);

std::string to_string(FilterVariant v);
std::string to_string(BirthMethod b);
FilterVariant parse_variant(std::string_view s);
BirthMethod parse_birth(std::string_view s);
bool is_discrete(FilterVariant v);
/// The continuous-discrete variant with the same filter type.
FilterVariant continuous_counterpart(FilterVariant v);
FilterVariant discrete_counterpart(FilterVariant v);

}  // namespace cdmtt::harness

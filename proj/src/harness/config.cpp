#include "cdmtt/harness/config.hpp"

#include "cdmtt/birth.hpp"
#include "cdmtt/rng.hpp"
#include "cdmtt/sim.hpp"

#include <json.hpp>

#include <array>
#include <fstream>
#include <sstream>
#include <utility>

namespace cdmtt::harness {

using Json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kFormat = "cdmtt-experiment";
constexpr int kVersion = 1;

constexpr std::array<std::pair<FilterVariant, std::string_view>, 8> kVariants{{
    {FilterVariant::kCdPmbm, "cd-pmbm"},
    {FilterVariant::kCdPmb, "cd-pmb"},
    {FilterVariant::kCdPhd, "cd-phd"},
    {FilterVariant::kCdCphd, "cd-cphd"},
    {FilterVariant::kDiscretePmbm, "discrete-pmbm"},
    {FilterVariant::kDiscretePmb, "discrete-pmb"},
    {FilterVariant::kDiscretePhd, "discrete-phd"},
    {FilterVariant::kDiscreteCphd, "discrete-cphd"},
}};

constexpr std::array<std::pair<BirthMethod, std::string_view>, 5> kBirths{{
    {BirthMethod::kProp1, "prop1"},
    {BirthMethod::kProp8, "prop8"},
    {BirthMethod::kCsbd1, "csbd1"},
    {BirthMethod::kCsbd2, "csbd2"},
    {BirthMethod::kSteady, "steady"},
}};

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

/// Reads fields of one JSON object and reports unknown keys.
class Reader {
public:
    Reader(const Json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    [[nodiscard]] bool has(const std::string& key) const { return node_.contains(key); }

    const Json& at(const std::string& key) {
        seen_.push_back(key);
        if (!node_.contains(key)) throw ConfigError(join(path_, key), "missing field");
        return node_.at(key);
    }

    Reader object(const std::string& key) { return {at(key), join(path_, key)}; }

    double number(const std::string& key) {
        const Json& v = at(key);
        if (!v.is_number()) throw ConfigError(join(path_, key), "expected a number");
        return v.get<double>();
    }
    double number(const std::string& key, double fallback) { return has(key) ? number(key) : mark(key, fallback); }

    std::int64_t integer(const std::string& key) {
        const Json& v = at(key);
        if (!v.is_number_integer()) throw ConfigError(join(path_, key), "expected an integer");
        return v.get<std::int64_t>();
    }
    std::int64_t integer(const std::string& key, std::int64_t fallback) {
        return has(key) ? integer(key) : mark(key, fallback);
    }

    std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
        if (!has(key)) return mark(key, fallback);
        const Json& v = at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
            throw ConfigError(join(path_, key), "expected a non-negative integer");
        return v.get<std::uint64_t>();
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return mark(key, fallback);
        const Json& v = at(key);
        if (!v.is_boolean()) throw ConfigError(join(path_, key), "expected true or false");
        return v.get<bool>();
    }

    std::string string(const std::string& key) {
        const Json& v = at(key);
        if (!v.is_string()) throw ConfigError(join(path_, key), "expected a string");
        return v.get<std::string>();
    }
    std::string string(const std::string& key, const std::string& fallback) {
        return has(key) ? string(key) : mark(key, fallback);
    }

    Vector vector(const std::string& key) {
        const Json& v = at(key);
        const auto field = join(path_, key);
        if (!v.is_array()) throw ConfigError(field, "expected an array of numbers");
        Vector out(static_cast<Eigen::Index>(v.size()));
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) throw ConfigError(field + "[" + std::to_string(i) + "]", "expected a number");
            out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
        }
        return out;
    }

    Matrix matrix(const std::string& key) {
        const Json& v = at(key);
        const auto field = join(path_, key);
        if (!v.is_array() || v.empty() || !v[0].is_array())
            throw ConfigError(field, "expected a non-empty array of rows");
        const auto rows = v.size();
        const auto cols = v[0].size();
        Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (std::size_t i = 0; i < rows; ++i) {
            if (!v[i].is_array() || v[i].size() != cols)
                throw ConfigError(field + "[" + std::to_string(i) + "]", "rows must have equal length");
            for (std::size_t j = 0; j < cols; ++j) {
                if (!v[i][j].is_number())
                    throw ConfigError(field + "[" + std::to_string(i) + "][" + std::to_string(j) + "]",
                                      "expected a number");
                out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[i][j].get<double>();
            }
        }
        return out;
    }

    void finish() const {
        for (const auto& [key, value] : node_.items())
            if (std::find(seen_.begin(), seen_.end(), key) == seen_.end())
                throw ConfigError(join(path_, key), "unknown field");
    }

private:
    template <typename T>
    T mark(const std::string& key, T value) {
        seen_.push_back(key);
        return value;
    }

    const Json& node_;
    std::string path_;
    std::vector<std::string> seen_;
};

Json to_json(const Vector& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Json to_json(const Matrix& m) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_json(Vector(m.row(i).transpose())));
    return out;
}

std::string timestamp_kind_name(TimestampKind k) {
    switch (k) {
        case TimestampKind::kExponential: return "exponential";
        case TimestampKind::kUniform: return "uniform";
        case TimestampKind::kExplicit: return "explicit";
    }
    return "exponential";
}

template <typename F>
void checked(const std::string& field, F&& check) {
    try {
        check();
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidInput& e) {
        throw ConfigError(field, e.what());
    } catch (const NotApplicable& e) {
        throw ConfigError(field, e.what());
    }
}

}  // namespace

std::string to_string(FilterVariant v) {
    for (const auto& [value, name] : kVariants)
        if (value == v) return std::string(name);
    return "cd-pmbm";
}

std::string to_string(BirthMethod b) {
    for (const auto& [value, name] : kBirths)
        if (value == b) return std::string(name);
    return "prop1";
}

FilterVariant parse_variant(std::string_view s) {
    for (const auto& [value, name] : kVariants)
        if (name == s) return value;
    throw ConfigError("filter.variant", "unknown variant '" + std::string(s) + "'");
}

BirthMethod parse_birth(std::string_view s) {
    for (const auto& [value, name] : kBirths)
        if (name == s) return value;
    throw ConfigError("filter.birth", "unknown birth method '" + std::string(s) + "'");
}

bool is_discrete(FilterVariant v) {
    return v == FilterVariant::kDiscretePmbm || v == FilterVariant::kDiscretePmb || v == FilterVariant::kDiscretePhd ||
           v == FilterVariant::kDiscreteCphd;
}

FilterVariant continuous_counterpart(FilterVariant v) {
    switch (v) {
        case FilterVariant::kDiscretePmbm: return FilterVariant::kCdPmbm;
        case FilterVariant::kDiscretePmb: return FilterVariant::kCdPmb;
        case FilterVariant::kDiscretePhd: return FilterVariant::kCdPhd;
        case FilterVariant::kDiscreteCphd: return FilterVariant::kCdCphd;
        default: return v;
    }
}

FilterVariant discrete_counterpart(FilterVariant v) {
    switch (v) {
        case FilterVariant::kCdPmbm: return FilterVariant::kDiscretePmbm;
        case FilterVariant::kCdPmb: return FilterVariant::kDiscretePmb;
        case FilterVariant::kCdPhd: return FilterVariant::kDiscretePhd;
        case FilterVariant::kCdCphd: return FilterVariant::kDiscreteCphd;
        default: return v;
    }
}

std::vector<double> TimestampSpec::generate() const {
    switch (kind) {
        case TimestampKind::kExponential: return sim::sample_timestamps(count, interval, seed);
        case TimestampKind::kUniform: {
            std::vector<double> out(count);
            for (std::size_t k = 0; k < count; ++k) out[k] = interval * static_cast<double>(k + 1);
            return out;
        }
        case TimestampKind::kExplicit: return times;
    }
    return times;
}

void ExperimentConfig::validate() const {
    const auto& scn = scenario;
    const auto n = scn.birth_death.mean_appear.size();
    if (scn.dynamics.kind == DynamicsKind::kLinear) {
        checked("scenario.dynamics", [&] { scn.dynamics.linear.validate(); });
        if (scn.dynamics.linear.state_dim() != n)
            throw ConfigError("scenario.birth_death.mean", "dimension differs from the dynamics");
    } else {
        const auto& p = scn.dynamics.reentry;
        if (!(p.gm0 > 0.0 && p.beta0 >= 0.0 && p.r0 > 0.0 && p.h0 > 0.0 && p.q >= 0.0))
            throw ConfigError("scenario.dynamics", "re-entry parameters must be positive");
        if (n != 4) throw ConfigError("scenario.birth_death.mean", "re-entry state has dimension 4");
    }
    checked("scenario.birth_death", [&] { scn.birth_death.validate(); });
    checked("scenario.measurement", [&] { scn.measurement.validate(); });
    if (scn.measurement.h.cols() != n) throw ConfigError("scenario.measurement.h", "column count differs from the state dimension");

    const auto& ts = scn.timestamps;
    if (ts.kind == TimestampKind::kExplicit) {
        if (ts.times.empty()) throw ConfigError("scenario.timestamps.times", "no times given");
        if (!(ts.times.front() > 0.0)) throw ConfigError("scenario.timestamps.times", "times must be positive");
        for (std::size_t k = 1; k < ts.times.size(); ++k)
            if (!(ts.times[k] > ts.times[k - 1]))
                throw ConfigError("scenario.timestamps.times", "times must be strictly increasing");
    } else {
        if (ts.count < 1) throw ConfigError("scenario.timestamps.count", "must be at least 1");
        if (!(ts.interval > 0.0)) throw ConfigError("scenario.timestamps.interval", "must be positive");
    }
    if (!(scn.em_step > 0.0)) throw ConfigError("scenario.em_step", "must be positive");

    checked("filter.prune", [&] { filter.prune.validate(); });
    checked("filter.mixture", [&] { filter.mixture.validate(); });
    checked("filter.ode", [&] { filter.ode.validate(); });
    if (filter.max_cardinality < 1) throw ConfigError("filter.max_cardinality", "must be positive");
    if (!(filter.csbd_interval > 0.0)) throw ConfigError("filter.csbd_interval", "must be positive");
    const bool linear = scn.dynamics.kind == DynamicsKind::kLinear;
    if (!linear && filter.birth == BirthMethod::kProp1)
        throw ConfigError("filter.birth", "prop1 needs linear dynamics; use prop8 for the re-entry model");
    if (filter.birth == BirthMethod::kSteady) {
        if (!linear) throw ConfigError("filter.birth", "steady needs linear dynamics");
        checked("filter.birth", [&] { (void)birth::steady_state_moments(scn.dynamics.linear); });
    }

    if (run.runs < 1) throw ConfigError("run.runs", "must be at least 1");
    checked("run.gospa", [&] { run.gospa.validate(); });
    if (run.position_indices.empty()) throw ConfigError("run.position_indices", "must not be empty");
    for (int i : run.position_indices)
        if (i < 0 || i >= n) throw ConfigError("run.position_indices", "index outside the state");
    if (!(run.metric_scale > 0.0)) throw ConfigError("run.metric_scale", "must be positive");
}

ExperimentConfig parse_config(std::string_view text) {
    Json root;
    try {
        root = Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        // byte offset -> line and column
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col), "syntax error");
    }

    ExperimentConfig cfg;
    Reader top(root, "");
    if (top.string("format") != kFormat) throw ConfigError("format", "expected \"cdmtt-experiment\"");
    if (top.integer("version") != kVersion) throw ConfigError("version", "unsupported version");
    cfg.name = top.string("name", cfg.name);

    {
        Reader scn = top.object("scenario");
        auto& s = cfg.scenario;
        {
            Reader dyn = scn.object("dynamics");
            const std::string kind = dyn.string("kind");
            if (kind == "linear") {
                s.dynamics.kind = DynamicsKind::kLinear;
                s.dynamics.linear.a = dyn.matrix("a");
                s.dynamics.linear.u = dyn.vector("u");
                s.dynamics.linear.l = dyn.matrix("l");
                s.dynamics.linear.q_beta = dyn.matrix("q_beta");
            } else if (kind == "reentry") {
                s.dynamics.kind = DynamicsKind::kReentry;
                auto& p = s.dynamics.reentry;
                p.gm0 = dyn.number("gm0", p.gm0);
                p.beta0 = dyn.number("beta0", p.beta0);
                p.psi = dyn.number("psi", p.psi);
                p.r0 = dyn.number("r0", p.r0);
                p.h0 = dyn.number("h0", p.h0);
                p.q = dyn.number("q", p.q);
            } else {
                throw ConfigError("scenario.dynamics.kind", "expected \"linear\" or \"reentry\"");
            }
            dyn.finish();
        }
        {
            Reader bd = scn.object("birth_death");
            s.birth_death.lambda_appear = bd.number("lambda");
            s.birth_death.mu_death = bd.number("mu");
            s.birth_death.mean_appear = bd.vector("mean");
            s.birth_death.cov_appear = bd.matrix("cov");
            bd.finish();
        }
        {
            Reader mm = scn.object("measurement");
            s.measurement.h = mm.matrix("h");
            s.measurement.r = mm.matrix("r");
            s.measurement.p_detect = mm.number("p_detect");
            s.measurement.clutter_rate = mm.number("clutter_rate");
            s.measurement.clutter_region.lower = mm.vector("clutter_lower");
            s.measurement.clutter_region.upper = mm.vector("clutter_upper");
            mm.finish();
        }
        {
            Reader ts = scn.object("timestamps");
            const std::string kind = ts.string("kind");
            auto& t = s.timestamps;
            if (kind == "exponential" || kind == "uniform") {
                t.kind = kind == "uniform" ? TimestampKind::kUniform : TimestampKind::kExponential;
                const auto count = ts.integer("count");
                if (count < 1) throw ConfigError("scenario.timestamps.count", "must be at least 1");
                t.count = static_cast<std::size_t>(count);
                t.interval = ts.number("interval");
                if (t.kind == TimestampKind::kExponential) t.seed = ts.seed("seed", t.seed);
            } else if (kind == "explicit") {
                t.kind = TimestampKind::kExplicit;
                const Vector v = ts.vector("times");
                t.times.assign(v.data(), v.data() + v.size());
            } else {
                throw ConfigError("scenario.timestamps.kind", "expected \"exponential\", \"uniform\" or \"explicit\"");
            }
            ts.finish();
        }
        s.truth_seed = scn.seed("truth_seed", s.truth_seed);
        s.em_step = scn.number("em_step", s.em_step);
        s.units = scn.string("units", s.units);
        scn.finish();
    }
    {
        Reader flt = top.object("filter");
        auto& f = cfg.filter;
        f.variant = parse_variant(flt.string("variant"));
        f.birth = parse_birth(flt.string("birth", to_string(f.birth)));
        if (flt.has("prune")) {
            Reader pr = flt.object("prune");
            auto& p = f.prune;
            p.max_globals = static_cast<int>(pr.integer("max_globals", p.max_globals));
            p.ppp_weight_floor = pr.number("ppp_weight_floor", p.ppp_weight_floor);
            p.mbm_weight_floor = pr.number("mbm_weight_floor", p.mbm_weight_floor);
            p.existence_floor = pr.number("existence_floor", p.existence_floor);
            p.gate_threshold = pr.number("gate_threshold", p.gate_threshold);
            p.estimate_threshold = pr.number("estimate_threshold", p.estimate_threshold);
            pr.finish();
        }
        if (flt.has("mixture")) {
            Reader mx = flt.object("mixture");
            auto& m = f.mixture;
            m.prune_threshold = mx.number("prune_threshold", m.prune_threshold);
            m.merge_threshold = mx.number("merge_threshold", m.merge_threshold);
            m.max_components = static_cast<int>(mx.integer("max_components", m.max_components));
            mx.finish();
        }
        f.max_cardinality = static_cast<int>(flt.integer("max_cardinality", f.max_cardinality));
        f.strict_paper = flt.boolean("strict_paper", f.strict_paper);
        if (flt.has("ode")) {
            Reader ode = flt.object("ode");
            f.ode.rel_tol = ode.number("rel_tol", f.ode.rel_tol);
            f.ode.abs_tol = ode.number("abs_tol", f.ode.abs_tol);
            if (ode.has("max_step")) f.ode.max_step = ode.number("max_step");
            const std::string method = ode.string("method", "linearized-ode");
            if (method == "linearized-ode")
                f.ode.method = nonlinear::MomentMethod::kLinearizedOde;
            else if (method == "fixed-linearization")
                f.ode.method = nonlinear::MomentMethod::kFixedLinearization;
            else
                throw ConfigError("filter.ode.method", "expected \"linearized-ode\" or \"fixed-linearization\"");
            ode.finish();
        }
        f.csbd_interval = flt.number("csbd_interval", f.csbd_interval);
        flt.finish();
    }
    {
        Reader run = top.object("run");
        auto& r = cfg.run;
        r.runs = static_cast<int>(run.integer("runs", r.runs));
        r.seed = run.seed("seed", r.seed);
        if (run.has("gospa")) {
            Reader g = run.object("gospa");
            r.gospa.cutoff = g.number("cutoff", r.gospa.cutoff);
            r.gospa.order = g.number("order", r.gospa.order);
            r.gospa.alpha = g.number("alpha", r.gospa.alpha);
            g.finish();
        }
        if (run.has("position_indices")) {
            const Vector idx = run.vector("position_indices");
            r.position_indices.clear();
            for (Eigen::Index i = 0; i < idx.size(); ++i) {
                if (idx(i) != std::floor(idx(i))) throw ConfigError("run.position_indices", "expected integers");
                r.position_indices.push_back(static_cast<int>(idx(i)));
            }
        }
        r.metric_scale = run.number("metric_scale", r.metric_scale);
        run.finish();
    }
    top.finish();
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), "cannot open configuration file");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
    Json root;
    root["format"] = kFormat;
    root["version"] = kVersion;
    root["name"] = cfg.name;

    const auto& s = cfg.scenario;
    Json scn;
    Json dyn;
    if (s.dynamics.kind == DynamicsKind::kLinear) {
        dyn["kind"] = "linear";
        dyn["a"] = to_json(s.dynamics.linear.a);
        dyn["u"] = to_json(s.dynamics.linear.u);
        dyn["l"] = to_json(s.dynamics.linear.l);
        dyn["q_beta"] = to_json(s.dynamics.linear.q_beta);
    } else {
        const auto& p = s.dynamics.reentry;
        dyn["kind"] = "reentry";
        dyn["gm0"] = p.gm0;
        dyn["beta0"] = p.beta0;
        dyn["psi"] = p.psi;
        dyn["r0"] = p.r0;
        dyn["h0"] = p.h0;
        dyn["q"] = p.q;
    }
    scn["dynamics"] = dyn;
    scn["birth_death"] = {{"lambda", s.birth_death.lambda_appear},
                          {"mu", s.birth_death.mu_death},
                          {"mean", to_json(s.birth_death.mean_appear)},
                          {"cov", to_json(s.birth_death.cov_appear)}};
    scn["measurement"] = {{"h", to_json(s.measurement.h)},
                          {"r", to_json(s.measurement.r)},
                          {"p_detect", s.measurement.p_detect},
                          {"clutter_rate", s.measurement.clutter_rate},
                          {"clutter_lower", to_json(s.measurement.clutter_region.lower)},
                          {"clutter_upper", to_json(s.measurement.clutter_region.upper)}};
    Json ts;
    ts["kind"] = timestamp_kind_name(s.timestamps.kind);
    if (s.timestamps.kind == TimestampKind::kExplicit) {
        ts["times"] = s.timestamps.times;
    } else {
        ts["count"] = s.timestamps.count;
        ts["interval"] = s.timestamps.interval;
        if (s.timestamps.kind == TimestampKind::kExponential) ts["seed"] = s.timestamps.seed;
    }
    scn["timestamps"] = ts;
    scn["truth_seed"] = s.truth_seed;
    scn["em_step"] = s.em_step;
    scn["units"] = s.units;
    root["scenario"] = scn;

    const auto& f = cfg.filter;
    Json flt;
    flt["variant"] = to_string(f.variant);
    flt["birth"] = to_string(f.birth);
    flt["prune"] = {{"max_globals", f.prune.max_globals},
                    {"ppp_weight_floor", f.prune.ppp_weight_floor},
                    {"mbm_weight_floor", f.prune.mbm_weight_floor},
                    {"existence_floor", f.prune.existence_floor},
                    {"gate_threshold", f.prune.gate_threshold},
                    {"estimate_threshold", f.prune.estimate_threshold}};
    flt["mixture"] = {{"prune_threshold", f.mixture.prune_threshold},
                      {"merge_threshold", f.mixture.merge_threshold},
                      {"max_components", f.mixture.max_components}};
    flt["max_cardinality"] = f.max_cardinality;
    flt["strict_paper"] = f.strict_paper;
    Json ode;
    ode["rel_tol"] = f.ode.rel_tol;
    ode["abs_tol"] = f.ode.abs_tol;
    if (std::isfinite(f.ode.max_step)) ode["max_step"] = f.ode.max_step;
    ode["method"] =
        f.ode.method == nonlinear::MomentMethod::kLinearizedOde ? "linearized-ode" : "fixed-linearization";
    flt["ode"] = ode;
    flt["csbd_interval"] = f.csbd_interval;
    root["filter"] = flt;

    const auto& r = cfg.run;
    root["run"] = {{"runs", r.runs},
                   {"seed", r.seed},
                   {"gospa", {{"cutoff", r.gospa.cutoff}, {"order", r.gospa.order}, {"alpha", r.gospa.alpha}}},
                   {"position_indices", r.position_indices},
                   {"metric_scale", r.metric_scale}};
    return root.dump(2) + "\n";
}

}  // namespace cdmtt::harness

#include "cdmtt/harness/scenario_io.hpp"

#include "cdmtt/harness/config.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

namespace cdmtt::harness {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

[[noreturn]] void fail(int line, const std::string& what) {
    throw ConfigError("line " + std::to_string(line), what);
}

/// Non-comment lines with their 1-based line numbers.
class LineReader {
public:
    explicit LineReader(std::istream& is) : is_(is) {}

    bool next(std::istringstream& fields) {
        std::string text;
        while (std::getline(is_, text)) {
            ++line_;
            const auto first = text.find_first_not_of(" \t\r");
            if (first == std::string::npos || text[first] == '#') continue;
            fields.clear();
            fields.str(text);
            return true;
        }
        return false;
    }

    std::string header() {
        std::string text;
        if (!std::getline(is_, text)) fail(1, "empty file");
        ++line_;
        while (!text.empty() && (text.back() == '\r' || text.back() == ' ')) text.pop_back();
        return text;
    }

    [[nodiscard]] int line() const { return line_; }

private:
    std::istream& is_;
    int line_ = 0;
};

Vector read_vector(std::istringstream& fields, int line) {
    std::vector<double> vals;
    std::string tok;
    while (fields >> tok) {
        try {
            std::size_t used = 0;
            vals.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            fail(line, "not a number: '" + tok + "'");
        }
    }
    if (vals.empty()) fail(line, "missing vector entries");
    return Eigen::Map<const Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

template <typename T>
T read_field(std::istringstream& fields, int line, const char* what) {
    T v{};
    if (!(fields >> v)) fail(line, std::string("expected ") + what);
    return v;
}

void write_vector(std::ostream& os, const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) os << ' ' << num(v(i));
}

}  // namespace

void write_scenario(std::ostream& os, const sim::Scenario& scn) {
    os << "# cdmtt-scenario 1\n";
    os << "units " << scn.unit_system << "\n";
    os << "steps " << scn.steps() << "\n";
    for (std::size_t k = 0; k < scn.steps(); ++k) os << "time " << k << ' ' << num(scn.timestamps[k]) << "\n";
    for (const auto& tr : scn.tracks) {
        os << "track " << tr.id << ' ' << tr.birth_step << ' ' << tr.states.size() << ' ' << num(tr.appear_time) << ' '
           << num(tr.death_time) << "\n";
        for (std::size_t s = 0; s < tr.states.size(); ++s) {
            os << "state " << tr.birth_step + static_cast<int>(s) << ' ' << tr.id;
            write_vector(os, tr.states[s]);
            os << "\n";
        }
    }
}

sim::Scenario read_scenario(std::istream& is) {
    LineReader reader(is);
    if (reader.header() != "# cdmtt-scenario 1") fail(1, "expected header '# cdmtt-scenario 1'");
    sim::Scenario scn;
    std::map<int, std::size_t> track_index;
    std::size_t steps = 0;
    bool have_steps = false;
    std::istringstream fields;
    while (reader.next(fields)) {
        const int line = reader.line();
        const auto tag = read_field<std::string>(fields, line, "a record tag");
        if (tag == "units") {
            scn.unit_system = read_field<std::string>(fields, line, "a unit label");
        } else if (tag == "steps") {
            steps = read_field<std::size_t>(fields, line, "a step count");
            scn.timestamps.assign(steps, 0.0);
            have_steps = true;
        } else if (tag == "time") {
            const auto k = read_field<std::size_t>(fields, line, "a step index");
            if (!have_steps || k >= steps) fail(line, "time step outside the declared range");
            scn.timestamps[k] = read_field<double>(fields, line, "a time");
        } else if (tag == "track") {
            sim::Track tr;
            tr.id = read_field<int>(fields, line, "a track id");
            tr.birth_step = read_field<int>(fields, line, "a birth step");
            const auto n = read_field<std::size_t>(fields, line, "a state count");
            tr.appear_time = read_field<double>(fields, line, "an appearance time");
            tr.death_time = read_field<double>(fields, line, "a death time");
            if (track_index.count(tr.id)) fail(line, "duplicate track id");
            if (tr.birth_step < 0 || tr.birth_step + n > steps) fail(line, "track outside the step range");
            tr.states.resize(n);
            track_index[tr.id] = scn.tracks.size();
            scn.tracks.push_back(std::move(tr));
        } else if (tag == "state") {
            const int k = read_field<int>(fields, line, "a step index");
            const int id = read_field<int>(fields, line, "a track id");
            const auto it = track_index.find(id);
            if (it == track_index.end()) fail(line, "state for an undeclared track");
            auto& tr = scn.tracks[it->second];
            if (!tr.alive_at(k)) fail(line, "state outside the track's alive steps");
            tr.states[k - tr.birth_step] = read_vector(fields, line);
        } else {
            fail(line, "unknown record '" + tag + "'");
        }
    }
    if (!have_steps) fail(reader.line(), "missing 'steps' record");
    for (std::size_t k = 1; k < steps; ++k)
        if (!(scn.timestamps[k] > scn.timestamps[k - 1])) fail(reader.line(), "times must be strictly increasing");
    for (const auto& tr : scn.tracks)
        for (const auto& x : tr.states)
            if (x.size() == 0) fail(reader.line(), "track " + std::to_string(tr.id) + " has missing states");
    return scn;
}

void write_measurements(std::ostream& os, const sim::MeasurementLog& log) {
    os << "# cdmtt-measurements 1\n";
    os << "steps " << log.size() << "\n";
    for (std::size_t k = 0; k < log.size(); ++k)
        for (std::size_t j = 0; j < log[k].size(); ++j) {
            os << "meas " << k << ' ' << j;
            write_vector(os, log[k][j]);
            os << "\n";
        }
}

sim::MeasurementLog read_measurements(std::istream& is) {
    LineReader reader(is);
    if (reader.header() != "# cdmtt-measurements 1") fail(1, "expected header '# cdmtt-measurements 1'");
    sim::MeasurementLog log;
    bool have_steps = false;
    std::istringstream fields;
    while (reader.next(fields)) {
        const int line = reader.line();
        const auto tag = read_field<std::string>(fields, line, "a record tag");
        if (tag == "steps") {
            log.assign(read_field<std::size_t>(fields, line, "a step count"), {});
            have_steps = true;
        } else if (tag == "meas") {
            const auto k = read_field<std::size_t>(fields, line, "a step index");
            const auto j = read_field<std::size_t>(fields, line, "a measurement index");
            if (!have_steps || k >= log.size()) fail(line, "measurement step outside the declared range");
            if (j != log[k].size()) fail(line, "measurement indices must be consecutive from 0");
            log[k].push_back(read_vector(fields, line));
        } else {
            fail(line, "unknown record '" + tag + "'");
        }
    }
    if (!have_steps) fail(reader.line(), "missing 'steps' record");
    return log;
}

void save_scenario(const std::filesystem::path& path, const sim::Scenario& scn) {
    std::ofstream os(path);
    if (!os) throw InvalidInput("cannot write " + path.string());
    write_scenario(os, scn);
}

sim::Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError(path.string(), "cannot open scenario file");
    return read_scenario(is);
}

void save_measurements(const std::filesystem::path& path, const sim::MeasurementLog& log) {
    std::ofstream os(path);
    if (!os) throw InvalidInput("cannot write " + path.string());
    write_measurements(os, log);
}

sim::MeasurementLog load_measurements(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError(path.string(), "cannot open measurement file");
    return read_measurements(is);
}

}  // namespace cdmtt::harness

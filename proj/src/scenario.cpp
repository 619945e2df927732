#include "ramanhom/scenario.hpp"

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace ramanhom {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

struct Entry {
    std::string value;
    std::size_t line;
};

struct ParsedFile {
    std::string path;
    std::map<std::string, std::vector<std::pair<std::string, Entry>>> sections;

    [[noreturn]] void fail(std::size_t line, const std::string& msg) const {
        throw config_error(path + ":" + std::to_string(line) + ": " + msg);
    }
};

ParsedFile read_key_values(std::istream& is, const std::string& path) {
    ParsedFile file;
    file.path = path;
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        if (body.front() == '[') {
            if (body.back() != ']') file.fail(line_no, "unterminated section header");
            section = trim(body.substr(1, body.size() - 2));
            if (section.empty()) file.fail(line_no, "empty section name");
            file.sections.try_emplace(section);
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) file.fail(line_no, "expected 'key = value'");
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (key.empty()) file.fail(line_no, "empty key");
        if (value.empty()) file.fail(line_no, "empty value for key '" + key + "'");
        if (section.empty()) file.fail(line_no, "key '" + key + "' outside any section");
        file.sections[section].emplace_back(key, Entry{value, line_no});
    }
    return file;
}

class Reader {
  public:
    Reader(const ParsedFile& file) : file_(file) {}

    // Applies fn to the value when the key is present; rethrows parse errors
    // with the file/line anchor.
    void get(const std::string& section, const std::string& key,
             const std::function<void(const std::string&)>& fn) {
        auto sec = file_.sections.find(section);
        if (sec == file_.sections.end()) return;
        const Entry* found = nullptr;
        for (const auto& [k, entry] : sec->second) {
            if (k != key) continue;
            if (found) file_.fail(entry.line, "duplicate key '" + key + "'");
            found = &entry;
        }
        if (!found) return;
        seen_.insert(section + "." + key);
        try {
            fn(found->value);
        } catch (const config_error& e) {
            file_.fail(found->line, std::string(e.what()));
        }
    }

    void check_unknown() const {
        for (const auto& [section, entries] : file_.sections) {
            for (const auto& [key, entry] : entries) {
                if (section == "sweep" && key == "point") continue;
                if (!seen_.count(section + "." + key))
                    file_.fail(entry.line, "unknown key '" + key + "' in section [" + section + "]");
            }
        }
    }

  private:
    const ParsedFile& file_;
    std::set<std::string> seen_;
};

SweepPoint parse_sweep_point(const std::string& value) {
    // Whitespace-separated "t_pulse <unit> beta t_rep <unit> target".
    std::istringstream ss(value);
    std::vector<std::string> tokens;
    std::string tok;
    while (ss >> tok) tokens.push_back(tok);
    auto is_number_start = [](const std::string& t) {
        return !t.empty() && (std::isdigit(static_cast<unsigned char>(t[0])) || t[0] == '-' ||
                              t[0] == '+' || t[0] == '.');
    };
    std::vector<std::string> fields;
    for (std::size_t i = 0; i < tokens.size();) {
        std::string field = tokens[i++];
        if (i < tokens.size() && !is_number_start(tokens[i])) field += " " + tokens[i++];
        fields.push_back(field);
    }
    if (fields.size() != 4)
        throw config_error("sweep point needs 't_pulse beta t_rep target', got '" + value + "'");
    SweepPoint p;
    p.t_pulse = parse_time(fields[0]);
    p.beta = parse_number(fields[1]);
    p.t_rep = parse_time(fields[2]);
    p.target_p854 = parse_number(fields[3]);
    return p;
}

}  // namespace

PulseTrain Scenario::make_train() const {
    PulseTrain train;
    train.shape = PulseShape::from_fwhm(t_pulse, beta, peak_rabi, pulse_center);
    train.n_pulses = n_pulses;
    train.t_rep = t_rep;
    train.truncation_threshold = truncation;
    train.validate();
    return train;
}

PulseTrain Scenario::make_train(const SweepPoint& point) const {
    PulseTrain train;
    train.shape = PulseShape::from_fwhm(point.t_pulse, point.beta, peak_rabi, pulse_center);
    train.n_pulses = n_pulses;
    train.t_rep = point.t_rep;
    train.truncation_threshold = truncation;
    train.validate();
    return train;
}

DetectionModel Scenario::make_detection_model(double b0) const {
    DetectionModel det;
    det.eta_c = eta_c;
    det.eta_d = eta_d;
    det.b0 = b0;
    det.delta_phi = delta_phi;
    det.validate();
    return det;
}

Scenario parse_scenario(std::istream& is, const std::string& path) {
    const ParsedFile file = read_key_values(is, path);
    Reader reader(file);
    Scenario sc;
    sc.source_path = path;

    reader.get("levels", "gamma_back", [&](const std::string& v) { sc.scheme.gamma_back = parse_rate(v); });
    reader.get("levels", "gamma_854", [&](const std::string& v) { sc.scheme.gamma_854 = parse_rate(v); });
    reader.get("levels", "gamma_850", [&](const std::string& v) { sc.scheme.gamma_850 = parse_rate(v); });
    reader.get("levels", "detuning",
               [&](const std::string& v) { sc.scheme.detuning = parse_angular_frequency(v); });

    reader.get("pulse", "t_pulse", [&](const std::string& v) { sc.t_pulse = parse_time(v); });
    reader.get("pulse", "beta", [&](const std::string& v) { sc.beta = parse_number(v); });
    reader.get("pulse", "center", [&](const std::string& v) { sc.pulse_center = parse_time(v); });
    reader.get("pulse", "peak_rabi",
               [&](const std::string& v) { sc.peak_rabi = parse_angular_frequency(v); });
    reader.get("pulse", "truncation", [&](const std::string& v) { sc.truncation = parse_number(v); });

    reader.get("train", "n_pulses", [&](const std::string& v) {
        const double n = parse_number(v);
        if (n < 1 || n != std::floor(n)) throw config_error("n_pulses must be a positive integer");
        sc.n_pulses = static_cast<std::size_t>(n);
    });
    reader.get("train", "t_rep", [&](const std::string& v) { sc.t_rep = parse_time(v); });

    reader.get("noise", "dephasing",
               [&](const std::string& v) { sc.dephasing = parse_angular_frequency(v); });

    reader.get("grid", "dt", [&](const std::string& v) { sc.dt = parse_time(v); });
    reader.get("grid", "rtol", [&](const std::string& v) { sc.rtol = parse_number(v); });
    reader.get("grid", "hom_windows", [&](const std::string& v) {
        const double n = parse_number(v);
        if (n < 1 || n != std::floor(n)) throw config_error("hom_windows must be a positive integer");
        sc.hom_windows = static_cast<std::size_t>(n);
    });

    reader.get("calibrate", "target_p854",
               [&](const std::string& v) { sc.target_p854 = parse_number(v); });
    reader.get("calibrate", "tolerance",
               [&](const std::string& v) { sc.calibrate_tolerance = parse_number(v); });
    reader.get("calibrate", "omega_max",
               [&](const std::string& v) { sc.omega_max = parse_angular_frequency(v); });

    reader.get("optics", "transmission",
               [&](const std::string& v) { sc.beam_splitter.transmission = parse_number(v); });
    reader.get("optics", "eta_c", [&](const std::string& v) { sc.eta_c = parse_number(v); });
    reader.get("optics", "eta_d", [&](const std::string& v) { sc.eta_d = parse_number(v); });
    reader.get("optics", "sbr", [&](const std::string& v) { sc.sbr = parse_number(v); });
    reader.get("optics", "delta_phi", [&](const std::string& v) { sc.delta_phi = parse_angle(v); });

    reader.get("detection", "eta_393",
               [&](const std::string& v) { sc.efficiencies.eta_393 = parse_number(v); });
    reader.get("detection", "eta_854",
               [&](const std::string& v) { sc.efficiencies.eta_854 = parse_number(v); });
    reader.get("detection", "bg_393",
               [&](const std::string& v) { sc.efficiencies.bg_rate_393 = parse_rate(v); });
    reader.get("detection", "bg_854",
               [&](const std::string& v) { sc.efficiencies.bg_rate_854 = parse_rate(v); });

    reader.get("run", "seed", [&](const std::string& v) {
        const double s = parse_number(v);
        if (s < 0 || s != std::floor(s)) throw config_error("seed must be a nonnegative integer");
        sc.seed = static_cast<std::uint64_t>(s);
    });
    reader.get("run", "trajectories", [&](const std::string& v) {
        const double n = parse_number(v);
        if (n < 1 || n != std::floor(n)) throw config_error("trajectories must be a positive integer");
        sc.trajectories = static_cast<std::uint64_t>(n);
    });

    reader.get("inputs", "pulse_histogram",
               [&](const std::string& v) { sc.pulse_histogram = v; });

    reader.check_unknown();

    auto sweep_section = file.sections.find("sweep");
    if (sweep_section != file.sections.end()) {
        for (const auto& [key, entry] : sweep_section->second) {
            if (key != "point") file.fail(entry.line, "only 'point' entries allowed in [sweep]");
            try {
                sc.sweep.push_back(parse_sweep_point(entry.value));
            } catch (const config_error& e) {
                file.fail(entry.line, e.what());
            }
        }
    }

    // Cross-field checks mirror the module invariants so errors carry the
    // scenario path instead of surfacing mid-run.
    try {
        sc.scheme.validate();
        sc.efficiencies.validate();
        sc.beam_splitter.validate();
        if (sc.peak_rabi > 0.0) sc.make_train();
        for (const auto& p : sc.sweep) sc.make_train(p);
    } catch (const std::exception& e) {
        throw config_error(path + ": " + e.what());
    }
    if (!sc.pulse_histogram.empty()) {
        namespace fs = std::filesystem;
        fs::path p(sc.pulse_histogram);
        if (p.is_relative()) p = fs::path(path).parent_path() / p;
        if (!fs::exists(p))
            throw config_error(path + ": pulse_histogram file not found: " + p.string());
        sc.pulse_histogram = p.string();
    }
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw config_error("cannot open scenario file: " + path);
    return parse_scenario(is, path);
}

}  // namespace ramanhom

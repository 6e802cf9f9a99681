#include "chsav/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace chsav {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
    }
}

long to_long(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long d = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream in(v);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// Shortest %g form that reads back to the same double.
std::string fmt(double v) {
    char buf[64];
    for (int digits = 15; digits <= 17; ++digits) {
        std::snprintf(buf, sizeof buf, "%.*g", digits, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

template <class T, class F>
std::string join(const std::vector<T>& v, F f) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += f(v[i]);
    }
    return out;
}

}  // namespace

double parse_xi(const std::string& text) {
    const std::string t = trim(text);
    if (t == "inf" || t == "Inf" || t == "infinity") return kInfiniteXi;
    const double xi = to_double("xi", t);
    if (!(xi >= 0.0)) throw ConfigError("xi must be >= 0 or 'inf'");
    return xi;
}

std::string format_xi(double xi) { return std::isinf(xi) ? "inf" : fmt(xi); }

Config default_config(const std::string& scenario) {
    Config c;
    c.scenario = scenario;
    if (scenario == "separation" || scenario == "custom") {
        const auto s = scenario_separation();
        c.params = s.defaults;
        c.shift_bulk = s.shift_bulk;
        c.shift_bnd = s.shift_bnd;
        c.mesh_level = 7;
        if (scenario == "custom") c.initial = "zero";
    } else if (scenario == "adsorption") {
        const auto s = scenario_adsorption();
        c.params = s.defaults;
        c.shift_bulk = s.shift_bulk;
        c.shift_bnd = s.shift_bnd;
        c.mesh_level = 8;
        c.eoc_axis = EocAxis::xi;
        c.eoc_level = 5;
        c.params.tau = 5e-5;
        c.params.t_end = 0.1;
    } else {
        throw ConfigError("unknown scenario '" + scenario + "' (separation | adsorption | custom)");
    }
    return c;
}

Config parse_config(const std::string& text) {
    std::map<std::string, std::string> entries;
    std::vector<std::string> order;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": bad section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = (section.empty() ? "" : section + ".") + trim(line.substr(0, eq));
        if (entries.count(key)) throw ConfigError("duplicate config key '" + key + "'");
        entries[key] = trim(line.substr(eq + 1));
        order.push_back(key);
    }

    Config c = default_config(entries.count("scenario.name") ? entries["scenario.name"] : "separation");
    for (const auto& key : order) {
        const std::string& v = entries[key];
        if (key == "scenario.name") continue;
        else if (key == "scenario.initial") c.initial = v;
        else if (key == "params.m") c.params.m = to_double(key, v);
        else if (key == "params.m_gamma") c.params.m_gamma = to_double(key, v);
        else if (key == "params.epsilon") c.params.epsilon = to_double(key, v);
        else if (key == "params.sigma") c.params.sigma = to_double(key, v);
        else if (key == "params.delta") c.params.delta = to_double(key, v);
        else if (key == "params.beta") c.params.beta = to_double(key, v);
        else if (key == "params.xi") c.params.xi = parse_xi(v);
        else if (key == "params.tau") c.params.tau = to_double(key, v);
        else if (key == "params.t_end") c.params.t_end = to_double(key, v);
        else if (key == "potential.shift_bulk") c.shift_bulk = to_double(key, v);
        else if (key == "potential.shift_bnd") c.shift_bnd = to_double(key, v);
        else if (key == "mesh.level") c.mesh_level = static_cast<int>(to_long(key, v));
        else if (key == "mesh.path") c.mesh_path = v;
        else if (key == "output.dir") c.output_dir = v;
        else if (key == "output.every") c.every = to_long(key, v);
        else if (key == "output.snapshot_every") c.snapshot_every = to_long(key, v);
        else if (key == "output.svg") c.svg = to_bool(key, v);
        else if (key == "solver.kind") {
            try {
                c.solver = parse_solver_kind(v);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        } else if (key == "eoc.axis") {
            try {
                c.eoc_axis = parse_axis(v);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        } else if (key == "eoc.levels") {
            c.eoc_levels.clear();
            for (const auto& s : split_list(v)) c.eoc_levels.push_back(static_cast<int>(to_long(key, s)));
        } else if (key == "eoc.reference_level") c.eoc_reference_level = static_cast<int>(to_long(key, v));
        else if (key == "eoc.level") c.eoc_level = static_cast<int>(to_long(key, v));
        else if (key == "eoc.taus") {
            c.eoc_taus.clear();
            for (const auto& s : split_list(v)) c.eoc_taus.push_back(to_double(key, s));
        } else if (key == "eoc.reference_tau") c.eoc_reference_tau = to_double(key, v);
        else if (key == "eoc.xis") {
            c.eoc_xis.clear();
            for (const auto& s : split_list(v)) c.eoc_xis.push_back(to_double(key, s));
        } else if (key == "eoc.sample_step") c.eoc_sample_step = to_double(key, v);
        else throw ConfigError("unknown config key '" + key + "'");
    }
    return c;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream buffer;
    buffer << file.rdbuf();
    Config c = parse_config(buffer.str());
    // Relative mesh paths are resolved against the config file's directory.
    if (!c.mesh_path.empty() && std::filesystem::path(c.mesh_path).is_relative()) {
        c.mesh_path = (path.parent_path() / c.mesh_path).string();
    }
    return c;
}

std::string serialize_config(const Config& c) {
    std::ostringstream out;
    out << "[scenario]\nname = " << c.scenario << '\n';
    if (!c.initial.empty()) out << "initial = " << c.initial << '\n';
    out << "\n[params]\n"
        << "m = " << fmt(c.params.m) << '\n'
        << "m_gamma = " << fmt(c.params.m_gamma) << '\n'
        << "epsilon = " << fmt(c.params.epsilon) << '\n'
        << "sigma = " << fmt(c.params.sigma) << '\n'
        << "delta = " << fmt(c.params.delta) << '\n'
        << "beta = " << fmt(c.params.beta) << '\n'
        << "xi = " << format_xi(c.params.xi) << '\n'
        << "tau = " << fmt(c.params.tau) << '\n'
        << "t_end = " << fmt(c.params.t_end) << '\n'
        << "\n[potential]\n"
        << "shift_bulk = " << fmt(c.shift_bulk) << '\n'
        << "shift_bnd = " << fmt(c.shift_bnd) << '\n'
        << "\n[mesh]\n"
        << "level = " << c.mesh_level << '\n';
    if (!c.mesh_path.empty()) out << "path = " << c.mesh_path << '\n';
    out << "\n[output]\n"
        << "dir = " << c.output_dir << '\n'
        << "every = " << c.every << '\n'
        << "snapshot_every = " << c.snapshot_every << '\n'
        << "svg = " << (c.svg ? "true" : "false") << '\n'
        << "\n[solver]\nkind = " << to_string(c.solver) << '\n'
        << "\n[eoc]\n"
        << "axis = " << to_string(c.eoc_axis) << '\n'
        << "levels = " << join(c.eoc_levels, [](int l) { return std::to_string(l); }) << '\n'
        << "reference_level = " << c.eoc_reference_level << '\n'
        << "level = " << c.eoc_level << '\n'
        << "taus = " << join(c.eoc_taus, fmt) << '\n'
        << "reference_tau = " << fmt(c.eoc_reference_tau) << '\n'
        << "xis = " << join(c.eoc_xis, fmt) << '\n'
        << "sample_step = " << fmt(c.eoc_sample_step) << '\n';
    return out.str();
}

Scenario Config::make_scenario() const {
    Scenario s;
    if (scenario == "separation") s = scenario_separation();
    else if (scenario == "adsorption") s = scenario_adsorption(params.epsilon);
    else {
        s.name = "custom";
        s.phi0 = parse_initial_condition(initial.empty() ? "zero" : initial, params.epsilon);
    }
    if (!initial.empty() && scenario != "custom") s.phi0 = parse_initial_condition(initial, params.epsilon);
    s.shift_bulk = shift_bulk;
    s.shift_bnd = shift_bnd;
    s.defaults = params;
    return s;
}

void Config::validate() const {
    try {
        params.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (!(shift_bulk > 0.0) || !(shift_bnd > 0.0)) throw ConfigError("potential shifts must be positive");
    if (mesh_path.empty() && (mesh_level < 1 || mesh_level > 12)) throw ConfigError("mesh.level must be in [1, 12]");
    if (!mesh_path.empty() && !std::filesystem::exists(mesh_path)) {
        throw ConfigError("mesh file '" + mesh_path + "' does not exist");
    }
    if (every < 1) throw ConfigError("output.every must be >= 1");
    if (snapshot_every < 0) throw ConfigError("output.snapshot_every must be >= 0");
    if (!(eoc_sample_step > 0.0)) throw ConfigError("eoc.sample_step must be positive");
    try {
        (void)make_scenario();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

}  // namespace chsav

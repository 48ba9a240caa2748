#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace crossdiff::cli {

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s = {
        {"model", {"name", "d0", "d1", "d2", "n"}},
        {"grid", {"nodes", "length"}},
        {"solver",
         {"scheme", "tau", "tau_levels", "horizon", "epsilon", "delta0", "newton_max_iter",
          "newton_abs_tol", "newton_damping", "newton_max_halvings"}},
        {"noise", {"levels", "eta", "amplitude"}},
        {"monte_carlo", {"paths", "master_seed"}},
        {"initial", {"profile", "csv_path"}},
        {"output", {"directory", "snapshots", "trajectory_paths", "formats"}},
        {"assumptions", {"samples", "seed"}},
        {"study", {"type", "levels", "tau_levels", "paths", "nodes_list", "reference_nodes"}},
        {"sweep", {"parameter", "values"}},
    };
    return s;
}

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& message) {
    std::ostringstream os;
    os << origin << ":" << line << ": " << message;
    throw ConfigError(os.str());
}

[[noreturn]] void fail_key(const std::string& section, const std::string& key,
                           const std::string& message, int line = 0) {
    std::ostringstream os;
    os << "[" << section << "] " << key << ": " << message;
    if (line > 0) os << " (line " << line << ")";
    throw ConfigError(os.str());
}

double parse_number(const std::string& section, const std::string& key, const ConfigValue& v) {
    const char* begin = v.text.c_str();
    char* end = nullptr;
    const double x = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || !std::isfinite(x))
        fail_key(section, key, "expected a finite number, got '" + v.text + "'", v.line);
    return x;
}

long parse_integer(const std::string& section, const std::string& key, const ConfigValue& v) {
    const double x = parse_number(section, key, v);
    const long i = static_cast<long>(std::llround(x));
    if (static_cast<double>(i) != x)
        fail_key(section, key, "expected an integer, got '" + v.text + "'", v.line);
    return i;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(text);
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

ConfigTable ConfigTable::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_string(buffer.str(), path);
}

ConfigTable ConfigTable::parse_string(const std::string& text, const std::string& origin) {
    ConfigTable table;
    table.origin_ = origin;

    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (line_no == 1 && raw.size() >= 3 && raw.compare(0, 3, "\xEF\xBB\xBF") == 0)
            raw.erase(0, 3);
        // Inline comments: a '#' or ';' preceded by whitespace (or at the
        // start) opens a comment; this keeps '#' usable inside values.
        for (size_t p = 0; p < raw.size(); ++p) {
            if ((raw[p] == '#' || raw[p] == ';') &&
                (p == 0 || std::isspace(static_cast<unsigned char>(raw[p - 1])))) {
                raw.erase(p);
                break;
            }
        }
        const std::string line = trim(raw);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') fail(origin, line_no, "unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!schema().count(section))
                fail(origin, line_no, "unknown section [" + section + "]");
            table.sections_[section];  // present even if empty
            continue;
        }

        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            fail(origin, line_no, "expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) fail(origin, line_no, "empty key");
        if (section.empty()) fail(origin, line_no, "key '" + key + "' appears before any section");
        if (!schema().at(section).count(key))
            fail(origin, line_no, "unknown key '" + key + "' in [" + section + "]");
        auto& sec = table.sections_[section];
        if (sec.count(key))
            fail(origin, line_no, "duplicate key '" + key + "' in [" + section + "]");
        sec[key] = ConfigValue{value, line_no};
    }
    return table;
}

bool ConfigTable::has(const std::string& section, const std::string& key) const {
    auto it = sections_.find(section);
    return it != sections_.end() && it->second.count(key) > 0;
}

bool ConfigTable::has_section(const std::string& section) const {
    return sections_.count(section) > 0;
}

const ConfigValue& ConfigTable::at(const std::string& section, const std::string& key) const {
    auto it = sections_.find(section);
    if (it == sections_.end() || !it->second.count(key))
        fail_key(section, key, "required key is missing");
    return it->second.at(key);
}

std::string ConfigTable::get_string(const std::string& section, const std::string& key,
                                    const std::string& fallback) const {
    return has(section, key) ? at(section, key).text : fallback;
}

double ConfigTable::get_number(const std::string& section, const std::string& key,
                               double fallback) const {
    if (!has(section, key)) return fallback;
    return parse_number(section, key, at(section, key));
}

double ConfigTable::require_number(const std::string& section, const std::string& key) const {
    return parse_number(section, key, at(section, key));
}

long ConfigTable::get_integer(const std::string& section, const std::string& key,
                              long fallback) const {
    if (!has(section, key)) return fallback;
    return parse_integer(section, key, at(section, key));
}

uint64_t ConfigTable::get_seed(const std::string& section, const std::string& key,
                               uint64_t fallback) const {
    if (!has(section, key)) return fallback;
    const ConfigValue& v = at(section, key);
    const char* begin = v.text.c_str();
    char* end = nullptr;
    const unsigned long long x = std::strtoull(begin, &end, 10);
    if (end == begin || *end != '\0' || v.text.front() == '-')
        fail_key(section, key, "expected a nonnegative integer seed, got '" + v.text + "'",
                 v.line);
    return static_cast<uint64_t>(x);
}

std::vector<double> ConfigTable::get_number_list(const std::string& section,
                                                 const std::string& key) const {
    const ConfigValue& v = at(section, key);
    std::vector<double> out;
    for (const std::string& item : split_list(v.text))
        out.push_back(parse_number(section, key, ConfigValue{item, v.line}));
    if (out.empty()) fail_key(section, key, "empty list", v.line);
    return out;
}

std::vector<long> ConfigTable::get_integer_list(const std::string& section,
                                                const std::string& key) const {
    const ConfigValue& v = at(section, key);
    std::vector<long> out;
    for (const std::string& item : split_list(v.text))
        out.push_back(parse_integer(section, key, ConfigValue{item, v.line}));
    if (out.empty()) fail_key(section, key, "empty list", v.line);
    return out;
}

std::vector<std::string> ConfigTable::get_string_list(const std::string& section,
                                                      const std::string& key) const {
    const ConfigValue& v = at(section, key);
    std::vector<std::string> out = split_list(v.text);
    if (out.empty()) fail_key(section, key, "empty list", v.line);
    return out;
}

void ConfigTable::override_value(const std::string& section, const std::string& key,
                                 const std::string& text) {
    auto sec = schema().find(section);
    if (sec == schema().end() || !sec->second.count(key))
        throw ConfigError("cannot override unknown key " + section + "." + key);
    sections_[section][key] = ConfigValue{text, 0};
}

std::string ConfigTable::canonical() const {
    std::ostringstream os;
    for (const auto& [section, entries] : sections_) {
        if (section == "output") continue;
        for (const auto& [key, value] : entries)
            os << section << '.' << key << '=' << value.text << '\n';
    }
    return os.str();
}

uint64_t fnv1a64(std::string_view text) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<size_t>(i)] = digits[value & 0xf];
        value >>= 4;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Typed assembly
// ---------------------------------------------------------------------------

ModelSpec load_model(const ConfigTable& table) {
    const std::string name = table.get_string("model", "name", "");
    if (name.empty()) fail_key("model", "name", "required key is missing");

    // Per-model parameter whitelist: a parameter the chosen model ignores
    // is treated as an error rather than silently dropped.
    static const std::map<std::string, std::set<std::string>> params = {
        {"maxwell-stefan-3", {"d0", "d1", "d2"}},
        {"biofilm-n", {"n"}},
        {"negated-a-n", {"n"}},
    };
    auto it = params.find(name);
    if (it == params.end())
        fail_key("model", "name",
                 "unknown model '" + name +
                     "' (available: maxwell-stefan-3, biofilm-n, negated-a-n)",
                 table.at("model", "name").line);
    for (const char* key : {"d0", "d1", "d2", "n"})
        if (table.has("model", key) && !it->second.count(key))
            fail_key("model", key, "not a parameter of model '" + name + "'",
                     table.at("model", key).line);

    ModelSpec model = make_builtin(name, [&table](const std::string& key) {
        return table.has("model", key) ? table.require_number("model", key)
                                       : std::nan("");
    });

    // The multiplicative noise is part of the model; the amplitude rescales
    // it (0 switches it off). Whether a simulation actually integrates
    // noise is decided separately by the presence of the [noise] section.
    const double amplitude = table.get_number("noise", "amplitude", 1.0);
    if (amplitude < 0.0) fail_key("noise", "amplitude", "must be >= 0");
    if (amplitude != 1.0) model = scale_noise(model, amplitude);
    return model;
}

namespace {

int resolve_noise_levels(const ConfigTable& table, double horizon) {
    const bool has_levels = table.has("noise", "levels");
    const bool has_eta = table.has("noise", "eta");
    if (has_levels && has_eta)
        fail_key("noise", "eta", "give either levels or eta, not both",
                 table.at("noise", "eta").line);
    if (has_levels) {
        const long levels = table.get_integer("noise", "levels", 0);
        if (levels < 0 || levels > 40)
            fail_key("noise", "levels", "must lie in [0, 40]", table.at("noise", "levels").line);
        return static_cast<int>(levels);
    }
    if (has_eta) {
        const double eta = table.require_number("noise", "eta");
        if (!(eta > 0.0) || eta > horizon)
            fail_key("noise", "eta", "must lie in (0, horizon]", table.at("noise", "eta").line);
        for (int k = 0; k <= 40; ++k) {
            const double candidate = horizon / static_cast<double>(int64_t{1} << k);
            if (std::abs(candidate - eta) <= 1e-12 * horizon) return k;
        }
        fail_key("noise", "eta", "must equal horizon / 2^k for some integer k in [0, 40]",
                 table.at("noise", "eta").line);
    }
    fail_key("noise", "levels", "noise needs levels or eta when amplitude > 0");
}

double resolve_tau(const ConfigTable& table, double horizon) {
    const bool has_tau = table.has("solver", "tau");
    const bool has_levels = table.has("solver", "tau_levels");
    if (has_tau && has_levels)
        fail_key("solver", "tau_levels", "give either tau or tau_levels, not both",
                 table.at("solver", "tau_levels").line);
    if (has_levels) {
        const long levels = table.get_integer("solver", "tau_levels", 0);
        if (levels < 0 || levels > 40)
            fail_key("solver", "tau_levels", "must lie in [0, 40]",
                     table.at("solver", "tau_levels").line);
        return horizon / static_cast<double>(int64_t{1} << levels);
    }
    if (!has_tau) fail_key("solver", "tau", "required key is missing (or give tau_levels)");
    const double tau = table.require_number("solver", "tau");
    if (!(tau > 0.0) || tau > horizon)
        fail_key("solver", "tau", "must lie in (0, horizon]", table.at("solver", "tau").line);
    return tau;
}

}  // namespace

SimulationSetup load_simulation(const ConfigTable& base, const CommonOverrides& overrides) {
    ConfigTable table = base;
    if (overrides.seed)
        table.override_value("monte_carlo", "master_seed", std::to_string(*overrides.seed));
    if (overrides.out) table.override_value("output", "directory", *overrides.out);

    SimulationSetup setup;
    setup.config_hash = hex64(fnv1a64(table.canonical()));
    setup.model = load_model(table);

    const long nodes = table.get_integer("grid", "nodes", 0);
    if (nodes < 2) fail_key("grid", "nodes", "required, must be >= 2");
    const double length = table.get_number("grid", "length", 1.0);
    if (!(length > 0.0)) fail_key("grid", "length", "must be > 0");
    setup.grid = Grid1D{static_cast<int>(nodes), length};

    SolverConfig& solver = setup.solver;
    const double horizon = table.get_number("solver", "horizon", 0.0);
    if (!(horizon > 0.0)) fail_key("solver", "horizon", "required, must be > 0");
    solver.horizon = horizon;
    solver.tau = resolve_tau(table, horizon);
    solver.scheme = [&table] {
        const std::string name = table.get_string("solver", "scheme", "entropy_implicit");
        try {
            return scheme_from_name(name);
        } catch (const std::invalid_argument& e) {
            fail_key("solver", "scheme", e.what(), table.at("solver", "scheme").line);
        }
    }();
    if (table.has("solver", "epsilon")) {
        const double eps = table.require_number("solver", "epsilon");
        if (eps < 0.0) fail_key("solver", "epsilon", "must be >= 0");
        solver.epsilon = eps;
    }
    solver.delta0 = table.get_number("solver", "delta0", 1e-8);
    if (solver.delta0 < 0.0) fail_key("solver", "delta0", "must be >= 0");
    solver.newton.max_iter = static_cast<int>(table.get_integer("solver", "newton_max_iter", 50));
    solver.newton.abs_tol = table.get_number("solver", "newton_abs_tol", 1e-10);
    solver.newton.damping = table.get_number("solver", "newton_damping", 1.0);
    solver.newton.max_tau_halvings =
        static_cast<int>(table.get_integer("solver", "newton_max_halvings", 8));
    if (solver.newton.max_iter < 1) fail_key("solver", "newton_max_iter", "must be >= 1");
    if (!(solver.newton.abs_tol > 0.0)) fail_key("solver", "newton_abs_tol", "must be > 0");
    if (!(solver.newton.damping > 0.0) || solver.newton.damping > 1.0)
        fail_key("solver", "newton_damping", "must lie in (0, 1]");
    if (solver.newton.max_tau_halvings < 0)
        fail_key("solver", "newton_max_halvings", "must be >= 0");

    setup.noise_amplitude = table.get_number("noise", "amplitude", 1.0);
    setup.noise_enabled = table.has_section("noise") && setup.noise_amplitude > 0.0;
    if (setup.noise_enabled) setup.noise_levels = resolve_noise_levels(table, horizon);

    // Initial data.
    const std::string profile_name = table.get_string("initial", "profile", "barycenter");
    if (profile_name == "csv") {
        const std::string path = table.get_string("initial", "csv_path", "");
        if (path.empty()) fail_key("initial", "csv_path", "required for profile = csv");
        std::ifstream in(path);
        if (!in) fail_key("initial", "csv_path", "cannot open '" + path + "'");
        try {
            setup.initial = read_snapshot_csv(in, setup.model.n, setup.grid);
        } catch (const std::exception& e) {
            fail_key("initial", "csv_path", e.what());
        }
    } else {
        try {
            setup.initial = make_profile(profile_from_name(profile_name), setup.model.n,
                                         setup.grid);
        } catch (const std::invalid_argument& e) {
            fail_key("initial", "profile", e.what());
        }
    }

    // Monte Carlo.
    const long paths = table.get_integer("monte_carlo", "paths", 1);
    if (paths < 1) fail_key("monte_carlo", "paths", "must be >= 1");
    setup.paths = static_cast<int>(paths);
    setup.master_seed = table.get_seed("monte_carlo", "master_seed", 0);

    // Output policy.
    setup.out_dir = table.get_string("output", "directory", "out");
    if (table.has("output", "snapshots")) {
        solver.snapshot_times = table.get_number_list("output", "snapshots");
        for (double t : solver.snapshot_times)
            if (t < 0.0 || t > horizon)
                fail_key("output", "snapshots", "times must lie in [0, horizon]");
    }
    const long traj = table.get_integer("output", "trajectory_paths", 1);
    if (traj < 0 || traj > paths)
        fail_key("output", "trajectory_paths", "must lie in [0, paths]");
    setup.trajectory_paths = static_cast<int>(traj);
    if (table.has("output", "formats")) {
        setup.write_csv = setup.write_json = false;
        for (const std::string& f : table.get_string_list("output", "formats")) {
            if (f == "csv")
                setup.write_csv = true;
            else if (f == "json")
                setup.write_json = true;
            else
                fail_key("output", "formats", "unknown format '" + f + "' (csv, json)");
        }
    }
    return setup;
}

}  // namespace crossdiff::cli

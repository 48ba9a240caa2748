#pragma once

/// Strict INI-style configuration for the command-line tool. Sections and
/// keys are validated against a fixed schema: unknown sections, unknown
/// keys, duplicate keys, and malformed values are all reported with their
/// line number and mapped to exit code 2 by the driver.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "crossdiff/grid.hpp"
#include "crossdiff/model.hpp"
#include "crossdiff/solver.hpp"

namespace crossdiff::cli {

/// Configuration problem attributable to the user; exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ConfigValue {
    std::string text;
    int line = 0;
};

/// Parsed key/value table with section scoping and provenance.
class ConfigTable {
public:
    static ConfigTable parse_file(const std::string& path);
    static ConfigTable parse_string(const std::string& text, const std::string& origin);

    bool has(const std::string& section, const std::string& key) const;
    bool has_section(const std::string& section) const;

    /// Raw text of a key; throws ConfigError when absent.
    const ConfigValue& at(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    double get_number(const std::string& section, const std::string& key, double fallback) const;
    double require_number(const std::string& section, const std::string& key) const;
    long get_integer(const std::string& section, const std::string& key, long fallback) const;
    uint64_t get_seed(const std::string& section, const std::string& key,
                      uint64_t fallback) const;
    std::vector<double> get_number_list(const std::string& section, const std::string& key) const;
    std::vector<long> get_integer_list(const std::string& section, const std::string& key) const;
    std::vector<std::string> get_string_list(const std::string& section,
                                             const std::string& key) const;

    /// Replace (or insert) a value, e.g. for command-line overrides and
    /// sweep points. The section/key must be schema-valid.
    void override_value(const std::string& section, const std::string& key,
                        const std::string& text);

    /// Deterministic serialization "section.key=value" (sorted), with the
    /// [output] section left out: artifact placement does not change the
    /// mathematical content a hash testifies to.
    std::string canonical() const;

    const std::string& origin() const { return origin_; }

private:
    std::map<std::string, std::map<std::string, ConfigValue>> sections_;
    std::string origin_;
};

uint64_t fnv1a64(std::string_view text);
std::string hex64(uint64_t value);

// ---------------------------------------------------------------------------
// Typed run setup assembled from a validated table.
// ---------------------------------------------------------------------------

struct CommonOverrides {
    std::optional<uint64_t> seed;
    std::optional<std::string> out;
    int threads = 1;
    bool quiet = false;
};

struct SimulationSetup {
    ModelSpec model;  ///< noise amplitude already applied
    Grid1D grid;
    SolverConfig solver;
    ConcentrationField initial;

    bool noise_enabled = false;
    int noise_levels = 0;  ///< path grid has 2^levels intervals
    double noise_amplitude = 0.0;

    int paths = 1;
    uint64_t master_seed = 0;

    std::string out_dir = "out";
    int trajectory_paths = 1;
    bool write_csv = true;
    bool write_json = true;

    std::string config_hash;
};

/// Build the full simulation setup (model, grid, solver, initial data,
/// noise discretization, output policy) from a parsed table plus
/// command-line overrides. All cross-field validation lives here.
SimulationSetup load_simulation(const ConfigTable& table, const CommonOverrides& overrides);

/// Model + amplitude only (for the assumption checker).
ModelSpec load_model(const ConfigTable& table);

}  // namespace crossdiff::cli

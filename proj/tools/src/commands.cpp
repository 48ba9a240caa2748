#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "crossdiff/assumptions.hpp"
#include "crossdiff/diagnostics.hpp"
#include "crossdiff/noise.hpp"
#include "crossdiff/solver.hpp"

namespace fs = std::filesystem;

namespace crossdiff::cli {

namespace {

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::string zero_pad(int value, int width) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%0*d", width, value);
    return std::string(buf);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

std::string fmt_short(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string(buf);
}

/// Deterministic (noise-free) run packaged in the Monte Carlo report shape
/// so all artifact writers apply unchanged.
RunReport deterministic_report(const SimulationSetup& setup) {
    const TrajectoryResult r =
        run_trajectory(setup.model, setup.grid, setup.solver, setup.initial, nullptr);
    if (!r.ok()) throw std::runtime_error("deterministic run failed: " + r.error);

    RunReport report;
    report.times = r.times;
    report.entropy_mean = r.entropy;
    report.entropy_var.assign(r.times.size(), 0.0);
    report.entropy_stderr.assign(r.times.size(), 0.0);
    report.dissipation_mean = r.dissipation;
    report.mass_mean = r.mass;
    report.violation_max = r.violation;
    report.entropy_initial = r.entropy.empty() ? 0.0 : r.entropy.front();
    for (double v : r.violation) report.max_violation = std::max(report.max_violation, v);
    long iters = 0;
    for (int k : r.newton_iters) {
        iters += k;
        report.max_newton_iters = std::max(report.max_newton_iters, k);
    }
    report.mean_newton_iters =
        r.newton_iters.empty() ? 0.0
                               : static_cast<double>(iters) /
                                     static_cast<double>(r.newton_iters.size());
    for (int h : r.halvings) report.total_halvings += h;
    report.path_count = 1;
    report.master_seed = setup.master_seed;
    report.grid_nodes = setup.grid.nodes;
    report.tau = setup.solver.tau;
    report.eta = 0.0;
    report.scheme = scheme_name(setup.solver.scheme);
    report.model = setup.model.name;
    return report;
}

RunReport execute_simulation(const SimulationSetup& setup, int threads) {
    if (!setup.noise_enabled) return deterministic_report(setup);
    return run_monte_carlo(setup.model, setup.grid, setup.solver, setup.initial, setup.paths,
                           setup.master_seed, setup.noise_levels, threads);
}

void write_trajectory_csv(std::ostream& out, const SimulationSetup& setup,
                          const TrajectoryResult& r, int path_id) {
    out << "# config_hash=" << setup.config_hash << " seed=" << setup.master_seed
        << " path=" << path_id << '\n';
    for (const auto& [t, field] : r.snapshots) write_snapshot_csv(out, setup.grid, field, t);
}

/// Write report/series/trajectory artifacts; returns the file list for the
/// status line.
std::vector<std::string> write_simulation_artifacts(const SimulationSetup& setup,
                                                    const RunReport& report) {
    std::vector<std::string> written;
    fs::create_directories(setup.out_dir);

    if (setup.write_json) {
        const fs::path p = fs::path(setup.out_dir) / "report.json";
        auto out = open_out(p);
        write_report_json(out, report, setup.config_hash);
        written.push_back(p.string());
    }
    if (setup.write_csv) {
        const fs::path p = fs::path(setup.out_dir) / "series.csv";
        auto out = open_out(p);
        write_report_csv(out, report, setup.config_hash);
        written.push_back(p.string());
    }
    for (int p = 0; p < setup.trajectory_paths && setup.write_csv; ++p) {
        TrajectoryResult r;
        if (setup.noise_enabled) {
            const WienerPath path = sample_path(derive_path_seed(setup.master_seed,
                                                                 static_cast<uint64_t>(p)),
                                                setup.solver.horizon, setup.noise_levels,
                                                setup.model.n);
            r = run_trajectory(setup.model, setup.grid, setup.solver, setup.initial, &path);
        } else {
            r = run_trajectory(setup.model, setup.grid, setup.solver, setup.initial, nullptr);
        }
        if (!r.ok()) {
            std::cerr << "warning: trajectory " << p << " failed (" << r.error
                      << "); no snapshot file written\n";
            continue;
        }
        const fs::path file = fs::path(setup.out_dir) / ("trajectory_p" + zero_pad(p, 3) +
                                                         ".csv");
        auto out = open_out(file);
        write_trajectory_csv(out, setup, r, p);
        written.push_back(file.string());
    }
    return written;
}

void print_simulation_summary(const SimulationSetup& setup, const RunReport& report,
                              const std::vector<std::string>& files, bool quiet) {
    if (quiet) return;
    std::cout << "[simulate] model=" << report.model << " scheme=" << report.scheme
              << " nodes=" << report.grid_nodes << " tau=" << fmt_short(report.tau)
              << " hash=" << setup.config_hash << '\n';
    std::cout << "[simulate] paths=" << report.path_count << " failed=" << report.failed_paths
              << " seed=" << report.master_seed
              << " max_violation=" << fmt_short(report.max_violation)
              << " entropy_final=" << fmt_short(report.entropy_mean.back()) << '\n';
    for (const std::string& f : files) std::cout << "[simulate] wrote " << f << '\n';
}

int to_int_level(long v, const char* what) {
    if (v < 1 || v > 40) throw ConfigError(std::string(what) + ": levels must lie in [1, 40]");
    return static_cast<int>(v);
}

}  // namespace

int cmd_simulate(const std::string& config_path, const CommonOverrides& overrides) {
    const ConfigTable table = ConfigTable::parse_file(config_path);
    const SimulationSetup setup = load_simulation(table, overrides);
    const RunReport report = execute_simulation(setup, overrides.threads);
    const std::vector<std::string> files = write_simulation_artifacts(setup, report);
    print_simulation_summary(setup, report, files, overrides.quiet);
    if (!report.failures.empty() && !overrides.quiet)
        for (const std::string& f : report.failures)
            std::cout << "[simulate] path failure: " << f << '\n';
    return 0;
}

int cmd_check_assumptions(const std::string& config_path, const CommonOverrides& overrides) {
    ConfigTable table = ConfigTable::parse_file(config_path);
    if (overrides.seed)
        table.override_value("assumptions", "seed", std::to_string(*overrides.seed));
    if (overrides.out) table.override_value("output", "directory", *overrides.out);

    const ModelSpec model = load_model(table);
    const long samples = table.get_integer("assumptions", "samples", 10000);
    if (samples < 10) throw ConfigError("[assumptions] samples: must be >= 10");
    const uint64_t seed = table.get_seed("assumptions", "seed", 0);
    const std::string hash = hex64(fnv1a64(table.canonical()));
    const std::string out_dir = table.get_string("output", "directory", "out");

    const AssumptionReport report = certify(model, static_cast<int>(samples), seed);

    fs::create_directories(out_dir);
    {
        auto out = open_out(fs::path(out_dir) / "assumptions.json");
        write_assumption_json(out, report, hash);
    }
    {
        auto out = open_out(fs::path(out_dir) / "assumptions.csv");
        write_assumption_csv(out, report, hash);
    }

    if (!overrides.quiet) {
        auto line = [](bool pass, const std::string& text) {
            std::cout << (pass ? "[pass] " : "[FAIL] ") << text << '\n';
        };
        std::cout << "[check] model=" << report.model << " samples=" << report.sample_count
                  << " seed=" << report.seed << '\n';
        line(report.lipschitz.pass,
             "diffusion Lipschitz bound: constant=" + fmt_short(report.lipschitz.constant));
        std::string coer = "dissipation coercivity: c_h=" +
                           fmt_short(report.coercivity.c_h_empirical) +
                           " m=" + fmt_short(report.coercivity.exponent_m);
        if (report.coercivity.c_h_declared)
            coer += " declared=" + fmt_short(*report.coercivity.c_h_declared);
        line(report.coercivity.pass, coer);
        if (!report.coercivity.pass && !report.coercivity.witness_u.empty()) {
            std::cout << "       witness u = (";
            for (size_t i = 0; i < report.coercivity.witness_u.size(); ++i)
                std::cout << (i ? ", " : "") << fmt_short(report.coercivity.witness_u[i]);
            std::cout << "), z = (";
            for (size_t i = 0; i < report.coercivity.witness_z.size(); ++i)
                std::cout << (i ? ", " : "") << fmt_short(report.coercivity.witness_z[i]);
            std::cout << ")\n";
        }
        line(report.noise_interaction.pass,
             "noise/entropy interaction: sup=" + fmt_short(report.noise_interaction.c_h_bound) +
                 " growth_per_decade=" +
                 fmt_short(report.noise_interaction.growth_per_decade));
        std::string reg = "interior-shift remainder decay:";
        for (size_t k = 0; k < report.regularization.deltas.size(); ++k)
            reg += " " + fmt_short(report.regularization.deltas[k]) + "->" +
                   fmt_short(report.regularization.sup_norms[k]);
        if (!report.regularization.closed_form) reg += " (defect fallback)";
        line(report.regularization.pass, reg);
        line(report.pass, std::string("overall: ") + (report.pass ? "pass" : "fail"));
    }
    return report.pass ? 0 : 1;
}

int cmd_converge(const std::string& config_path, const CommonOverrides& overrides) {
    ConfigTable table = ConfigTable::parse_file(config_path);
    if (overrides.seed)
        table.override_value("monte_carlo", "master_seed", std::to_string(*overrides.seed));
    if (overrides.out) table.override_value("output", "directory", *overrides.out);

    if (!table.has("study", "type"))
        throw ConfigError("[study] type: required for the converge command");
    const std::string type = table.get_string("study", "type", "");
    const std::string hash = hex64(fnv1a64(table.canonical()));
    const std::string out_dir = table.get_string("output", "directory", "out");
    const uint64_t seed = table.get_seed("monte_carlo", "master_seed", 0);

    const ModelSpec model = load_model(table);
    const double horizon = table.get_number("solver", "horizon", 0.0);
    if (!(horizon > 0.0)) throw ConfigError("[solver] horizon: required, must be > 0");

    auto level_list = [&table](const char* what) {
        std::vector<int> levels;
        for (long v : table.get_integer_list("study", "levels"))
            levels.push_back(to_int_level(v, what));
        if (levels.size() < 2)
            throw ConfigError(std::string("[study] levels: a convergence ladder needs at least "
                                          "two levels for ") +
                              what);
        return levels;
    };
    auto build_grid = [&table] {
        const long nodes = table.get_integer("grid", "nodes", 0);
        if (nodes < 2) throw ConfigError("[grid] nodes: required, must be >= 2");
        const double length = table.get_number("grid", "length", 1.0);
        if (!(length > 0.0)) throw ConfigError("[grid] length: must be > 0");
        return Grid1D{static_cast<int>(nodes), length};
    };
    auto build_initial = [&table](const ModelSpec& m, const Grid1D& g) {
        const std::string name = table.get_string("initial", "profile", "barycenter");
        try {
            return make_profile(profile_from_name(name), m.n, g);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("[initial] profile: ") + e.what());
        }
    };

    StudyResult study;
    if (type == "wong-zakai") {
        const Grid1D grid = build_grid();
        const ConcentrationField initial = build_initial(model, grid);
        const std::vector<int> levels = level_list("wong-zakai");
        const int tau_levels = to_int_level(
            table.get_integer("study", "tau_levels", levels.back() + 2), "wong-zakai");
        if (tau_levels < levels.back())
            throw ConfigError(
                "[study] tau_levels: the fine step must be at least as fine as every level");
        study = wong_zakai_study(model, grid, initial, horizon, tau_levels, levels,
                                 static_cast<int>(table.get_integer("study", "paths", 50)), seed,
                                 {}, overrides.threads);
    } else if (type == "ito-vs-heun") {
        const Grid1D grid = build_grid();
        const ConcentrationField initial = build_initial(model, grid);
        study = ito_stratonovich_study(model, grid, initial, horizon,
                                       level_list("ito-vs-heun"),
                                       static_cast<int>(table.get_integer("study", "paths", 50)),
                                       seed, overrides.threads);
    } else if (type == "time-step") {
        const Grid1D grid = build_grid();
        const ConcentrationField initial = build_initial(model, grid);
        study = time_step_study(model, grid, initial, horizon, level_list("time-step"));
    } else if (type == "grid") {
        const double length = table.get_number("grid", "length", 1.0);
        const double tau = table.get_number("solver", "tau", 0.0);
        if (!(tau > 0.0)) throw ConfigError("[solver] tau: required, must be > 0");
        std::vector<int> nodes;
        for (long v : table.get_integer_list("study", "nodes_list")) {
            if (v < 2 || v > 100000) throw ConfigError("[study] nodes_list: out of range");
            nodes.push_back(static_cast<int>(v));
        }
        if (nodes.size() < 2)
            throw ConfigError("[study] nodes_list: a ladder needs at least two grids");
        const long ref = table.get_integer("study", "reference_nodes", 0);
        if (ref < 3) throw ConfigError("[study] reference_nodes: required, must be >= 3");
        const std::string profile = table.get_string("initial", "profile", "barycenter");
        study = grid_refinement_study(model, profile_from_name(profile), length, horizon, tau,
                                      nodes, static_cast<int>(ref));
    } else {
        throw ConfigError("[study] type: unknown study '" + type +
                          "' (wong-zakai, ito-vs-heun, time-step, grid)");
    }

    fs::create_directories(out_dir);
    {
        auto out = open_out(fs::path(out_dir) / "study.json");
        write_study_json(out, study, hash);
    }
    {
        auto out = open_out(fs::path(out_dir) / "study.csv");
        write_study_csv(out, study, hash);
    }

    if (!overrides.quiet) {
        std::cout << "[converge] kind=" << study.kind << " model=" << model.name
                  << " seed=" << study.master_seed << " paths=" << study.paths
                  << " hash=" << hash << '\n';
        for (const StudyPoint& p : study.points)
            std::cout << "[converge] parameter=" << fmt_short(p.parameter)
                      << " error=" << fmt_short(p.error) << '\n';
        std::cout << "[converge] slope=" << fmt_short(study.fit.slope)
                  << " monotone=" << (study.monotone ? "yes" : "no") << '\n';
    }
    return 0;
}

int cmd_sweep(const std::string& config_path, const CommonOverrides& overrides) {
    const ConfigTable table = ConfigTable::parse_file(config_path);
    if (!table.has("sweep", "parameter"))
        throw ConfigError("[sweep] parameter: required for the sweep command");
    const std::string parameter = table.get_string("sweep", "parameter", "");
    const size_t dot = parameter.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 >= parameter.size())
        throw ConfigError("[sweep] parameter: expected section.key, got '" + parameter + "'");
    const std::string section = parameter.substr(0, dot);
    const std::string key = parameter.substr(dot + 1);
    if (section == "output" || section == "sweep")
        throw ConfigError("[sweep] parameter: cannot sweep [" + section + "] keys");
    const std::vector<std::string> values = table.get_string_list("sweep", "values");

    const std::string base_out = overrides.out ? *overrides.out
                                               : table.get_string("output", "directory", "out");
    fs::create_directories(base_out);

    struct Row {
        int index;
        std::string value, hash;
        double entropy_final, max_violation;
        int failed;
        uint64_t seed;
    };
    std::vector<Row> rows;

    for (size_t idx = 0; idx < values.size(); ++idx) {
        ConfigTable point = table;
        point.override_value(section, key, values[idx]);

        CommonOverrides po = overrides;
        po.out = (fs::path(base_out) / ("point_" + zero_pad(static_cast<int>(idx), 3))).string();

        const SimulationSetup setup = load_simulation(point, po);
        const RunReport report = execute_simulation(setup, overrides.threads);
        const std::vector<std::string> files = write_simulation_artifacts(setup, report);
        if (!overrides.quiet) {
            std::cout << "[sweep] point=" << idx << " " << parameter << "=" << values[idx]
                      << " entropy_final=" << fmt_short(report.entropy_mean.back())
                      << " max_violation=" << fmt_short(report.max_violation)
                      << " failed=" << report.failed_paths << '\n';
        }
        rows.push_back({static_cast<int>(idx), values[idx], setup.config_hash,
                        report.entropy_mean.back(), report.max_violation, report.failed_paths,
                        report.master_seed});
    }

    auto out = open_out(fs::path(base_out) / "sweep.csv");
    out << "# parameter=" << parameter << '\n';
    out << "point,value,config_hash,seed,entropy_final,max_violation,failed_paths\n";
    for (const Row& r : rows)
        out << r.index << ',' << r.value << ',' << r.hash << ',' << r.seed << ','
            << fmt(r.entropy_final) << ',' << fmt(r.max_violation) << ',' << r.failed << '\n';
    if (!overrides.quiet)
        std::cout << "[sweep] wrote " << (fs::path(base_out) / "sweep.csv").string() << '\n';
    return 0;
}

}  // namespace crossdiff::cli

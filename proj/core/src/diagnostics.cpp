#include "crossdiff/diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace crossdiff {

namespace {

double snapshot_l2_distance(const ConcentrationField& a, const ConcentrationField& b,
                            const Grid1D& grid) {
    if (a.components() != b.components() || a.nodes() != b.nodes())
        throw std::invalid_argument("strong_error: field shape mismatch");
    double s = 0.0;
    for (int j = 0; j < grid.nodes; ++j) {
        const double w = grid.weight(j);
        for (int i = 0; i < a.components(); ++i) {
            const double d = a.at(i, j) - b.at(i, j);
            s += w * d * d;
        }
    }
    return std::sqrt(s);
}

void check_shared_times(const TrajectoryResult& a, const TrajectoryResult& b) {
    if (a.snapshots.size() != b.snapshots.size() || a.snapshots.empty())
        throw std::invalid_argument("strong_error: trajectories record different snapshot sets");
    for (size_t k = 0; k < a.snapshots.size(); ++k)
        if (std::abs(a.snapshots[k].first - b.snapshots[k].first) >
            1e-9 * std::max(1.0, std::abs(a.snapshots[k].first)))
            throw std::invalid_argument("strong_error: snapshot times differ");
}

}  // namespace

double strong_error(const TrajectoryResult& a, const TrajectoryResult& b, const Grid1D& grid) {
    check_shared_times(a, b);
    double worst = 0.0;
    for (size_t k = 0; k < a.snapshots.size(); ++k)
        worst = std::max(worst,
                         snapshot_l2_distance(a.snapshots[k].second, b.snapshots[k].second, grid));
    return worst;
}

double final_state_error(const TrajectoryResult& a, const TrajectoryResult& b,
                         const Grid1D& grid) {
    check_shared_times(a, b);
    return snapshot_l2_distance(a.snapshots.back().second, b.snapshots.back().second, grid);
}

RateFit fit_rate(std::span<const double> parameters, std::span<const double> errors) {
    if (parameters.size() != errors.size())
        throw std::invalid_argument("fit_rate: size mismatch");
    if (parameters.size() < 2)
        throw std::invalid_argument("fit_rate: need at least two points");
    RateFit fit;
    fit.parameters.assign(parameters.begin(), parameters.end());
    fit.errors.assign(errors.begin(), errors.end());

    const size_t n = parameters.size();
    Vec lx(n), ly(n);
    for (size_t k = 0; k < n; ++k) {
        if (!(parameters[k] > 0.0) || !(errors[k] > 0.0))
            throw std::invalid_argument("fit_rate: parameters and errors must be positive");
        lx[k] = std::log(parameters[k]);
        ly[k] = std::log(errors[k]);
    }
    double mx = 0.0, my = 0.0;
    for (size_t k = 0; k < n; ++k) { mx += lx[k]; my += ly[k]; }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (size_t k = 0; k < n; ++k) {
        sxx += (lx[k] - mx) * (lx[k] - mx);
        sxy += (lx[k] - mx) * (ly[k] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_rate: parameters are all equal");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double rss = 0.0;
    for (size_t k = 0; k < n; ++k) {
        const double r = ly[k] - (fit.intercept + fit.slope * lx[k]);
        rss += r * r;
    }
    fit.residual = std::sqrt(rss / static_cast<double>(n));
    return fit;
}

double fit_entropy_constant(const RunReport& report, double h0, double c1) {
    if (report.times.empty())
        throw std::invalid_argument("fit_entropy_constant: empty report");
    if (c1 < 0.0)
        throw std::invalid_argument("fit_entropy_constant: c1 must be >= 0");
    double c2 = 0.0;
    for (size_t k = 0; k < report.times.size(); ++k) {
        const double t = report.times[k];
        if (!(t > 0.0)) continue;
        const double lhs = report.entropy_mean[k] + c1 * report.dissipation_mean[k] - h0;
        c2 = std::max(c2, lhs / t);
    }
    return c2;
}

EntropyInequalityCheck entropy_inequality_check(std::span<const RunReport> reports,
                                                std::span<const double> h0, double c1,
                                                double rel_tol) {
    if (reports.empty() || reports.size() != h0.size())
        throw std::invalid_argument("entropy_inequality_check: report/h0 size mismatch");
    EntropyInequalityCheck out;
    for (size_t k = 0; k < reports.size(); ++k)
        out.fitted_constants.push_back(fit_entropy_constant(reports[k], h0[k], c1));
    double mean = 0.0;
    for (double c : out.fitted_constants) mean += c;
    mean /= static_cast<double>(out.fitted_constants.size());
    if (mean == 0.0) {
        out.max_relative_spread = 0.0;
        out.pass = true;
        return out;
    }
    for (double c : out.fitted_constants)
        out.max_relative_spread = std::max(out.max_relative_spread, std::abs(c - mean) / mean);
    out.pass = out.max_relative_spread <= rel_tol &&
               std::all_of(out.fitted_constants.begin(), out.fitted_constants.end(),
                           [](double c) { return std::isfinite(c); });
    return out;
}

namespace {

/// Dispatch path indices 0..paths-1 to a worker pool. The first exception
/// raised by any body is rethrown after all workers drain.
void parallel_paths(int paths, int threads, const std::function<void(int)>& body) {
    threads = std::clamp(threads, 1, paths);
    if (threads == 1) {
        for (int p = 0; p < paths; ++p) body(p);
        return;
    }
    std::atomic<int> next{0};
    std::mutex error_mutex;
    std::string first_error;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            while (true) {
                const int p = next.fetch_add(1);
                if (p >= paths) break;
                try {
                    body(p);
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (first_error.empty()) first_error = e.what();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (!first_error.empty()) throw std::runtime_error(first_error);
}

void require_increasing_levels(std::span<const int> levels, int max_level, const char* where) {
    if (levels.empty()) throw std::invalid_argument(std::string(where) + ": empty level list");
    for (size_t k = 0; k < levels.size(); ++k) {
        if (levels[k] < 1 || levels[k] > max_level)
            throw std::invalid_argument(std::string(where) + ": level out of range");
        if (k > 0 && levels[k] <= levels[k - 1])
            throw std::invalid_argument(std::string(where) + ": levels must strictly increase");
    }
}

bool strictly_decreasing(const std::vector<StudyPoint>& points) {
    for (size_t k = 1; k < points.size(); ++k)
        if (!(points[k].error < points[k - 1].error)) return false;
    return true;
}

void finish_study(StudyResult& study) {
    Vec params, errs;
    for (const StudyPoint& p : study.points) {
        params.push_back(p.parameter);
        errs.push_back(p.error);
    }
    study.fit = fit_rate(params, errs);
    study.monotone = strictly_decreasing(study.points);
}

}  // namespace

StudyResult wong_zakai_study(const ModelSpec& model, const Grid1D& grid,
                             const ConcentrationField& initial, double horizon, int tau_levels,
                             std::span<const int> eta_levels, int paths, uint64_t master_seed,
                             std::span<const double> snapshot_times, int threads) {
    if (tau_levels < 1 || tau_levels > 40)
        throw std::invalid_argument("wong_zakai_study: tau_levels out of range");
    require_increasing_levels(eta_levels, tau_levels, "wong_zakai_study");
    if (paths < 1) throw std::invalid_argument("wong_zakai_study: need at least one path");

    const double tau = horizon / static_cast<double>(int64_t{1} << tau_levels);
    std::vector<double> snaps(snapshot_times.begin(), snapshot_times.end());
    if (snaps.empty()) {
        // Default: nine evenly spaced dyadic times, so the sup is sampled
        // away from the endpoints too.
        if (tau_levels < 3)
            throw std::invalid_argument("wong_zakai_study: tau_levels too coarse for snapshots");
        for (int k = 0; k <= 8; ++k) snaps.push_back(horizon * static_cast<double>(k) / 8.0);
    }

    const size_t level_count = eta_levels.size();
    std::vector<Vec> squared(level_count, Vec(static_cast<size_t>(paths), 0.0));

    parallel_paths(paths, threads, [&](int p) {
        const WienerPath fine = sample_path(derive_path_seed(master_seed, p), horizon,
                                            tau_levels, model.n);
        SolverConfig ref_cfg;
        ref_cfg.scheme = Scheme::HeunStratonovich;
        ref_cfg.tau = tau;
        ref_cfg.horizon = horizon;
        ref_cfg.snapshot_times = snaps;
        const TrajectoryResult ref = run_trajectory(model, grid, ref_cfg, initial, &fine);
        if (!ref.ok())
            throw std::runtime_error("wong_zakai_study: reference path failed: " + ref.error);

        for (size_t li = 0; li < level_count; ++li) {
            const WienerPath coarse = coarsen(fine, tau_levels - eta_levels[li]);
            SolverConfig cfg;
            cfg.scheme = Scheme::EntropyImplicit;
            cfg.tau = tau;
            cfg.horizon = horizon;
            cfg.snapshot_times = snaps;
            const TrajectoryResult wz = run_trajectory(model, grid, cfg, initial, &coarse);
            if (!wz.ok())
                throw std::runtime_error("wong_zakai_study: interpolant path failed: " + wz.error);
            const double e = strong_error(wz, ref, grid);
            squared[li][static_cast<size_t>(p)] = e * e;
        }
    });

    StudyResult study;
    study.kind = "wong_zakai";
    study.paths = paths;
    study.master_seed = master_seed;
    for (size_t li = 0; li < level_count; ++li) {
        double mean = 0.0;
        for (double s : squared[li]) mean += s;
        mean /= static_cast<double>(paths);
        study.points.push_back({horizon / static_cast<double>(int64_t{1} << eta_levels[li]), mean});
    }
    finish_study(study);
    return study;
}

StudyResult ito_stratonovich_study(const ModelSpec& model, const Grid1D& grid,
                                   const ConcentrationField& initial, double horizon,
                                   std::span<const int> joint_levels, int paths,
                                   uint64_t master_seed, int threads) {
    require_increasing_levels(joint_levels, 40, "ito_stratonovich_study");
    if (paths < 1) throw std::invalid_argument("ito_stratonovich_study: need at least one path");

    const int finest = joint_levels.back();
    const size_t level_count = joint_levels.size();
    std::vector<Vec> dist(level_count, Vec(static_cast<size_t>(paths), 0.0));

    parallel_paths(paths, threads, [&](int p) {
        const WienerPath fine = sample_path(derive_path_seed(master_seed, p), horizon, finest,
                                            model.n);
        for (size_t li = 0; li < level_count; ++li) {
            const WienerPath level_path = coarsen(fine, finest - joint_levels[li]);
            SolverConfig cfg;
            cfg.tau = horizon / static_cast<double>(int64_t{1} << joint_levels[li]);
            cfg.horizon = horizon;
            cfg.snapshot_times = {0.0, horizon};

            cfg.scheme = Scheme::EulerMaruyamaIto;
            const TrajectoryResult em = run_trajectory(model, grid, cfg, initial, &level_path);
            if (!em.ok())
                throw std::runtime_error("ito_stratonovich_study: corrected path failed: " +
                                         em.error);
            cfg.scheme = Scheme::HeunStratonovich;
            const TrajectoryResult heun = run_trajectory(model, grid, cfg, initial, &level_path);
            if (!heun.ok())
                throw std::runtime_error("ito_stratonovich_study: trapezoidal path failed: " +
                                         heun.error);
            dist[li][static_cast<size_t>(p)] = final_state_error(em, heun, grid);
        }
    });

    StudyResult study;
    study.kind = "ito_stratonovich";
    study.paths = paths;
    study.master_seed = master_seed;
    for (size_t li = 0; li < level_count; ++li) {
        double mean = 0.0;
        for (double d : dist[li]) mean += d;
        mean /= static_cast<double>(paths);
        study.points.push_back(
            {horizon / static_cast<double>(int64_t{1} << joint_levels[li]), mean});
    }
    finish_study(study);
    return study;
}

StudyResult time_step_study(const ModelSpec& model, const Grid1D& grid,
                            const ConcentrationField& initial, double horizon,
                            std::span<const int> tau_levels) {
    require_increasing_levels(tau_levels, 38, "time_step_study");

    SolverConfig ref_cfg;
    ref_cfg.tau = horizon / static_cast<double>(int64_t{1} << (tau_levels.back() + 2));
    ref_cfg.horizon = horizon;
    ref_cfg.epsilon = 0.0;
    ref_cfg.snapshot_times = {0.0, horizon};
    const TrajectoryResult ref = run_trajectory(model, grid, ref_cfg, initial, nullptr);
    if (!ref.ok()) throw std::runtime_error("time_step_study: reference run failed: " + ref.error);

    StudyResult study;
    study.kind = "time_step";
    study.paths = 0;
    for (int level : tau_levels) {
        SolverConfig cfg = ref_cfg;
        cfg.tau = horizon / static_cast<double>(int64_t{1} << level);
        const TrajectoryResult run = run_trajectory(model, grid, cfg, initial, nullptr);
        if (!run.ok()) throw std::runtime_error("time_step_study: run failed: " + run.error);
        study.points.push_back({cfg.tau, final_state_error(run, ref, grid)});
    }
    finish_study(study);
    return study;
}

StudyResult grid_refinement_study(const ModelSpec& model, Profile profile, double length,
                                  double horizon, double tau, std::span<const int> node_counts,
                                  int reference_nodes) {
    if (node_counts.empty())
        throw std::invalid_argument("grid_refinement_study: empty node list");
    if (reference_nodes < 3)
        throw std::invalid_argument("grid_refinement_study: reference grid too small");
    for (size_t k = 0; k < node_counts.size(); ++k) {
        const int nodes = node_counts[k];
        if (nodes < 2 || nodes >= reference_nodes)
            throw std::invalid_argument("grid_refinement_study: node count out of range");
        if ((reference_nodes - 1) % (nodes - 1) != 0)
            throw std::invalid_argument(
                "grid_refinement_study: grids must nest inside the reference grid");
        if (k > 0 && nodes <= node_counts[k - 1])
            throw std::invalid_argument("grid_refinement_study: node counts must increase");
    }

    SolverConfig cfg;
    cfg.tau = tau;
    cfg.horizon = horizon;
    cfg.epsilon = 0.0;
    cfg.snapshot_times = {0.0, horizon};

    const Grid1D ref_grid{reference_nodes, length};
    const ConcentrationField ref_initial = make_profile(profile, model.n, ref_grid);
    const TrajectoryResult ref = run_trajectory(model, ref_grid, cfg, ref_initial, nullptr);
    if (!ref.ok())
        throw std::runtime_error("grid_refinement_study: reference run failed: " + ref.error);
    const ConcentrationField& ref_final = ref.snapshots.back().second;

    StudyResult study;
    study.kind = "grid_refinement";
    study.paths = 0;
    for (int nodes : node_counts) {
        const Grid1D grid{nodes, length};
        const ConcentrationField initial = make_profile(profile, model.n, grid);
        const TrajectoryResult run = run_trajectory(model, grid, cfg, initial, nullptr);
        if (!run.ok()) throw std::runtime_error("grid_refinement_study: run failed: " + run.error);
        const ConcentrationField& fin = run.snapshots.back().second;

        const int stride = (reference_nodes - 1) / (nodes - 1);
        double s = 0.0;
        for (int j = 0; j < nodes; ++j) {
            const double w = grid.weight(j);
            for (int i = 0; i < model.n; ++i) {
                const double d = fin.at(i, j) - ref_final.at(i, j * stride);
                s += w * d * d;
            }
        }
        study.points.push_back({grid.dx(), std::sqrt(s)});
    }
    finish_study(study);
    return study;
}

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

}  // namespace

void write_study_json(std::ostream& out, const StudyResult& study,
                      const std::string& config_hash) {
    nlohmann::json j;
    j["config_hash"] = config_hash;
    j["kind"] = study.kind;
    j["seed"] = study.master_seed;
    j["paths"] = study.paths;
    j["monotone"] = study.monotone;
    j["slope"] = study.fit.slope;
    j["intercept"] = study.fit.intercept;
    j["fit_residual"] = study.fit.residual;
    Vec params, errs;
    for (const StudyPoint& p : study.points) {
        params.push_back(p.parameter);
        errs.push_back(p.error);
    }
    j["parameters"] = params;
    j["errors"] = errs;
    out << j.dump(2) << '\n';
}

void write_study_csv(std::ostream& out, const StudyResult& study, const std::string& config_hash) {
    out << "# config_hash=" << config_hash << " seed=" << study.master_seed
        << " kind=" << study.kind << '\n';
    out << "parameter,error\n";
    for (const StudyPoint& p : study.points)
        out << fmt17(p.parameter) << ',' << fmt17(p.error) << '\n';
}

void write_report_json(std::ostream& out, const RunReport& report,
                       const std::string& config_hash) {
    nlohmann::json j;
    j["config_hash"] = config_hash;
    j["seed"] = report.master_seed;
    j["scheme"] = report.scheme;
    j["model"] = report.model;
    j["grid_nodes"] = report.grid_nodes;
    j["tau"] = report.tau;
    j["eta"] = report.eta;
    j["path_count"] = report.path_count;
    j["failed_paths"] = report.failed_paths;
    j["failures"] = report.failures;
    j["entropy_initial"] = report.entropy_initial;
    j["max_violation"] = report.max_violation;
    j["mean_newton_iters"] = report.mean_newton_iters;
    j["max_newton_iters"] = report.max_newton_iters;
    j["total_halvings"] = report.total_halvings;
    j["times"] = report.times;
    j["entropy_mean"] = report.entropy_mean;
    j["entropy_var"] = report.entropy_var;
    j["entropy_stderr"] = report.entropy_stderr;
    j["dissipation_mean"] = report.dissipation_mean;
    j["violation_max"] = report.violation_max;
    j["mass_mean"] = report.mass_mean;
    out << j.dump(2) << '\n';
}

void write_report_csv(std::ostream& out, const RunReport& report,
                      const std::string& config_hash) {
    const int n = report.mass_mean.empty() ? 0 : static_cast<int>(report.mass_mean.front().size());
    out << "# config_hash=" << config_hash << " seed=" << report.master_seed << '\n';
    out << "t,entropy_mean,entropy_stderr,dissipation_mean";
    for (int i = 0; i < n; ++i) out << ",mass_" << (i + 1);
    out << ",violation_max\n";
    for (size_t k = 0; k < report.times.size(); ++k) {
        out << fmt17(report.times[k]) << ',' << fmt17(report.entropy_mean[k]) << ','
            << fmt17(report.entropy_stderr[k]) << ',' << fmt17(report.dissipation_mean[k]);
        for (int i = 0; i < n; ++i) out << ',' << fmt17(report.mass_mean[k][i]);
        out << ',' << fmt17(report.violation_max[k]) << '\n';
    }
}

}  // namespace crossdiff

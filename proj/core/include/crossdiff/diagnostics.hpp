#pragma once

/// @file diagnostics.hpp
/// Post-processing of trajectories and Monte Carlo reports: pathwise
/// distances between coupled runs, log-log rate fits for convergence
/// ladders, and the fitted constant of the entropy production estimate
///   E integral h(u(t)) + C1 * E integral_0^t dissipation <= h(0) + C2 * t.

#include <iosfwd>
#include <span>
#include <string>

#include "crossdiff/solver.hpp"

namespace crossdiff {

/// Largest discrete L2 distance between two trajectories over their shared
/// recorded times:  max_t sqrt(sum_i integral (a_i - b_i)^2 dx).
/// Snapshots must have been taken at identical times on the same grid.
double strong_error(const TrajectoryResult& a, const TrajectoryResult& b, const Grid1D& grid);

/// Discrete L2 distance at the final recorded snapshot only.
double final_state_error(const TrajectoryResult& a, const TrajectoryResult& b, const Grid1D& grid);

/// Least-squares fit of log(error) against log(parameter).
struct RateFit {
    Vec parameters;
    Vec errors;
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  ///< rms of the log-space fit residual
};

/// Fits error ~ C * parameter^slope. Requires >= 2 points with strictly
/// positive parameters and errors.
RateFit fit_rate(std::span<const double> parameters, std::span<const double> errors);

/// Smallest C2 >= 0 such that
///   entropy_mean(t) + c1 * dissipation_mean(t) <= h0 + C2 * t
/// over all recorded times t > 0 of the report.
double fit_entropy_constant(const RunReport& report, double h0, double c1);

struct EntropyInequalityCheck {
    Vec fitted_constants;   ///< one per report
    double max_relative_spread = 0.0;
    bool pass = false;
};

/// Fit the production constant on each report (each with its own h0) and
/// pass when all fits agree within the relative tolerance (default 20%),
/// measured as max |C_i - mean| / mean. All-zero fits pass trivially.
EntropyInequalityCheck entropy_inequality_check(std::span<const RunReport> reports,
                                                std::span<const double> h0, double c1,
                                                double rel_tol = 0.20);

// ---------------------------------------------------------------------------
// Convergence studies (shared by the CLI and the acceptance suite).
// ---------------------------------------------------------------------------

struct StudyPoint {
    double parameter = 0.0;  ///< ladder parameter (eta, tau, or dx)
    double error = 0.0;      ///< averaged coupled error at this level
};

struct StudyResult {
    std::string kind;
    std::vector<StudyPoint> points;  ///< ordered from coarsest to finest
    RateFit fit;                     ///< log-log fit of error vs parameter
    bool monotone = false;           ///< errors strictly decrease along the ladder
    int paths = 0;
    uint64_t master_seed = 0;
};

/// Interpolant-to-noise convergence: for each eta level the implicit
/// scheme driven by the piecewise-linear interpolant of a coarsened copy
/// of one fine Wiener path is compared against the Heun reference on the
/// same fine path, both at step tau = horizon / 2^tau_levels. The error at
/// a level is the path average of the squared sup-over-snapshots L2
/// distance. eta_levels entries give eta = horizon / 2^level and must
/// increase (coarse to fine); every level needs level <= tau_levels.
StudyResult wong_zakai_study(const ModelSpec& model, const Grid1D& grid,
                             const ConcentrationField& initial, double horizon, int tau_levels,
                             std::span<const int> eta_levels, int paths, uint64_t master_seed,
                             std::span<const double> snapshot_times, int threads = 1);

/// Drift-correction consistency: the explicit corrected scheme and the
/// Heun scheme run on the same path at tau = eta = horizon / 2^level; the
/// error is the path-averaged L2 distance of the final states. Levels
/// must increase.
StudyResult ito_stratonovich_study(const ModelSpec& model, const Grid1D& grid,
                                   const ConcentrationField& initial, double horizon,
                                   std::span<const int> joint_levels, int paths,
                                   uint64_t master_seed, int threads = 1);

/// Deterministic self-convergence in the time step (noise-free dynamics,
/// implicit scheme): error of the final state against a reference two
/// levels finer than the finest requested.
StudyResult time_step_study(const ModelSpec& model, const Grid1D& grid,
                            const ConcentrationField& initial, double horizon,
                            std::span<const int> tau_levels);

/// Deterministic grid self-convergence at fixed tau: nested node ladders
/// (2^k + 1) against a reference grid, compared on shared nodes. The
/// profile is regenerated per grid.
StudyResult grid_refinement_study(const ModelSpec& model, Profile profile, double length,
                                  double horizon, double tau, std::span<const int> node_counts,
                                  int reference_nodes);

void write_study_json(std::ostream& out, const StudyResult& study, const std::string& config_hash);
void write_study_csv(std::ostream& out, const StudyResult& study, const std::string& config_hash);

// ---------------------------------------------------------------------------
// Serialization. JSON uses alphabetically ordered keys; CSV columns are
// t, entropy_mean, entropy_stderr, dissipation_mean, mass_1..n,
// violation_max. Artifacts embed provenance (config hash, seed) supplied by
// the caller.
// ---------------------------------------------------------------------------

void write_report_json(std::ostream& out, const RunReport& report,
                       const std::string& config_hash);
void write_report_csv(std::ostream& out, const RunReport& report,
                      const std::string& config_hash);

}  // namespace crossdiff

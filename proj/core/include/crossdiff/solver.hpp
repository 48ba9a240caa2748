#pragma once

/// @file solver.hpp
/// Time integration: the structure-preserving implicit scheme in entropy
/// variables, an explicit Euler-Maruyama scheme with the drift correction
/// (the unstructured reference), and a Heun scheme for the
/// Stratonovich-form dynamics. A Monte Carlo driver aggregates per-path
/// diagnostics deterministically.
///
/// All schemes advance the semidiscrete system
///   du/dt = div(A(u) grad u) + forcing
/// on a 1-D zero-flux grid; the forcing is sigma(u) times either the
/// piecewise-constant slope of a Wiener interpolant (implicit scheme) or
/// Wiener increments (explicit schemes).

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "crossdiff/grid.hpp"
#include "crossdiff/model.hpp"
#include "crossdiff/noise.hpp"

namespace crossdiff {

enum class Scheme { EntropyImplicit, EulerMaruyamaIto, HeunStratonovich };

Scheme scheme_from_name(const std::string& name);
std::string scheme_name(Scheme scheme);

struct NewtonParams {
    int max_iter = 50;
    double abs_tol = 1e-10;    ///< max-norm of the per-node residual
    double damping = 1.0;      ///< initial step fraction, in (0, 1]
    int max_tau_halvings = 8;  ///< step-size bisection depth on divergence
};

struct SolverConfig {
    Scheme scheme = Scheme::EntropyImplicit;
    double tau = 1.0 / 256.0;
    double horizon = 1.0;
    /// Dual-variable regularization strength; defaults to tau when unset.
    std::optional<double> epsilon;
    /// Interior pull applied to the initial state for the implicit scheme.
    double delta0 = 1e-8;
    NewtonParams newton;
    /// Times at which full fields are recorded; must lie on the step grid.
    /// Empty means {0, horizon}.
    std::vector<double> snapshot_times;

    double epsilon_value() const { return epsilon.value_or(tau); }
};

struct StepReport {
    bool converged = true;
    int newton_iters = 0;      ///< total over sub-steps
    int tau_halvings = 0;      ///< bisection depth used
    double residual = 0.0;     ///< max-norm after the last sub-step
    double violation = 0.0;    ///< simplex violation of the new state
};

/// Advance one implicit step of size tau in dual variables: find w with
///   (u(w) - u(w_prev))/tau - div(A(u(w)) grad u(w)) + eps*w = forcing
/// at every node (damped Newton; the Jacobian is assembled by finite
/// differences of the residual with a 3-coloring of the nodes). The state
/// u(w) is admissible by construction; no projection anywhere.
std::pair<EntropyField, StepReport> step_entropy_implicit(
    const ModelSpec& model, const Grid1D& grid, const EntropyField& w_prev,
    const Field& forcing, double tau, double epsilon, const NewtonParams& newton);

/// One explicit Euler-Maruyama step of the corrected (Ito-form) dynamics:
///   u_next = u + tau*div(A(u) grad u) + (tau/2)*T(u) + sigma(u)*dW.
/// Coefficients are evaluated on the clamped state; the result is returned
/// unprojected and its simplex violation is reported.
std::pair<ConcentrationField, StepReport> step_euler_maruyama(
    const ModelSpec& model, const Grid1D& grid, const ConcentrationField& u_prev,
    std::span<const double> dw, double tau);

/// One Heun step of the Stratonovich-form dynamics: explicit predictor,
/// then trapezoidal average of drift and noise coefficients.
std::pair<ConcentrationField, StepReport> step_heun_stratonovich(
    const ModelSpec& model, const Grid1D& grid, const ConcentrationField& u_prev,
    std::span<const double> dw, double tau);

enum class TrajectoryStatus { Ok, StepFailure, NonFinite };

struct TrajectoryResult {
    TrajectoryStatus status = TrajectoryStatus::Ok;
    std::string error;
    int failed_step = -1;

    Vec times;                    ///< step grid including t = 0
    Vec entropy;                  ///< integral of h(u(t))
    Vec dissipation;              ///< cumulative time integral of the seminorm
    std::vector<Vec> mass;        ///< per-species masses at each time
    Vec violation;                ///< max simplex violation at each time
    std::vector<int> newton_iters;  ///< per step (implicit scheme)
    std::vector<int> halvings;      ///< per step
    std::vector<std::pair<double, ConcentrationField>> snapshots;

    bool ok() const { return status == TrajectoryStatus::Ok; }
};

/// Integrate one path. The Wiener path must resolve the step grid: the
/// implicit scheme needs tau <= eta with eta divisible by tau (the
/// interpolant slope is frozen across sub-steps), the explicit schemes need
/// tau to be a multiple of eta so increments are exact. Pass path = nullptr
/// for noise-free dynamics.
TrajectoryResult run_trajectory(const ModelSpec& model, const Grid1D& grid,
                                const SolverConfig& config, const ConcentrationField& initial,
                                const WienerPath* path);

/// Aggregated Monte Carlo diagnostics on the shared step grid. Aggregation
/// order is fixed by path id, so results do not depend on thread count.
struct RunReport {
    Vec times;
    Vec entropy_mean;
    Vec entropy_var;
    Vec entropy_stderr;
    Vec dissipation_mean;
    std::vector<Vec> mass_mean;
    Vec violation_max;

    double entropy_initial = 0.0;  ///< integral of h at t = 0
    double max_violation = 0.0;
    double mean_newton_iters = 0.0;
    int max_newton_iters = 0;
    long total_halvings = 0;

    int path_count = 0;
    int failed_paths = 0;
    std::vector<std::string> failures;

    uint64_t master_seed = 0;
    int grid_nodes = 0;
    double tau = 0.0;
    double eta = 0.0;
    std::string scheme;
    std::string model;
};

/// Run path_count independent trajectories with per-path seeds derived
/// from master_seed; aggregate the per-time diagnostics. Failed paths are
/// excluded from the aggregates and recorded; more than 10% failures
/// raises std::runtime_error.
RunReport run_monte_carlo(const ModelSpec& model, const Grid1D& grid, const SolverConfig& config,
                          const ConcentrationField& initial, int path_count,
                          uint64_t master_seed, int noise_levels, int threads = 1);

}  // namespace crossdiff

#include "crossdiff/solver.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <thread>

namespace crossdiff {

namespace {

constexpr double k_time_grid_tol = 1e-9;
constexpr int k_max_backtracks = 10;

long checked_ratio(double coarse, double fine, const char* what) {
    const double r = coarse / fine;
    const long k = std::lround(r);
    if (k < 1 || std::abs(r - static_cast<double>(k)) > 1e-8)
        throw std::invalid_argument(std::string(what) + ": ratio must be a positive integer");
    return k;
}

// --- block tridiagonal systems (node blocks of size n) ---------------------

struct BlockTridiag {
    int n = 0;
    int nx = 0;
    std::vector<Matrix> sub, diag, super;

    BlockTridiag(int n_, int nx_)
        : n(n_), nx(nx_),
          sub(static_cast<size_t>(nx_), Matrix(n_, n_)),
          diag(static_cast<size_t>(nx_), Matrix(n_, n_)),
          super(static_cast<size_t>(nx_), Matrix(n_, n_)) {}
};

/// Block Thomas elimination; rhs is overwritten with the solution.
/// Returns false when a pivot block is singular.
bool solve_block_tridiag(BlockTridiag& m, Field& rhs) {
    const int n = m.n;
    const int nx = m.nx;
    std::vector<Matrix> w(static_cast<size_t>(nx), Matrix(n, n));
    std::vector<int> piv;

    Matrix d = m.diag[0];
    if (!lu_factor(d, piv)) return false;
    {
        lu_solve(d, piv, rhs.node(0));
        // W_0 = D_0^{-1} * super_0, column by column
        for (int c = 0; c < n; ++c) {
            Vec col(static_cast<size_t>(n));
            for (int r = 0; r < n; ++r) col[r] = m.super[0](r, c);
            lu_solve(d, piv, col);
            for (int r = 0; r < n; ++r) w[0](r, c) = col[r];
        }
    }
    for (int j = 1; j < nx; ++j) {
        Matrix dj = m.diag[j] - matmul(m.sub[j], w[j - 1]);
        // rhs_j -= sub_j * rhs_{j-1}
        const Vec prev(rhs.node(j - 1).begin(), rhs.node(j - 1).end());
        const Vec corr = matvec(m.sub[j], prev);
        for (int i = 0; i < n; ++i) rhs.at(i, j) -= corr[i];
        if (!lu_factor(dj, piv)) return false;
        lu_solve(dj, piv, rhs.node(j));
        if (j < nx - 1) {
            for (int c = 0; c < n; ++c) {
                Vec col(static_cast<size_t>(n));
                for (int r = 0; r < n; ++r) col[r] = m.super[j](r, c);
                lu_solve(dj, piv, col);
                for (int r = 0; r < n; ++r) w[j](r, c) = col[r];
            }
        }
    }
    for (int j = nx - 2; j >= 0; --j) {
        const Vec next(rhs.node(j + 1).begin(), rhs.node(j + 1).end());
        const Vec corr = matvec(w[j], next);
        for (int i = 0; i < n; ++i) rhs.at(i, j) -= corr[i];
    }
    return true;
}

// --- implicit residual ------------------------------------------------------

/// Per-node residual of the dual-variable step:
///   R_j = (u(w_j) - u_prev_j)/tau - divflux(u(w))_j + eps*w_j - f_j.
Field implicit_residual(const ModelSpec& model, const Grid1D& grid, const Field& w,
                        const Field& u_prev, const Field& forcing, double tau, double eps) {
    const ConcentrationField u = to_concentration(model, w);
    const Field flux = divergence_form_flux(model, grid, u);
    Field r(model.n, grid.nodes);
    const double inv_tau = 1.0 / tau;
    for (int j = 0; j < grid.nodes; ++j)
        for (int i = 0; i < model.n; ++i)
            r.at(i, j) = (u.at(i, j) - u_prev.at(i, j)) * inv_tau - flux.at(i, j) +
                         eps * w.at(i, j) - forcing.at(i, j);
    return r;
}

double residual_norm(const Field& r) {
    return norm_inf(r.flat());
}

/// Assemble the Jacobian of the implicit residual by finite differences.
/// The residual at node j depends on w at nodes j-1, j, j+1 only, so nodes
/// three apart can be perturbed simultaneously: 3 * n residual evaluations
/// fill the whole block tridiagonal matrix.
void assemble_jacobian_fd(const ModelSpec& model, const Grid1D& grid, const Field& w,
                          const Field& u_prev, const Field& forcing, double tau, double eps,
                          const Field& r_base, BlockTridiag& jac) {
    const int n = model.n;
    const int nx = grid.nodes;
    const double fd_scale = std::sqrt(2.220446049250313e-16);
    Field w_pert = w;
    Vec steps(static_cast<size_t>(nx));

    for (int color = 0; color < 3; ++color) {
        for (int s = 0; s < n; ++s) {
            for (int j = color; j < nx; j += 3) {
                steps[j] = fd_scale * (1.0 + std::abs(w.at(s, j)));
                w_pert.at(s, j) = w.at(s, j) + steps[j];
            }
            const Field r_pert =
                implicit_residual(model, grid, w_pert, u_prev, forcing, tau, eps);
            for (int j = color; j < nx; j += 3) {
                const double inv_h = 1.0 / steps[j];
                for (int i = 0; i < n; ++i) {
                    if (j > 0)
                        jac.super[j - 1](i, s) = (r_pert.at(i, j - 1) - r_base.at(i, j - 1)) * inv_h;
                    jac.diag[j](i, s) = (r_pert.at(i, j) - r_base.at(i, j)) * inv_h;
                    if (j < nx - 1)
                        jac.sub[j + 1](i, s) = (r_pert.at(i, j + 1) - r_base.at(i, j + 1)) * inv_h;
                }
                w_pert.at(s, j) = w.at(s, j);
            }
        }
    }
}

struct NewtonOutcome {
    bool converged = false;
    int iters = 0;
    double residual = 0.0;
};

NewtonOutcome newton_solve(const ModelSpec& model, const Grid1D& grid, Field& w,
                           const Field& u_prev, const Field& forcing, double tau, double eps,
                           const NewtonParams& params) {
    NewtonOutcome out;
    Field r = implicit_residual(model, grid, w, u_prev, forcing, tau, eps);
    double rnorm = residual_norm(r);
    if (!std::isfinite(rnorm)) return out;
    if (rnorm <= params.abs_tol) {
        out.converged = true;
        out.residual = rnorm;
        return out;
    }

    BlockTridiag jac(model.n, grid.nodes);
    for (int iter = 1; iter <= params.max_iter; ++iter) {
        assemble_jacobian_fd(model, grid, w, u_prev, forcing, tau, eps, r, jac);
        Field delta = r;
        for (double& v : delta.flat()) v = -v;
        if (!solve_block_tridiag(jac, delta)) return out;

        bool accepted = false;
        double alpha = params.damping;
        Field w_trial = w;
        for (int bt = 0; bt <= k_max_backtracks; ++bt) {
            for (int j = 0; j < grid.nodes; ++j)
                for (int i = 0; i < model.n; ++i)
                    w_trial.at(i, j) = w.at(i, j) + alpha * delta.at(i, j);
            Field r_trial = implicit_residual(model, grid, w_trial, u_prev, forcing, tau, eps);
            const double rt = residual_norm(r_trial);
            if (std::isfinite(rt) && (rt < rnorm || rt <= params.abs_tol)) {
                w = w_trial;
                r = std::move(r_trial);
                rnorm = rt;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        out.iters = iter;
        if (!accepted) return out;  // stalled: no descent along the Newton direction
        if (rnorm <= params.abs_tol) {
            out.converged = true;
            out.residual = rnorm;
            return out;
        }
    }
    out.residual = rnorm;
    return out;
}

/// Advance w over an interval of size tau, bisecting the step on Newton
/// failure (the forcing field stays frozen across sub-steps).
bool advance_implicit(const ModelSpec& model, const Grid1D& grid, Field& w,
                      const Field& forcing, double tau, double eps,
                      const NewtonParams& params, int depth, StepReport& report) {
    Field u_prev(model.n, grid.nodes);
    {
        const ConcentrationField u = to_concentration(model, w);
        u_prev = u;
    }
    Field w_next = w;
    const NewtonOutcome outcome =
        newton_solve(model, grid, w_next, u_prev, forcing, tau, eps, params);
    report.newton_iters += outcome.iters;
    if (outcome.converged) {
        report.residual = outcome.residual;
        w = std::move(w_next);
        return true;
    }
    if (depth >= params.max_tau_halvings) return false;
    report.tau_halvings = std::max(report.tau_halvings, depth + 1);
    return advance_implicit(model, grid, w, forcing, 0.5 * tau, eps, params, depth + 1, report) &&
           advance_implicit(model, grid, w, forcing, 0.5 * tau, eps, params, depth + 1, report);
}

}  // namespace

Scheme scheme_from_name(const std::string& name) {
    if (name == "entropy_implicit") return Scheme::EntropyImplicit;
    if (name == "euler_maruyama_ito") return Scheme::EulerMaruyamaIto;
    if (name == "heun_stratonovich") return Scheme::HeunStratonovich;
    throw std::invalid_argument("unknown scheme: " + name);
}

std::string scheme_name(Scheme scheme) {
    switch (scheme) {
        case Scheme::EntropyImplicit: return "entropy_implicit";
        case Scheme::EulerMaruyamaIto: return "euler_maruyama_ito";
        case Scheme::HeunStratonovich: return "heun_stratonovich";
    }
    return "?";
}

std::pair<EntropyField, StepReport> step_entropy_implicit(
    const ModelSpec& model, const Grid1D& grid, const EntropyField& w_prev,
    const Field& forcing, double tau, double epsilon, const NewtonParams& newton) {
    if (!(tau > 0.0)) throw std::invalid_argument("step_entropy_implicit: tau must be positive");
    if (epsilon < 0.0) throw std::invalid_argument("step_entropy_implicit: epsilon must be >= 0");
    if (!(newton.damping > 0.0 && newton.damping <= 1.0))
        throw std::invalid_argument("step_entropy_implicit: damping must lie in (0,1]");

    EntropyField w = w_prev;
    StepReport report;
    const bool ok = advance_implicit(model, grid, w, forcing, tau, epsilon, newton, 0, report);
    report.converged = ok;
    if (ok) {
        const ConcentrationField u = to_concentration(model, w);
        report.violation = max_simplex_violation(u);
    }
    return {std::move(w), report};
}

std::pair<ConcentrationField, StepReport> step_euler_maruyama(
    const ModelSpec& model, const Grid1D& grid, const ConcentrationField& u_prev,
    std::span<const double> dw, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("step_euler_maruyama: tau must be positive");
    const Field flux = divergence_form_flux(model, grid, u_prev);
    ConcentrationField u(model.n, grid.nodes);
    for (int j = 0; j < grid.nodes; ++j) {
        const Vec corr = ito_correction(model, u_prev.node(j));
        const Matrix sig = noise_coeff(model, u_prev.node(j));
        const Vec kick = matvec(sig, dw);
        for (int i = 0; i < model.n; ++i)
            u.at(i, j) = u_prev.at(i, j) + tau * flux.at(i, j) + 0.5 * tau * corr[i] + kick[i];
    }
    StepReport report;
    report.violation = max_simplex_violation(u);
    return {std::move(u), report};
}

std::pair<ConcentrationField, StepReport> step_heun_stratonovich(
    const ModelSpec& model, const Grid1D& grid, const ConcentrationField& u_prev,
    std::span<const double> dw, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("step_heun_stratonovich: tau must be positive");
    const Field flux0 = divergence_form_flux(model, grid, u_prev);

    ConcentrationField pred(model.n, grid.nodes);
    for (int j = 0; j < grid.nodes; ++j) {
        const Matrix sig = noise_coeff(model, u_prev.node(j));
        const Vec kick = matvec(sig, dw);
        for (int i = 0; i < model.n; ++i)
            pred.at(i, j) = u_prev.at(i, j) + tau * flux0.at(i, j) + kick[i];
    }

    const Field flux1 = divergence_form_flux(model, grid, pred);
    ConcentrationField u(model.n, grid.nodes);
    for (int j = 0; j < grid.nodes; ++j) {
        const Matrix sig0 = noise_coeff(model, u_prev.node(j));
        const Matrix sig1 = noise_coeff(model, pred.node(j));
        const Vec kick = matvec(0.5 * (sig0 + sig1), dw);
        for (int i = 0; i < model.n; ++i)
            u.at(i, j) = u_prev.at(i, j) + 0.5 * tau * (flux0.at(i, j) + flux1.at(i, j)) + kick[i];
    }
    StepReport report;
    report.violation = max_simplex_violation(u);
    return {std::move(u), report};
}

namespace {

void record_state(const ModelSpec& model, const Grid1D& grid, const ConcentrationField& u,
                  double t, double dissipation_cum, TrajectoryResult& out) {
    out.times.push_back(t);
    out.entropy.push_back(integrate_entropy(model, grid, u));
    out.dissipation.push_back(dissipation_cum);
    out.mass.push_back(species_mass(grid, u));
    out.violation.push_back(max_simplex_violation(u));
}

bool wants_snapshot(const std::vector<double>& times, double t) {
    for (double s : times)
        if (std::abs(s - t) <= k_time_grid_tol * std::max(1.0, std::abs(s))) return true;
    return false;
}

}  // namespace

TrajectoryResult run_trajectory(const ModelSpec& model, const Grid1D& grid,
                                const SolverConfig& config, const ConcentrationField& initial,
                                const WienerPath* path) {
    if (initial.components() != model.n || initial.nodes() != grid.nodes)
        throw std::invalid_argument("run_trajectory: initial field shape mismatch");
    if (config.delta0 < 0.0)
        throw std::invalid_argument("run_trajectory: delta0 must be >= 0");
    const long steps = checked_ratio(config.horizon, config.tau, "run_trajectory: horizon/tau");
    if (path) {
        if (path->components != model.n)
            throw std::invalid_argument("run_trajectory: path component count mismatch");
        if (std::abs(path->horizon - config.horizon) >
            k_time_grid_tol * std::max(1.0, config.horizon))
            throw std::invalid_argument("run_trajectory: path horizon mismatch");
    }
    std::vector<double> snap_times = config.snapshot_times;
    if (snap_times.empty()) snap_times = {0.0, config.horizon};
    for (double t : snap_times) {
        const double k = t / config.tau;
        if (t < 0.0 || t > config.horizon + k_time_grid_tol ||
            std::abs(k - std::round(k)) > 1e-6)
            throw std::invalid_argument("run_trajectory: snapshot time off the step grid");
    }

    TrajectoryResult out;
    const double eps = config.epsilon_value();
    const double tau = config.tau;

    if (config.scheme == Scheme::EntropyImplicit) {
        // Pull the initial state into the interior so dual variables exist.
        ConcentrationField u0(model.n, grid.nodes);
        for (int j = 0; j < grid.nodes; ++j) {
            std::span<const double> node = initial.node(j);
            const Vec reg = config.delta0 > 0.0 ? regularize(node, config.delta0)
                                                : Vec(node.begin(), node.end());
            if (!(solvent_fraction(reg) > 0.0)) {
                out.status = TrajectoryStatus::StepFailure;
                out.error = "initial state saturates the simplex (no passive fraction left)";
                return out;
            }
            std::copy(reg.begin(), reg.end(), u0.node(j).begin());
        }
        EntropyField w = to_entropy_variables(model, u0);
        ConcentrationField u = to_concentration(model, w);

        long sub_per_interval = 1;
        if (path) sub_per_interval = checked_ratio(path->eta, tau, "run_trajectory: eta/tau");

        double dissipation_cum = 0.0;
        record_state(model, grid, u, 0.0, 0.0, out);
        if (wants_snapshot(snap_times, 0.0)) out.snapshots.emplace_back(0.0, u);

        Field forcing(model.n, grid.nodes);
        for (long k = 0; k < steps; ++k) {
            if (path) {
                const int interval = static_cast<int>(k / sub_per_interval);
                const Vec slope = wong_zakai_slope_at(*path, interval);
                for (int j = 0; j < grid.nodes; ++j) {
                    const Matrix sig = noise_coeff(model, u.node(j));
                    const Vec f = matvec(sig, slope);
                    for (int i = 0; i < model.n; ++i) forcing.at(i, j) = f[i];
                }
            }
            auto [w_next, report] =
                step_entropy_implicit(model, grid, w, forcing, tau, eps, config.newton);
            out.newton_iters.push_back(report.newton_iters);
            out.halvings.push_back(report.tau_halvings);
            if (!report.converged) {
                out.status = TrajectoryStatus::StepFailure;
                out.failed_step = static_cast<int>(k);
                char res[32];
                std::snprintf(res, sizeof(res), "%.3e", report.residual);
                out.error = "newton failed at step " + std::to_string(k) +
                            " (residual " + res + ")";
                return out;
            }
            w = std::move(w_next);
            u = to_concentration(model, w);
            const double t = static_cast<double>(k + 1) * tau;
            dissipation_cum += tau * dissipation_seminorm(grid, u, model.m);
            record_state(model, grid, u, t, dissipation_cum, out);
            if (wants_snapshot(snap_times, t)) out.snapshots.emplace_back(t, u);
        }
        return out;
    }

    // Explicit schemes driven by exact Wiener increments.
    long intervals_per_step = 1;
    if (path) intervals_per_step = checked_ratio(tau, path->eta, "run_trajectory: tau/eta");

    ConcentrationField u = initial;
    double dissipation_cum = 0.0;
    record_state(model, grid, u, 0.0, 0.0, out);
    if (wants_snapshot(snap_times, 0.0)) out.snapshots.emplace_back(0.0, u);

    const Vec zero_dw(static_cast<size_t>(model.n), 0.0);
    for (long k = 0; k < steps; ++k) {
        Vec dw = zero_dw;
        if (path)
            dw = path->increment(static_cast<int>(k * intervals_per_step),
                                 static_cast<int>((k + 1) * intervals_per_step));
        auto [u_next, report] =
            (config.scheme == Scheme::EulerMaruyamaIto)
                ? step_euler_maruyama(model, grid, u, dw, tau)
                : step_heun_stratonovich(model, grid, u, dw, tau);
        bool finite = true;
        for (double v : u_next.flat())
            if (!std::isfinite(v)) { finite = false; break; }
        if (!finite) {
            out.status = TrajectoryStatus::NonFinite;
            out.failed_step = static_cast<int>(k);
            out.error = "state became non-finite at step " + std::to_string(k);
            return out;
        }
        u = std::move(u_next);
        (void)report;
        const double t = static_cast<double>(k + 1) * tau;
        dissipation_cum += tau * dissipation_seminorm(grid, u, model.m);
        record_state(model, grid, u, t, dissipation_cum, out);
        if (wants_snapshot(snap_times, t)) out.snapshots.emplace_back(t, u);
    }
    return out;
}

RunReport run_monte_carlo(const ModelSpec& model, const Grid1D& grid, const SolverConfig& config,
                          const ConcentrationField& initial, int path_count,
                          uint64_t master_seed, int noise_levels, int threads) {
    if (path_count < 1) throw std::invalid_argument("run_monte_carlo: need >= 1 paths");
    if (threads < 1) threads = 1;

    std::vector<TrajectoryResult> results(static_cast<size_t>(path_count));
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int pid = next.fetch_add(1);
            if (pid >= path_count) return;
            const WienerPath path = sample_path(derive_path_seed(master_seed, pid),
                                                config.horizon, noise_levels, model.n);
            results[pid] = run_trajectory(model, grid, config, initial, &path);
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        const int nw = std::min(threads, path_count);
        pool.reserve(static_cast<size_t>(nw));
        for (int i = 0; i < nw; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    RunReport report;
    report.path_count = path_count;
    report.master_seed = master_seed;
    report.grid_nodes = grid.nodes;
    report.tau = config.tau;
    report.eta = config.horizon / static_cast<double>(1 << noise_levels);
    report.scheme = scheme_name(config.scheme);
    report.model = model.name;

    // Fixed-order aggregation over the surviving paths.
    const TrajectoryResult* first_ok = nullptr;
    for (int pid = 0; pid < path_count; ++pid) {
        if (results[pid].ok()) { first_ok = &results[pid]; break; }
    }
    for (int pid = 0; pid < path_count; ++pid) {
        if (!results[pid].ok()) {
            ++report.failed_paths;
            report.failures.push_back("path " + std::to_string(pid) + ": " + results[pid].error);
        }
    }
    if (report.failed_paths * 10 > path_count || first_ok == nullptr) {
        std::string msg = "run_monte_carlo: " + std::to_string(report.failed_paths) + "/" +
                          std::to_string(path_count) + " paths failed";
        if (!report.failures.empty()) msg += " (first: " + report.failures.front() + ")";
        throw std::runtime_error(msg);
    }

    const size_t nt = first_ok->times.size();
    const int n = model.n;
    report.times = first_ok->times;
    report.entropy_mean.assign(nt, 0.0);
    report.entropy_var.assign(nt, 0.0);
    report.entropy_stderr.assign(nt, 0.0);
    report.dissipation_mean.assign(nt, 0.0);
    report.violation_max.assign(nt, 0.0);
    report.mass_mean.assign(nt, Vec(static_cast<size_t>(n), 0.0));

    long iter_total = 0;
    long step_total = 0;
    const int ok_count = path_count - report.failed_paths;
    for (int pid = 0; pid < path_count; ++pid) {
        const TrajectoryResult& r = results[pid];
        if (!r.ok()) continue;
        for (size_t t = 0; t < nt; ++t) {
            report.entropy_mean[t] += r.entropy[t];
            report.dissipation_mean[t] += r.dissipation[t];
            report.violation_max[t] = std::max(report.violation_max[t], r.violation[t]);
            for (int i = 0; i < n; ++i) report.mass_mean[t][i] += r.mass[t][i];
        }
        for (int it : r.newton_iters) {
            iter_total += it;
            report.max_newton_iters = std::max(report.max_newton_iters, it);
        }
        for (int h : r.halvings) report.total_halvings += h;
        step_total += static_cast<long>(r.newton_iters.size());
    }
    const double inv = 1.0 / static_cast<double>(ok_count);
    for (size_t t = 0; t < nt; ++t) {
        report.entropy_mean[t] *= inv;
        report.dissipation_mean[t] *= inv;
        for (int i = 0; i < n; ++i) report.mass_mean[t][i] *= inv;
        report.max_violation = std::max(report.max_violation, report.violation_max[t]);
    }
    if (ok_count > 1) {
        for (int pid = 0; pid < path_count; ++pid) {
            const TrajectoryResult& r = results[pid];
            if (!r.ok()) continue;
            for (size_t t = 0; t < nt; ++t) {
                const double d = r.entropy[t] - report.entropy_mean[t];
                report.entropy_var[t] += d * d;
            }
        }
        for (size_t t = 0; t < nt; ++t) {
            report.entropy_var[t] /= static_cast<double>(ok_count - 1);
            report.entropy_stderr[t] =
                std::sqrt(report.entropy_var[t] / static_cast<double>(ok_count));
        }
    }
    report.mean_newton_iters =
        (step_total > 0) ? static_cast<double>(iter_total) / static_cast<double>(step_total) : 0.0;
    report.entropy_initial = report.entropy_mean.empty() ? 0.0 : report.entropy_mean.front();
    return report;
}

}  // namespace crossdiff

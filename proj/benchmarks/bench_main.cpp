// Microbenchmarks for the hot paths: the divergence-form operator, the
// dual/primal conversions, single steps of each scheme, path sampling, and
// full short trajectories.

#include <benchmark/benchmark.h>

#include <vector>

#include "crossdiff/grid.hpp"
#include "crossdiff/model.hpp"
#include "crossdiff/noise.hpp"
#include "crossdiff/solver.hpp"

namespace {

using namespace crossdiff;

constexpr uint64_t kSeed = 0xbe9c4ull;

void bm_divergence_flux(benchmark::State& state) {
    const int nodes = static_cast<int>(state.range(0));
    ModelSpec model = make_maxwell_stefan(1.0, 2.0, 3.0);
    Grid1D grid(nodes, 1.0);
    ConcentrationField u = make_profile(Profile::SmoothBump, 2, grid);
    for (auto _ : state) {
        Field out = divergence_form_flux(model, grid, u);
        benchmark::DoNotOptimize(out.flat().data());
    }
    state.SetItemsProcessed(state.iterations() * nodes);
}
BENCHMARK(bm_divergence_flux)->Arg(64)->Arg(256)->Arg(1024);

void bm_dual_round_trip(benchmark::State& state) {
    const int nodes = static_cast<int>(state.range(0));
    ModelSpec model = make_maxwell_stefan(1.0, 2.0, 3.0);
    Grid1D grid(nodes, 1.0);
    ConcentrationField u = make_profile(Profile::SmoothBump, 2, grid);
    for (auto _ : state) {
        EntropyField w = to_entropy_variables(model, u);
        ConcentrationField back = to_concentration(model, w);
        benchmark::DoNotOptimize(back.flat().data());
    }
    state.SetItemsProcessed(state.iterations() * nodes);
}
BENCHMARK(bm_dual_round_trip)->Arg(64)->Arg(1024);

void bm_implicit_step(benchmark::State& state) {
    const int nodes = static_cast<int>(state.range(0));
    ModelSpec model = make_maxwell_stefan(1.0, 2.0, 3.0);
    Grid1D grid(nodes, 1.0);
    ConcentrationField u = make_profile(Profile::Step, 2, grid);
    EntropyField w = to_entropy_variables(model, u);
    Field forcing(2, grid.nodes, 0.0);
    NewtonParams newton;
    const double tau = 1.0 / 128.0;
    for (auto _ : state) {
        auto [w_next, report] = step_entropy_implicit(model, grid, w, forcing, tau,
                                                      /*epsilon=*/tau, newton);
        benchmark::DoNotOptimize(report.residual);
    }
    state.SetItemsProcessed(state.iterations() * nodes);
}
BENCHMARK(bm_implicit_step)->Arg(32)->Arg(64)->Arg(128);

void bm_explicit_step(benchmark::State& state) {
    const int nodes = static_cast<int>(state.range(0));
    ModelSpec model = make_maxwell_stefan(1.0, 2.0, 3.0);
    Grid1D grid(nodes, 1.0);
    ConcentrationField u = make_profile(Profile::Step, 2, grid);
    std::vector<double> dw = {0.01, -0.02};
    for (auto _ : state) {
        auto [u_next, report] = step_euler_maruyama(model, grid, u, dw, 1.0 / 1024.0);
        benchmark::DoNotOptimize(u_next.flat().data());
    }
    state.SetItemsProcessed(state.iterations() * nodes);
}
BENCHMARK(bm_explicit_step)->Arg(64)->Arg(1024);

void bm_path_sampling(benchmark::State& state) {
    const int levels = static_cast<int>(state.range(0));
    uint64_t id = 0;
    for (auto _ : state) {
        WienerPath path = sample_path(derive_path_seed(kSeed, id++), 1.0, levels, 2);
        benchmark::DoNotOptimize(path.values.back().data());
    }
    state.SetItemsProcessed(state.iterations() * (1 << levels));
}
BENCHMARK(bm_path_sampling)->Arg(8)->Arg(12)->Arg(16);

void bm_noisy_trajectory(benchmark::State& state) {
    // One implicit path at tau = eta = 2^-6 on a quarter-unit horizon.
    ModelSpec model = make_biofilm(2);
    Grid1D grid(static_cast<int>(state.range(0)), 1.0);
    ConcentrationField u0 = make_profile(Profile::Barycenter, 2, grid);

    SolverConfig config;
    config.scheme = Scheme::EntropyImplicit;
    config.horizon = 0.25;
    config.tau = config.horizon / 16.0;

    uint64_t id = 0;
    for (auto _ : state) {
        WienerPath path = sample_path(derive_path_seed(kSeed, id++), config.horizon, 4, 2);
        TrajectoryResult traj = run_trajectory(model, grid, config, u0, &path);
        benchmark::DoNotOptimize(traj.entropy.back());
    }
}
BENCHMARK(bm_noisy_trajectory)->Arg(33)->Arg(65);

}  // namespace

BENCHMARK_MAIN();

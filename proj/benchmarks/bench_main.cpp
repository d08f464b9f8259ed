#include <benchmark/benchmark.h>

#include "dislab/dynamics.hpp"
#include "dislab/mixture.hpp"
#include "dislab/rng.hpp"
#include "dislab/schedule.hpp"
#include "dislab/solvers.hpp"

using namespace dislab;

namespace {

const GaussianMixture kToy = toy_five_gmm();
const NoiseSchedule kLadder = make_schedule(ScheduleKind::karras, 0.002, 4.0, 100);

void bm_score(benchmark::State& state) {
    RngStream rng = make_stream(1, 0, "bench");
    const Vec x{0.7, -0.3};
    for (auto _ : state) {
        benchmark::DoNotOptimize(score(kToy, 0.8, x));
    }
}
BENCHMARK(bm_score);

void bm_score_hessian(benchmark::State& state) {
    const Vec x{0.7, -0.3};
    for (auto _ : state) {
        benchmark::DoNotOptimize(score_hessian(kToy, 0.8, x));
    }
}
BENCHMARK(bm_score_hessian);

void bm_exact_posterior_logdensity(benchmark::State& state) {
    const Vec x_t{1.0, 0.4};
    const Vec x0{0.95, 0.9};
    for (auto _ : state) {
        benchmark::DoNotOptimize(exact_posterior(kToy, 1.0, x_t).log_density(x0));
    }
}
BENCHMARK(bm_exact_posterior_logdensity);

void bm_pf_ode_solve(benchmark::State& state) {
    const Vec x{1.0, 0.4};
    const auto steps = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_pf_ode(kToy, kLadder, 1.0, x, steps));
    }
}
BENCHMARK(bm_pf_ode_solve)->Arg(80)->Arg(400);

void bm_consistency_jacobian(benchmark::State& state) {
    const ConsistencyFunction cf(kToy, kLadder, 80);
    const Vec x{1.0, 0.4};
    for (auto _ : state) {
        benchmark::DoNotOptimize(consistency_jacobian(cf, 1.0, x));
    }
}
BENCHMARK(bm_consistency_jacobian);

void bm_dps_trajectory(benchmark::State& state) {
    Problem p;
    p.gmm = kToy;
    p.schedule = kLadder;
    Mat a(1, 2);
    a(0, 0) = 1.0;
    p.op = make_linear_operator(a);
    p.target.y = {1.0};
    SolverConfig cfg;
    cfg.solver = SolverKind::dps;
    cfg.zeta = 0.3;
    cfg.seed = 1;
    std::uint64_t run = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_solver(p, cfg, run++));
    }
}
BENCHMARK(bm_dps_trajectory);

}  // namespace

BENCHMARK_MAIN();

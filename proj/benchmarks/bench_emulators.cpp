#include <benchmark/benchmark.h>

#include "rbdo/benchmarks.hpp"
#include "rbdo/problem.hpp"

namespace {

// Constraint-evaluation cost at a fixed design: the semi-analytic emulator
// quantile/pf against the Kriging Monte-Carlo inner loop.

const rbdo::RbdoProblem& buckling() {
  static const rbdo::RbdoProblem p = rbdo::buckling_problem();
  return p;
}

rbdo::SolveResult fit_once(rbdo::EmulatorKind kind) {
  rbdo::SolveOptions opts;
  opts.sqp.max_iter = 1;  // only the fit matters here
  opts.n_mc = 10000;
  return rbdo::solve_rbdo(buckling(), kind, 200, 7, opts);
}

void bench_glam_quantile(benchmark::State& state) {
  static const auto res = fit_once(rbdo::EmulatorKind::glam);
  const Eigen::VectorXd d = Eigen::Vector2d(250.0, 250.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(rbdo::glam_conditional_quantile(*res.emulator.glam, d, 0.05));
}

void bench_spce_pf(benchmark::State& state) {
  static const auto res = fit_once(rbdo::EmulatorKind::spce);
  const Eigen::VectorXd d = Eigen::Vector2d(250.0, 250.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(rbdo::spce_failure_probability(*res.emulator.spce, d));
}

void bench_kriging_mc_quantile(benchmark::State& state) {
  static const auto res = fit_once(rbdo::EmulatorKind::kriging);
  const rbdo::RbdoProblem& p = buckling();
  auto model = res.emulator.kriging;
  auto sampler = [&p](const Eigen::VectorXd& d, int n, rbdo::Rng& rng) {
    return rbdo::sample_inputs(p, d, n, rng);
  };
  auto eval = [&model](const Eigen::MatrixXd& rows) { return model->predict(rows); };
  const Eigen::VectorXd d = Eigen::Vector2d(250.0, 250.0);
  const int n_mc = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(rbdo::mc_quantile(sampler, eval, d, n_mc, 0.05, 11));
}

}  // namespace

BENCHMARK(bench_glam_quantile);
BENCHMARK(bench_spce_pf);
BENCHMARK(bench_kriging_mc_quantile)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

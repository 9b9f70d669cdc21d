#include <benchmark/benchmark.h>

#include <random>

#include "psf/lcp.hpp"
#include "psf/pipeline.hpp"

namespace {

// SPD mixed LCP with alternating free and lower-bounded rows.
psf::MLCPProblem make_problem(Eigen::Index n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd R(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) R(i, j) = normal(rng);
  psf::MLCPProblem p;
  p.H = R * R.transpose() + static_cast<double>(n) * Eigen::MatrixXd::Identity(n, n);
  p.rhs.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) p.rhs[i] = normal(rng);
  p.lower = Eigen::VectorXd::Constant(n, -psf::kInf);
  p.upper = Eigen::VectorXd::Constant(n, psf::kInf);
  for (Eigen::Index i = 1; i < n; i += 2) p.lower[i] = 0.0;
  return p;
}

void BM_SolveDirect(benchmark::State& state) {
  const auto p = make_problem(state.range(0), 1);
  for (auto _ : state) benchmark::DoNotOptimize(psf::solve_direct(p).y.data());
}
BENCHMARK(BM_SolveDirect)->Arg(8)->Arg(32)->Arg(64);

void BM_SolvePgs(benchmark::State& state) {
  const auto p = make_problem(state.range(0), 1);
  for (auto _ : state) benchmark::DoNotOptimize(psf::solve_pgs(p).y.data());
}
BENCHMARK(BM_SolvePgs)->Arg(8)->Arg(32)->Arg(64);

// One transition of the handover while both arms hold the box.
void BM_HandoverStep(benchmark::State& state) {
  const psf::HandoverConfig cfg;
  const psf::WorldParams theta{0.25, 0.5};
  const psf::Trajectory t = psf::dense_rollout(cfg, theta);
  const psf::HandoverWorld world = psf::build_handover(theta, cfg);
  const std::size_t k = 480;
  for (auto _ : state) {
    benchmark::DoNotOptimize(psf::step(world.system, t.states[k], t.controls[k], theta, cfg.dt).x.data());
  }
}
BENCHMARK(BM_HandoverStep);

void BM_DenseRollout(benchmark::State& state) {
  const psf::HandoverConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(psf::dense_rollout(cfg, {0.25, 0.5}).fos.data());
}
BENCHMARK(BM_DenseRollout)->Unit(benchmark::kMillisecond);

void BM_SparseEvaluate(benchmark::State& state) {
  const psf::DistributionSpec spec;
  const psf::HandoverConfig cfg;
  const psf::WorldParams theta = psf::nominal(spec);
  const psf::Trajectory t = psf::dense_rollout(cfg, theta);
  const psf::HandoverWorld world = psf::build_handover(theta, cfg);
  const auto events = psf::select_critical(t);
  const psf::ParamGrid grid = psf::make_grid(spec, static_cast<int>(state.range(0)), static_cast<int>(state.range(0)));
  psf::SparseOptions opts;
  opts.workers = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(psf::sparse_evaluate(world, t, events.back(), grid, opts).combined.data());
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(grid.size()));
}
BENCHMARK(BM_SparseEvaluate)->Args({16, 1})->Args({48, 1})->Args({48, 4})->UseRealTime()->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

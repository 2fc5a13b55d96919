// Copyright (c) 2026 The gradperm authors
// SPDX-License-Identifier: Apache-2.0
//
// Microbenchmarks for the hot paths of the permutation loop: training one
// replicate network, evaluating input gradients, and the repeated smooth
// fits. Run: ./benchmarks/gradperm_bench
#include <benchmark/benchmark.h>

#include "gradperm/network.hpp"
#include "gradperm/permtest.hpp"
#include "gradperm/rng.hpp"
#include "gradperm/simgen.hpp"
#include "gradperm/splines.hpp"

using namespace gradperm;

namespace {

NetworkConfig replicate_config(int hidden, int epochs) {
  NetworkConfig config;
  config.hidden_sizes = {hidden};
  config.epochs = epochs;
  config.initial_learning_rate = 0.1;
  config.lr_decay_per_epoch = 0.01;
  config.l2_lambda = 1e-3;
  config.seed = 1;
  return config;
}

}  // namespace

static void BM_train(benchmark::State& state) {
  const Dataset data = gen_nonlin5(static_cast<int>(state.range(0)), 7);
  const NetworkConfig config =
      replicate_config(static_cast<int>(state.range(1)), 50);
  for (auto _ : state) {
    const TrainResult result = train(init_network(5, config), data, config);
    benchmark::DoNotOptimize(result.network.output_bias);
  }
}
BENCHMARK(BM_train)->Args({200, 20})->Args({300, 25})->Args({500, 40})
    ->Unit(benchmark::kMillisecond);

static void BM_input_gradients(benchmark::State& state) {
  const Dataset data = gen_nonlin5(static_cast<int>(state.range(0)), 8);
  const NetworkConfig config = replicate_config(25, 10);
  const Network net = train(init_network(5, config), data, config).network;
  for (auto _ : state) {
    const Eigen::VectorXd grads = input_gradients(net, data.X, 1);
    benchmark::DoNotOptimize(grads.sum());
  }
}
BENCHMARK(BM_input_gradients)->Arg(200)->Arg(500)->Unit(benchmark::kMicrosecond);

static void BM_smooth_solver_fit(benchmark::State& state) {
  RandomStream stream(9);
  const int n = static_cast<int>(state.range(0));
  Eigen::VectorXd t(n), r(n);
  for (int i = 0; i < n; ++i) {
    t(i) = stream.normal();
    r(i) = std::sin(t(i)) + stream.normal(0.0, 0.1);
  }
  const SmoothSolver solver(make_basis(t, 10), t, SmoothingPolicy{});
  for (auto _ : state) {
    const SmoothFit fit = solver.fit(r);
    benchmark::DoNotOptimize(nonlin_statistic(fit));
  }
}
BENCHMARK(BM_smooth_solver_fit)->Arg(200)->Arg(500)->Unit(benchmark::kMicrosecond);

static void BM_make_basis(benchmark::State& state) {
  RandomStream stream(10);
  Eigen::VectorXd sample(500);
  for (int i = 0; i < 500; ++i) sample(i) = stream.normal();
  for (auto _ : state) {
    const SplineBasis basis = make_basis(sample, 10);
    benchmark::DoNotOptimize(basis.penalty_matrix.sum());
  }
}
BENCHMARK(BM_make_basis)->Unit(benchmark::kMicrosecond);

static void BM_permute_column(benchmark::State& state) {
  const Dataset data = gen_nonlin5(500, 11);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    const Eigen::MatrixXd permuted = permute_column(data.X, 2, seed++);
    benchmark::DoNotOptimize(permuted(0, 2));
  }
}
BENCHMARK(BM_permute_column)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();

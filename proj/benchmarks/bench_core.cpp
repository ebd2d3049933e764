#include <benchmark/benchmark.h>

#include <random>

#include "rllg/mlp.hpp"
#include "rllg/replay.hpp"
#include "rllg/sac.hpp"
#include "rllg/strategies.hpp"

namespace {

rllg::Matrix random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  rllg::Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

void BM_ForwardBatch(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  rllg::Network net(rllg::mlp_spec({6, width, width, 1}, rllg::Activation::kReLU,
                                   rllg::HeadKind::kLinear),
                    1);
  std::mt19937_64 rng(2);
  const rllg::Matrix x = random_matrix(256, 6, rng);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x));
}
BENCHMARK(BM_ForwardBatch)->Arg(32)->Arg(64);

void BM_ForwardBackwardBatch(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  rllg::Network net(rllg::mlp_spec({6, width, width, 1}, rllg::Activation::kReLU,
                                   rllg::HeadKind::kLinear),
                    1);
  std::mt19937_64 rng(2);
  const rllg::Matrix x = random_matrix(256, 6, rng);
  const rllg::Matrix u = random_matrix(256, 1, rng);
  for (auto _ : state) {
    net.forward(x);
    benchmark::DoNotOptimize(net.backward(u));
    net.zero_grad();
  }
}
BENCHMARK(BM_ForwardBackwardBatch)->Arg(32)->Arg(64);

void BM_EnvStep(benchmark::State& state) {
  auto env = rllg::make_env("safe-cartpole-swingup");
  env->reset(1);
  const std::vector<double> a = {0.3};
  std::int64_t steps = 0;
  for (auto _ : state) {
    rllg::StepResult sr = env->step(a);
    if (sr.terminal) env->reset(++steps);
  }
}
BENCHMARK(BM_EnvStep);

void BM_SacUpdateIteration(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  rllg::SacConfig cfg;
  cfg.hidden = {width, width};
  rllg::SacAgent agent(5, 1, cfg, 3);
  rllg::ReplayBuffer buffer(10000);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    rllg::Transition t;
    t.s = {n(rng), n(rng), n(rng), n(rng), n(rng)};
    t.a = {std::tanh(n(rng))};
    t.r = n(rng);
    t.s_next = {n(rng), n(rng), n(rng), n(rng), n(rng)};
    t.done = false;
    buffer.push(std::move(t));
  }
  rllg::TargetPolicyHook hook = [&](const rllg::Matrix& s_next, int) {
    return rllg::policy_hook(agent, s_next, rng);
  };
  for (auto _ : state) {
    const auto idx = buffer.sample_indices(256, rng);
    rllg::Batch batch = rllg::assemble_batch(buffer, idx);
    rllg::ape_update(agent, batch, hook, 0);
    rllg::api_update(agent, batch, rng);
    rllg::alpha_update(agent, batch, rng);
  }
}
BENCHMARK(BM_SacUpdateIteration)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

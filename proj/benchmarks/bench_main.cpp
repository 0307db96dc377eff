#include <benchmark/benchmark.h>

#include "eamnet/data.hpp"
#include "eamnet/eia.hpp"
#include "eamnet/losses.hpp"
#include "eamnet/metrics.hpp"
#include "eamnet/network.hpp"
#include "eamnet/ops.hpp"
#include "eamnet/rng.hpp"

using namespace eamnet;

namespace {

Tensor uniform(Shape s, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  Tensor t(s);
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

void BM_Conv3x3Forward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const int hw = static_cast<int>(state.range(1));
  const Var x(uniform({1, c, hw, hw}, 1));
  const Var w(uniform({c, c, 3, 3}, 2));
  NoGradGuard guard;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ops::conv2d(x, w, Var(), {1, 1, 1}).value().data());
  }
  state.counters["GFLOP"] = benchmark::Counter(2.0 * c * c * 9 * hw * hw / 1e9,
                                                 benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_Conv3x3Forward)->Args({64, 16})->Args({64, 48})->Args({64, 96})->Unit(benchmark::kMillisecond);

void BM_Conv3x3Backward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const int hw = static_cast<int>(state.range(1));
  const Var x(uniform({1, c, hw, hw}, 1), true);
  const Var w(uniform({c, c, 3, 3}, 2), true);
  for (auto _ : state) {
    ops::sum(ops::conv2d(x, w, Var(), {1, 1, 1})).backward();
  }
}
BENCHMARK(BM_Conv3x3Backward)->Args({64, 16})->Args({64, 48})->Unit(benchmark::kMillisecond);

void BM_EiaForward(benchmark::State& state) {
  const int hw = static_cast<int>(state.range(0));
  ParamStore p;
  EiaModule eia(p, "eia", EiaConfig{64, {1, 3, 5}, 4});
  p.randomize(3);
  const Var f(uniform({1, 64, hw, hw}, 4));
  const Var s(uniform({1, 64, hw / 2, hw / 2}, 5));
  const Var e(uniform({1, 64, hw, hw}, 6));
  NoGradGuard guard;
  for (auto _ : state) {
    benchmark::DoNotOptimize(eia(f, s, e, Mode::kEval).value().data());
  }
}
BENCHMARK(BM_EiaForward)->Arg(16)->Arg(48)->Unit(benchmark::kMillisecond);

void BM_ToyTrainStep(benchmark::State& state) {
  ModelConfig cfg = ModelConfig::toy();
  cfg.input_size = 64;
  ParamStore p = init_params(cfg, 1);
  EamNet net(cfg, p);
  const Tensor image = uniform({8, 3, 64, 64}, 7, 0.0, 1.0);
  Tensor mask({8, 1, 64, 64});
  for (int n = 0; n < 8; ++n)
    for (int y = 20; y < 44; ++y)
      for (int x = 16; x < 40; ++x) mask.at(n, 0, y, x) = 1.0;
  const Tensor edge = edge_from_mask(mask, 2);
  const LossConfig loss;
  for (auto _ : state) {
    const PredictionSet preds = net.forward(Var(image), Mode::kTrain);
    total_loss(preds, mask, edge, loss).total.backward();
    p.zero_grad();
  }
}
BENCHMARK(BM_ToyTrainStep)->Unit(benchmark::kMillisecond)->Iterations(3);

void BM_EvaluatePair(benchmark::State& state) {
  const int hw = static_cast<int>(state.range(0));
  const Tensor pred = uniform({1, 1, hw, hw}, 8, 0.0, 1.0);
  Tensor gt({1, 1, hw, hw});
  for (int y = hw / 4; y < 3 * hw / 4; ++y)
    for (int x = hw / 3; x < 2 * hw / 3; ++x) gt.at(0, 0, y, x) = 1.0;
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_pair(pred, gt).s_alpha);
}
BENCHMARK(BM_EvaluatePair)->Arg(64)->Arg(384)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include <random>

#include "spcnn/data.hpp"
#include "spcnn/edge.hpp"
#include "spcnn/loss.hpp"
#include "spcnn/network.hpp"
#include "spcnn/shape_prior.hpp"
#include "spcnn/tensor_ops.hpp"

namespace {

using namespace spcnn;

Tensor random_tensor(Shape s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor t(s);
  for (double& v : t.data()) v = u(rng);
  return t;
}

void BM_Conv2d(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto hw = static_cast<std::size_t>(state.range(1));
  const Tensor x = random_tensor({1, c, hw, hw}, 1);
  const Tensor k = random_tensor({c, c, 3, 3}, 2);
  const std::vector<double> b(c, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_same(x, k, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c * c * 9 * hw * hw));
}
BENCHMARK(BM_Conv2d)->Args({16, 40})->Args({64, 40})->Args({64, 128});

void BM_Conv2dBackward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const Tensor x = random_tensor({1, c, 40, 40}, 1);
  const Tensor k = random_tensor({c, c, 3, 3}, 2);
  const Tensor up = random_tensor({1, c, 40, 40}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_same_backward(x, k, up));
}
BENCHMARK(BM_Conv2dBackward)->Arg(16)->Arg(64);

void BM_MaxPool(benchmark::State& state) {
  const auto p = static_cast<std::size_t>(state.range(0));
  const Tensor y = random_tensor({1, 1, 128, 128}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(maxpool_same_stride1(y, p));
}
BENCHMARK(BM_MaxPool)->Arg(3)->Arg(11);

void BM_PriorTerm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const ShapeSet shapes = generate_shape_set(0, n, 20);
  const Tensor y = random_tensor({1, 1, 40, 40}, 5);
  Tensor edges = random_tensor({1, 1, 40, 40}, 6);
  for (double& v : edges.data()) v = v > 0.8 ? 1.0 : 0.0;
  for (auto _ : state) benchmark::DoNotOptimize(prior_term(y, edges, shapes));
}
BENCHMARK(BM_PriorTerm)->Arg(8)->Arg(64);

void BM_Canny(benchmark::State& state) {
  SyntheticParams sp;
  sp.count = 1;
  sp.image_size = static_cast<std::size_t>(state.range(0));
  const Tensor img = gen_synthetic(sp).front().luminance;
  for (auto _ : state) benchmark::DoNotOptimize(canny(img));
}
BENCHMARK(BM_Canny)->Arg(128)->Arg(512);

void BM_Forward(benchmark::State& state) {
  const auto hw = static_cast<std::size_t>(state.range(0));
  const ModelParams p = init_params(1);
  const Tensor x = random_tensor({1, 1, hw, hw}, 7);
  for (auto _ : state) benchmark::DoNotOptimize(predict(p, x));
}
BENCHMARK(BM_Forward)->Arg(40)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

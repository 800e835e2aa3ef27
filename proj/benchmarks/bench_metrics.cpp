#include <benchmark/benchmark.h>

#include "rgan/feature_space.hpp"
#include "rgan/metrics.hpp"
#include "rgan/rng.hpp"

using namespace rgan;

namespace {

Tensor random_image(Index side, uint64_t seed) {
  Tensor t({3, side, side});
  Rng rng(seed);
  for (Index i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-1.0, 1.0);
  return t;
}

void MsSsim(benchmark::State& state) {
  const Index side = state.range(0);
  Tensor a = random_image(side, 1), b = random_image(side, 2);
  for (auto _ : state) {
    double v = metrics::ms_ssim(a, b);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(MsSsim)->Arg(32)->Arg(64);

void FidEigh(benchmark::State& state) {
  const Index d = state.range(0);
  Rng rng(5);
  MatrixXd raw_a(4 * d, d), raw_b(4 * d, d);
  for (Index i = 0; i < raw_a.rows(); ++i)
    for (Index j = 0; j < d; ++j) {
      raw_a(i, j) = rng.normal();
      raw_b(i, j) = rng.normal() * 1.5 + 0.2;
    }
  auto sa = features::compute_feature_stats(raw_a);
  auto sb = features::compute_feature_stats(raw_b);
  for (auto _ : state) {
    double v = metrics::fid(sa, sb);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(FidEigh)->Arg(64)->Arg(256);

}  // namespace

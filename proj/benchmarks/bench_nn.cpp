#include <benchmark/benchmark.h>

#include "rgan/models.hpp"
#include "rgan/rng.hpp"

using namespace rgan;

namespace {

Tensor random_batch(Index n, Index c, Index h, Index w, uint64_t seed) {
  Tensor t({n, c, h, w});
  Rng rng(seed);
  for (Index i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-1.0, 1.0);
  return t;
}

void GeneratorForward(benchmark::State& state) {
  const Index base = state.range(0);
  Rng rng(1);
  auto g = models::build_generator({100, models::LatentDistribution::uniform}, 32,
                                   {base}, rng);
  Tensor z = random_batch(64, 100, 1, 1, 2).reshaped({64, 100});
  for (auto _ : state) {
    Tensor out = g.generate(z, true);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(GeneratorForward)->Arg(12)->Arg(16)->Arg(32);

void DiscriminatorForwardBackward(benchmark::State& state) {
  const Index base = state.range(0);
  Rng rng(3);
  auto d = models::build_image_discriminator(32, {base}, rng);
  Tensor x = random_batch(64, 3, 32, 32, 4);
  for (auto _ : state) {
    Tensor p = d.discriminate(x, true);
    Tensor g(p.shape());
    g.fill(1.0 / 64.0);
    Tensor gx = d.net.backward(g);
    benchmark::DoNotOptimize(gx.data());
  }
}
BENCHMARK(DiscriminatorForwardBackward)->Arg(12)->Arg(16)->Arg(32);

}  // namespace

#include <benchmark/benchmark.h>

#include <filesystem>

#include "rgan/trainer.hpp"

using namespace rgan;

namespace {

// End-to-end step cost at desk scale; the AE checkpoint is built once.
void TrainStep(benchmark::State& state) {
  namespace fs = std::filesystem;
  const Index base = state.range(0);

  data::SyntheticSpec spec;
  spec.n_per_domain = 256;
  spec.image_size = 32;
  spec.seed = 1;
  auto [dx, dy] = data::generate_synthetic_pair(spec);

  features::AeTrainConfig ae_cfg;
  ae_cfg.image_size = 32;
  ae_cfg.base_width = 16;
  ae_cfg.feature_dim = 64;
  ae_cfg.steps = 0;
  auto pre = features::pretrain_autoencoder(dx, dy, ae_cfg);
  const fs::path ae_path = fs::temp_directory_path() / "rgan_bench_ae.ckpt";
  features::save_ae_checkpoint({pre.encoder, pre.decoder, ae_cfg.noise, 0}, ae_path);

  train::ExperimentConfig cfg;
  cfg.mode = train::Mode::resembled;
  cfg.image_size = 32;
  cfg.batch_size = 64;
  cfg.iterations = 1;
  cfg.dataset.kind = "synthetic";
  cfg.dataset.synthetic = spec;
  cfg.ae_checkpoint = ae_path.string();
  cfg.gen_width.base = base;
  cfg.disc_width.base = base;
  train::Trainer trainer(cfg);

  data::Batch bx, by;
  Tensor z;
  for (auto _ : state) {
    trainer.next_batches(bx, by, z);
    auto losses = trainer.train_step(bx, by, z);
    benchmark::DoNotOptimize(losses.total_g);
  }
  fs::remove(ae_path);
}
BENCHMARK(TrainStep)->Arg(12)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

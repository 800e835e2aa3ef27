#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "rgan/config_io.hpp"
#include "rgan/trainer.hpp"
#include "test_util.hpp"

using namespace rgan;
using namespace test_util;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  fs::path dir;
  fs::path ae_path;
  train::ExperimentConfig cfg;

  explicit Fixture(const char* name, train::Mode mode = train::Mode::resembled) {
    dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);

    data::SyntheticSpec spec;
    spec.n_per_domain = 48;
    spec.image_size = 32;
    spec.seed = 11;

    cfg.mode = mode;
    cfg.latent = {32, models::LatentDistribution::uniform};
    cfg.image_size = 32;
    cfg.batch_size = 8;
    cfg.iterations = 4;
    cfg.seed = 21;
    cfg.dataset.kind = "synthetic";
    cfg.dataset.synthetic = spec;
    cfg.gen_width.base = 8;
    cfg.disc_width.base = 8;
    cfg.log_every = 2;

    if (mode != train::Mode::cogan) {
      auto [dx, dy] = data::generate_synthetic_pair(spec);
      features::AeTrainConfig ae_cfg;
      ae_cfg.image_size = 32;
      ae_cfg.base_width = 8;
      ae_cfg.feature_dim = 16;
      ae_cfg.steps = 30;
      ae_cfg.batch_size = 8;
      ae_cfg.seed = 3;
      auto pre = features::pretrain_autoencoder(dx, dy, ae_cfg);
      ae_path = dir / "ae.ckpt";
      features::save_ae_checkpoint({pre.encoder, pre.decoder, ae_cfg.noise, 0}, ae_path);
      cfg.ae_checkpoint = ae_path.string();
    }
  }

  ~Fixture() { fs::remove_all(dir); }
};

uint64_t params_checksum(const std::vector<nn::Param*>& params) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const nn::Param* p : params)
    h = fnv1a64(p->value.data(), static_cast<size_t>(p->value.numel()) * sizeof(double), h);
  return h;
}

std::vector<uint8_t> checkpoint_bytes(const train::Trainer& t) {
  const fs::path tmp = fs::temp_directory_path() / "rgan_test_ckpt_probe.ckpt";
  t.save_checkpoint(tmp);
  std::ifstream in(tmp, std::ios::binary);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  fs::remove(tmp);
  return bytes;
}

}  // namespace

TEST_CASE("phase isolation: each phase touches only its own parameters") {
  Fixture fx("rgan_t_phase");
  train::Trainer trainer(fx.cfg);

  data::Batch bx, by;
  Tensor z;
  trainer.next_batches(bx, by, z);

  const auto g_params = trainer.state().bundle.generator_params();
  const auto d_params = trainer.state().bundle.discriminator_params();
  const uint64_t g0 = params_checksum(g_params);
  const uint64_t d0 = params_checksum(d_params);
  const uint64_t e0 = trainer.encoder_checksum();

  objectives::LossBreakdown losses;
  trainer.discriminator_phase(bx, by, z, losses);
  CHECK(params_checksum(g_params) == g0);       // generators untouched
  const uint64_t d1 = params_checksum(d_params);
  CHECK(d1 != d0);                              // discriminators stepped
  CHECK(trainer.encoder_checksum() == e0);

  trainer.generator_phase(z, losses);
  CHECK(params_checksum(d_params) == d1);       // discriminators untouched
  CHECK(params_checksum(g_params) != g0);       // generators stepped
  CHECK(trainer.encoder_checksum() == e0);
}

TEST_CASE("encoder stays bit-identical over 100 training steps") {
  Fixture fx("rgan_t_frozen");
  fx.cfg.iterations = 100;
  train::Trainer trainer(fx.cfg);
  const uint64_t e0 = trainer.encoder_checksum();

  data::Batch bx, by;
  Tensor z;
  for (int i = 0; i < 100; ++i) {
    trainer.next_batches(bx, by, z);
    trainer.train_step(bx, by, z);
  }
  CHECK(trainer.encoder_checksum() == e0);
  CHECK(trainer.state().iteration == 100);
}

TEST_CASE("iterations=0 keeps initialization and writes an empty metrics log") {
  Fixture fx("rgan_t_zero");
  fx.cfg.iterations = 0;
  train::Trainer trainer(fx.cfg);
  const uint64_t g0 = params_checksum(trainer.state().bundle.generator_params());

  const fs::path run_dir = fx.dir / "run";
  const fs::path final_ckpt = trainer.run(run_dir);
  CHECK(fs::exists(final_ckpt));
  CHECK(params_checksum(trainer.state().bundle.generator_params()) == g0);

  std::ifstream log(run_dir / "logs" / "metrics.jsonl");
  std::string content((std::istreambuf_iterator<char>(log)),
                      std::istreambuf_iterator<char>());
  CHECK(content.empty());
  CHECK(fs::exists(run_dir / "config.json"));
}

TEST_CASE("same config and seed give bit-identical training") {
  Fixture fx("rgan_t_det");
  auto run_once = [&] {
    train::Trainer trainer(fx.cfg);
    data::Batch bx, by;
    Tensor z;
    for (int i = 0; i < 3; ++i) {
      trainer.next_batches(bx, by, z);
      trainer.train_step(bx, by, z);
    }
    return checkpoint_bytes(trainer);
  };
  CHECK(run_once() == run_once());
}

TEST_CASE("checkpoint round trip is byte-exact and resume matches uninterrupted") {
  Fixture fx("rgan_t_resume");
  fx.cfg.iterations = 6;

  // uninterrupted run to 6, with a snapshot at 3
  train::Trainer full(fx.cfg);
  data::Batch bx, by;
  Tensor z;
  fs::path snap = fx.dir / "snap.ckpt";
  for (int i = 0; i < 6; ++i) {
    if (i == 3) full.save_checkpoint(snap);
    full.next_batches(bx, by, z);
    full.train_step(bx, by, z);
  }
  const auto full_bytes = checkpoint_bytes(full);

  // save -> load -> save gives identical bytes
  {
    train::Trainer reloaded(fx.cfg, snap);
    const fs::path snap2 = fx.dir / "snap2.ckpt";
    reloaded.save_checkpoint(snap2);
    std::ifstream a(snap, std::ios::binary), b(snap2, std::ios::binary);
    std::vector<char> ba((std::istreambuf_iterator<char>(a)),
                         std::istreambuf_iterator<char>());
    std::vector<char> bb((std::istreambuf_iterator<char>(b)),
                         std::istreambuf_iterator<char>());
    CHECK(ba == bb);
  }

  // resume from 3 and train to 6: identical to the uninterrupted run
  train::Trainer resumed(fx.cfg, snap);
  CHECK(resumed.state().iteration == 3);
  for (int i = 3; i < 6; ++i) {
    resumed.next_batches(bx, by, z);
    resumed.train_step(bx, by, z);
  }
  CHECK(checkpoint_bytes(resumed) == full_bytes);
}

TEST_CASE("checkpoints refuse a mismatched AE dependency") {
  Fixture fx("rgan_t_aedep");
  train::Trainer trainer(fx.cfg);
  const fs::path ckpt = fx.dir / "t.ckpt";
  trainer.save_checkpoint(ckpt);

  // loading with the right hash works
  const uint64_t good = features::load_ae_checkpoint(fx.ae_path).hash;
  CHECK_NOTHROW(train::load_checkpoint(ckpt, good));

  // a different AE hash is refused with a dependency error
  try {
    train::load_checkpoint(ckpt, good ^ 0x1234);
    FAIL("expected dependency error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::dependency);
  }
}

TEST_CASE("resume under a different config is refused") {
  Fixture fx("rgan_t_cfgmismatch");
  train::Trainer trainer(fx.cfg);
  const fs::path ckpt = fx.dir / "t.ckpt";
  trainer.save_checkpoint(ckpt);

  train::ExperimentConfig other = fx.cfg;
  other.batch_size = 16;
  try {
    train::Trainer bad(other, ckpt);
    FAIL("expected config error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::config);
  }
}

TEST_CASE("generator update direction is a descent direction of its objective") {
  Fixture fx("rgan_t_descent");
  train::Trainer trainer(fx.cfg);

  data::Batch bx, by;
  Tensor z;
  // a few regular steps so moments are warm
  for (int i = 0; i < 2; ++i) {
    trainer.next_batches(bx, by, z);
    trainer.train_step(bx, by, z);
  }

  trainer.next_batches(bx, by, z);
  objectives::LossBreakdown losses;
  trainer.discriminator_phase(bx, by, z, losses);

  const auto g_params = trainer.state().bundle.generator_params();
  const VectorXd theta0 = nn::flatten_params(g_params);
  trainer.generator_phase(z, losses);
  const VectorXd theta1 = nn::flatten_params(g_params);
  const VectorXd dir = theta1 - theta0;
  REQUIRE(dir.norm() > 0.0);

  // central difference along the applied update direction, frozen batch
  nn::unflatten_params(g_params, theta0 + dir);
  const double f_plus = trainer.generator_objective(z);
  nn::unflatten_params(g_params, theta0 - dir);
  const double f_minus = trainer.generator_objective(z);
  nn::unflatten_params(g_params, theta1);

  CHECK(f_plus - f_minus < 0.0);
}

TEST_CASE("cogan mode trains without an AE and keeps ties at checkpoints") {
  Fixture fx("rgan_t_cogan", train::Mode::cogan);
  fx.cfg.iterations = 100;
  train::Trainer trainer(fx.cfg);

  data::Batch bx, by;
  Tensor z;
  for (int i = 0; i < 100; ++i) {
    trainer.next_batches(bx, by, z);
    auto losses = trainer.train_step(bx, by, z);
    CHECK(losses.d_xf == 0.0);
    CHECK(losses.fc == 0.0);
  }

  const auto& b = trainer.state().bundle;
  const auto& gx = b.gen_x.net.layers();
  const auto& gy = b.gen_y.net.layers();
  for (Index idx : b.tying.generator_shared)
    CHECK(models::layer_params_checksum(*gx[idx]) ==
          models::layer_params_checksum(*gy[idx]));
  const auto& dx = b.disc_x.net.layers();
  const auto& dy = b.disc_y.net.layers();
  for (Index idx : b.tying.discriminator_shared)
    CHECK(models::layer_params_checksum(*dx[idx]) ==
          models::layer_params_checksum(*dy[idx]));

  // checkpoint round trip preserves aliasing
  const fs::path ckpt = fx.dir / "cogan.ckpt";
  trainer.save_checkpoint(ckpt);
  auto loaded = train::load_checkpoint(ckpt);
  const auto& lgx = loaded.bundle.gen_x.net.layers();
  const auto& lgy = loaded.bundle.gen_y.net.layers();
  for (Index idx : loaded.bundle.tying.generator_shared)
    CHECK(lgx[idx].get() == lgy[idx].get());
}

TEST_CASE("resembled mode requires an AE checkpoint") {
  Fixture fx("rgan_t_needae");
  fx.cfg.ae_checkpoint.clear();
  CHECK_THROWS_AS(train::Trainer{fx.cfg}, Error);
}

TEST_CASE("non-finite loss aborts with a diagnostic snapshot") {
  Fixture fx("rgan_t_blowup");
  fx.cfg.iterations = 50;
  fx.cfg.optimizer.lr = 1e200;  // guaranteed overflow within a few steps
  train::Trainer trainer(fx.cfg);

  try {
    trainer.run(fx.dir / "run");
    FAIL("expected training error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::training);
    // a diagnostic snapshot was written next to the regular checkpoints
    bool found = false;
    for (const auto& entry : fs::directory_iterator(fx.dir / "run" / "checkpoints"))
      if (entry.path().filename().string().rfind("diagnostic_", 0) == 0) found = true;
    CHECK(found);
  }
}

TEST_CASE("the 64x64 ladder trains end to end") {
  const fs::path dir = fs::temp_directory_path() / "rgan_t_64";
  fs::remove_all(dir);
  fs::create_directories(dir);

  data::SyntheticSpec spec;
  spec.n_per_domain = 16;
  spec.image_size = 64;
  spec.seed = 71;
  auto [dx, dy] = data::generate_synthetic_pair(spec);

  features::AeTrainConfig ae_cfg;
  ae_cfg.image_size = 64;
  ae_cfg.base_width = 4;
  ae_cfg.feature_dim = 32;
  ae_cfg.steps = 5;
  ae_cfg.batch_size = 4;
  ae_cfg.seed = 72;
  auto pre = features::pretrain_autoencoder(dx, dy, ae_cfg);
  const fs::path ae_path = dir / "ae64.ckpt";
  features::save_ae_checkpoint({pre.encoder, pre.decoder, ae_cfg.noise, 0}, ae_path);

  train::ExperimentConfig cfg;
  cfg.mode = train::Mode::resembled;
  cfg.latent = {16, models::LatentDistribution::uniform};
  cfg.image_size = 64;
  cfg.batch_size = 4;
  cfg.iterations = 2;
  cfg.seed = 73;
  cfg.dataset.kind = "synthetic";
  cfg.dataset.synthetic = spec;
  cfg.ae_checkpoint = ae_path.string();
  cfg.gen_width.base = 4;
  cfg.disc_width.base = 4;

  train::Trainer trainer(cfg);
  data::Batch bx, by;
  Tensor z;
  for (int i = 0; i < 2; ++i) {
    trainer.next_batches(bx, by, z);
    auto losses = trainer.train_step(bx, by, z);
    CHECK(std::isfinite(losses.total_g));
  }
  Tensor sample = trainer.state().bundle.gen_x.generate(z, false);
  CHECK(sample.shape() == std::vector<Index>{4, 3, 64, 64});
  fs::remove_all(dir);
}

TEST_CASE("run() writes logs, checkpoints and a config copy") {
  Fixture fx("rgan_t_run");
  fx.cfg.iterations = 4;
  fx.cfg.log_every = 2;
  fx.cfg.checkpoint_every = 2;
  fx.cfg.mapper_steps = 10;
  train::Trainer trainer(fx.cfg);
  const fs::path run_dir = fx.dir / "run";
  const fs::path final_ckpt = trainer.run(run_dir);

  CHECK(fs::exists(run_dir / "config.json"));
  CHECK(fs::exists(run_dir / "checkpoints" / "iter_2.ckpt"));
  CHECK(fs::exists(final_ckpt));

  // config copy parses back to the same hash
  auto parsed = load_experiment_config(run_dir / "config.json");
  CHECK(parsed.hash() == fx.cfg.hash());

  // metrics.jsonl has one record per cadence with the documented fields
  std::ifstream log(run_dir / "logs" / "metrics.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) {
    ++lines;
    CHECK(line.find("\"iteration\"") != std::string::npos);
    CHECK(line.find("\"total_d\"") != std::string::npos);
    CHECK(line.find("\"total_g\"") != std::string::npos);
    CHECK(line.find("\"fc\"") != std::string::npos);
    CHECK(line.find("\"covariance_distance\"") != std::string::npos);
    CHECK(line.find("\"wallclock\"") != std::string::npos);
  }
  CHECK(lines == 2);

  // the mapper was trained and persisted
  auto loaded = train::load_checkpoint(final_ckpt);
  CHECK(loaded.bundle.mapper.has_value());
}

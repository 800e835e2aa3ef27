#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "rgan/data.hpp"
#include "rgan/feature_space.hpp"
#include "rgan/models.hpp"
#include "rgan/objectives.hpp"

namespace rgan::train {

enum class Mode { resembled, cogan, ablation_omega0 };

const char* mode_name(Mode m);
Mode mode_from_name(const std::string& s);

struct OptimizerConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  // Relative discriminator learning rate (d uses lr * d_lr_scale). The
  // default keeps one shared rate; desk-scale runs slow the discriminators
  // down to keep the minimax game balanced.
  double d_lr_scale = 1.0;
};

// Where training data comes from. "synthetic" renders the pair in memory
// from `synthetic`; "dirs" loads image folders (with attributes.csv when
// present, plain image folders otherwise).
struct DatasetConfig {
  std::string kind = "synthetic";
  std::string path_x, path_y;
  data::SyntheticSpec synthetic;
  Index augment_factor_x = 1, augment_factor_y = 1;
  data::AffineParams affine;
};

struct ExperimentConfig {
  Mode mode = Mode::resembled;
  models::LatentSpec latent;
  double omega = 1.0;
  objectives::LossVariant loss_variant;
  Index image_size = 32;
  Index batch_size = 64;
  Index iterations = 10000;
  OptimizerConfig optimizer;
  Index d_steps_per_g_step = 1;
  uint64_t seed = 0;
  DatasetConfig dataset;
  std::string ae_checkpoint;  // required unless mode == cogan
  models::WidthConfig gen_width{32};
  models::WidthConfig disc_width{32};
  Index log_every = 100;
  Index checkpoint_every = 0;  // 0 = final only
  Index sample_every = 0;      // 0 = off
  Index mapper_steps = 0;      // ZMapper regression after the main loop
  double mapper_lr = 1e-3;
  bool deterministic = true;

  // ablation_omega0 runs the resembled architecture with the constraint off.
  double effective_omega() const { return mode == Mode::ablation_omega0 ? 0.0 : omega; }
  bool uses_encoder() const { return mode != Mode::cogan; }
  void validate() const;
  uint64_t hash() const;  // FNV over the canonical JSON form
};

// Everything train_step mutates. Checkpoints capture this struct exactly
// (parameters, optimizer moments, rng, sampler positions), which is what
// makes resume-at-k bit-identical to an uninterrupted run.
struct TrainingState {
  models::ModelBundle bundle;
  std::optional<features::EncoderModel> encoder;
  VectorXd mu_x, mu_y;
  Rng rng;
  data::SamplerState sampler_x, sampler_y;
  int64_t iteration = 0;
};

class Trainer {
 public:
  // Fresh state from config; datasets are loaded/rendered per config and
  // the AE checkpoint is resolved when the mode needs one.
  explicit Trainer(const ExperimentConfig& config);
  // Resume from a checkpoint written by save_checkpoint.
  Trainer(const ExperimentConfig& config, const std::filesystem::path& checkpoint);

  // One alternating step: discriminator phase then generator phase.
  objectives::LossBreakdown train_step(const data::Batch& batch_x,
                                       const data::Batch& batch_y, const Tensor& z);

  // Phases are exposed so the structural tests can assert phase isolation.
  // Both leave the other phase's parameters bit-identical.
  void discriminator_phase(const data::Batch& batch_x, const data::Batch& batch_y,
                           const Tensor& z, objectives::LossBreakdown& losses);
  void generator_phase(const Tensor& z, objectives::LossBreakdown& losses);

  // Runs config.iterations steps with JSONL logging, checkpoint cadence and
  // the post-loop mapper fit. Returns the final checkpoint path.
  std::filesystem::path run(const std::filesystem::path& run_dir);

  // Draws the next (batch_x, batch_y, z) triple from the training stream.
  void next_batches(data::Batch& bx, data::Batch& by, Tensor& z);

  // The full generator objective at the current parameters for a fixed z
  // batch, with discriminators and encoder untouched. Pure evaluation: the
  // finite-difference descent-direction oracle drives it.
  double generator_objective(const Tensor& z);

  void save_checkpoint(const std::filesystem::path& path) const;

  const ExperimentConfig& config() const { return config_; }
  TrainingState& state() { return state_; }
  const TrainingState& state() const { return state_; }
  const data::DomainDataset& dataset_x() const { return data_x_; }
  const data::DomainDataset& dataset_y() const { return data_y_; }
  uint64_t encoder_checksum() const;

  // Feature-covariance diagnostic between the two domains' fake feature
  // statistics; pure function of (seed, iteration, parameters).
  double covariance_distance_diagnostic(Index n_samples = 256);

 private:
  void load_data();
  void resolve_encoder();
  void init_optimizers();
  void precompute_real_features();
  Tensor real_feature_rows(const std::vector<uint32_t>& indices, bool domain_x) const;
  [[noreturn]] void abort_non_finite(const std::string& where);

  ExperimentConfig config_;
  TrainingState state_;
  data::DomainDataset data_x_, data_y_;
  // Per-domain encoder workers: same frozen parameters, independent caches,
  // so fake-feature activations survive until the generator backward.
  std::optional<features::EncoderModel> enc_fake_x_, enc_fake_y_;
  // Generated batches carried from the discriminator phase into the
  // generator phase (their layer caches stay valid across the D update).
  Tensor fake_x_, fake_y_, feat_fake_x_, feat_fake_y_;
  MatrixXd real_features_x_, real_features_y_;  // precomputed, encoder frozen
  std::optional<nn::Adam> opt_d_, opt_g_;
  std::filesystem::path run_dir_;  // set during run() for diagnostics
};

// Reads the model bundle and metadata out of a checkpoint (optimizer and
// sampler payloads are skipped; resuming training goes through Trainer).
// `expected_ae_hash` (when nonzero) must match the hash stored in the
// checkpoint; a mismatch is a dependency error.
struct LoadedCheckpoint {
  models::ModelBundle bundle;
  uint64_t config_hash = 0;
  Mode mode = Mode::resembled;
  double omega = 1.0;
  VectorXd mu_x, mu_y;
  uint64_t file_hash = 0;
};
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path,
                                 uint64_t expected_ae_hash = 0);

// Convenience wrapper: build a Trainer and run it.
std::filesystem::path train(const ExperimentConfig& config,
                            const std::filesystem::path& run_dir);

}  // namespace rgan::train

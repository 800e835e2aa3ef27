#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "rgan/data.hpp"
#include "rgan/nn.hpp"
#include "rgan/rng.hpp"

namespace rgan::features {

enum class NoiseKind { gaussian, salt_pepper, none };

const char* noise_kind_name(NoiseKind k);
NoiseKind noise_kind_from_name(const std::string& name);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::gaussian;
  double magnitude = 0.1;

  void validate() const;
};

// Applies the corruption process to a pixel batch:
//   gaussian    adds N(0, magnitude^2) per pixel, clamped back to [-1,1];
//   salt_pepper sets a magnitude-fraction of pixels to +-1;
//   none        is the identity (bit-exact).
data::Batch corrupt(const data::Batch& batch, const NoiseSpec& noise, Rng& rng);

// The frozen feature map E. Instances are cheap to copy; forward passes
// mutate internal layer caches, so concurrent use requires one copy per
// thread. Parameters are never touched after freezing.
struct EncoderModel {
  nn::Network net;
  Index feature_dim = 0;
  Index image_size = 0;
  Index channels = 3;
  bool frozen = false;

  uint64_t params_checksum() const { return net.params_checksum(); }
};

struct DecoderModel {
  nn::Network net;
};

struct AeTrainConfig {
  Index image_size = 32;
  Index base_width = 32;
  Index feature_dim = 64;
  NoiseSpec noise;
  Index steps = 3000;
  Index batch_size = 64;
  nn::AdamConfig adam{1e-3, 0.9, 0.999, 1e-8};
  double holdout_fraction = 0.05;
  uint64_t seed = 0;

  void validate() const;
};

struct PretrainResult {
  EncoderModel encoder;  // frozen
  DecoderModel decoder;
  double holdout_loss_before = 0.0;
  double holdout_loss_after = 0.0;
  // Divergence (non-finite loss/update) stops training before the bad step,
  // so the returned parameters are the last finite state. The CLI wrapper
  // maps diverged=true to a training error after persisting the checkpoint.
  bool diverged = false;
  Index steps_completed = 0;
};

// Denoising-AE pretraining on the union of both domains. The holdout split
// measures clean-input reconstruction MSE before and after training.
PretrainResult pretrain_autoencoder(const data::DomainDataset& domain_x,
                                    const data::DomainDataset& domain_y,
                                    const AeTrainConfig& config);

// Builders are exposed for tests; pretrain_autoencoder uses them.
EncoderModel build_encoder(Index image_size, Index base_width, Index feature_dim,
                           Rng& rng);
DecoderModel build_decoder(Index image_size, Index base_width, Index feature_dim,
                           Rng& rng);

// Deterministic eval-mode feature map: (B,C,H,W) -> (B, feature_dim).
// Row i depends only on sample i.
MatrixXd encode(EncoderModel& encoder, const Tensor& images);

struct FeatureStats {
  VectorXd mean;
  MatrixXd covariance;  // unbiased (n-1), exactly symmetric
  Index n = 0;

  Index dim() const { return mean.size(); }
};

// Two-pass mean + unbiased covariance over feature rows.
FeatureStats compute_feature_stats(const MatrixXd& features);

// Full-dataset statistics through the frozen encoder.
FeatureStats compute_domain_feature_stats(EncoderModel& encoder,
                                          const data::DomainDataset& dataset,
                                          Index batch_size = 256);

// --- persistence ------------------------------------------------------

struct AeCheckpoint {
  EncoderModel encoder;
  DecoderModel decoder;
  NoiseSpec noise;
  uint64_t config_hash = 0;
};

// Returns the checkpoint hash (FNV of the payload); stats files and GAN
// checkpoints reference it.
uint64_t save_ae_checkpoint(const AeCheckpoint& ckpt, const std::filesystem::path& path);

struct LoadedAe {
  AeCheckpoint checkpoint;
  uint64_t hash = 0;
};
LoadedAe load_ae_checkpoint(const std::filesystem::path& path);

void save_feature_stats(const std::map<std::string, FeatureStats>& per_domain,
                        uint64_t ae_hash, const std::filesystem::path& path);
struct LoadedStats {
  std::map<std::string, FeatureStats> per_domain;
  uint64_t ae_hash = 0;
};
LoadedStats load_feature_stats(const std::filesystem::path& path);

}  // namespace rgan::features

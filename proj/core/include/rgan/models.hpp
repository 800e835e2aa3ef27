#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rgan/nn.hpp"
#include "rgan/rng.hpp"

namespace rgan::models {

enum class LatentDistribution { uniform, standard_normal };

const char* latent_distribution_name(LatentDistribution d);
LatentDistribution latent_distribution_from_name(const std::string& s);

struct LatentSpec {
  Index z_dim = 100;
  LatentDistribution distribution = LatentDistribution::uniform;

  void validate() const;
};

// (batch, z_dim) draws from P_z.
Tensor sample_latent(const LatentSpec& spec, Index batch, Rng& rng);

// Channel multiplier for the conv ladders; the coarsest stage carries
// base * 2^(stages-1) channels, DCGAN style.
struct WidthConfig {
  Index base = 32;
};

struct Generator {
  nn::Network net;
  LatentSpec latent;
  Index image_size = 0;
  std::string domain_id;

  Tensor generate(const Tensor& z, bool train) { return net.forward(z, train); }
  uint64_t params_checksum() const { return net.params_checksum(); }
};

struct Discriminator {
  nn::Network net;
  Index image_size = 0;

  Tensor discriminate(const Tensor& images, bool train) {
    return net.forward(images, train);
  }
  uint64_t params_checksum() const { return net.params_checksum(); }
};

struct FeatureDiscriminator {
  nn::Network net;
  Index feature_dim = 0;

  Tensor discriminate(const Tensor& features, bool train) {
    return net.forward(features, train);
  }
  uint64_t params_checksum() const { return net.params_checksum(); }
};

// Layer indices (into the respective Network) whose objects are aliased
// between the two domains. Empty manifest = untied (resembled mode).
struct TyingManifest {
  std::vector<Index> generator_shared;
  std::vector<Index> discriminator_shared;

  bool tied() const { return !generator_shared.empty() || !discriminator_shared.empty(); }
};

struct CoGANPair {
  Generator gen_x, gen_y;
  Discriminator disc_x, disc_y;
  TyingManifest manifest;
};

// Three fully connected layers mapping the feature space to the latent
// space; used for reconstruction.
struct ZMapper {
  nn::Network net;
  Index feature_dim = 0;
  Index z_dim = 0;

  Tensor map(const Tensor& features) { return net.forward(features, false); }
};

Generator build_generator(const LatentSpec& latent, Index image_size,
                          const WidthConfig& width, Rng& rng,
                          std::string domain_id = "x");
Discriminator build_image_discriminator(Index image_size, const WidthConfig& width,
                                        Rng& rng);
FeatureDiscriminator build_feature_discriminator(Index feature_dim, Rng& rng);
// Generators share every layer except the last deconv block; discriminators
// share everything except the first conv block.
CoGANPair build_cogan_pair(const LatentSpec& latent, Index image_size,
                           const WidthConfig& width, Rng& rng);
ZMapper build_z_mapper(Index feature_dim, Index z_dim, Rng& rng);

// Everything trainable for one experiment. The frozen encoder itself lives
// with the training state; the bundle records the AE checkpoint hash it
// depends on.
struct ModelBundle {
  Generator gen_x, gen_y;
  Discriminator disc_x, disc_y;
  std::optional<FeatureDiscriminator> feat_disc_x, feat_disc_y;
  TyingManifest tying;
  std::optional<ZMapper> mapper;
  uint64_t ae_hash = 0;
  int64_t iteration = 0;

  std::vector<nn::Param*> generator_params() const;
  std::vector<nn::Param*> discriminator_params() const;

  void save(BinaryWriter& w) const;
  static ModelBundle load(BinaryReader& r);
};

uint64_t layer_params_checksum(const nn::Layer& layer);

}  // namespace rgan::models

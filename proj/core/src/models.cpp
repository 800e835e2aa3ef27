#include "rgan/models.hpp"

#include <map>

namespace rgan::models {

const char* latent_distribution_name(LatentDistribution d) {
  return d == LatentDistribution::uniform ? "uniform" : "standard_normal";
}

LatentDistribution latent_distribution_from_name(const std::string& s) {
  if (s == "uniform") return LatentDistribution::uniform;
  if (s == "standard_normal") return LatentDistribution::standard_normal;
  fail(ErrorCategory::config, "unknown latent distribution: " + s);
}

void LatentSpec::validate() const {
  require(z_dim >= 1, ErrorCategory::config, "z_dim must be >= 1");
}

Tensor sample_latent(const LatentSpec& spec, Index batch, Rng& rng) {
  spec.validate();
  Tensor z({batch, spec.z_dim});
  if (spec.distribution == LatentDistribution::uniform) {
    for (Index i = 0; i < z.numel(); ++i) z[i] = rng.uniform(-1.0, 1.0);
  } else {
    for (Index i = 0; i < z.numel(); ++i) z[i] = rng.normal();
  }
  return z;
}

namespace {

Index ladder_stages(Index image_size) {
  require(image_size == 32 || image_size == 64, ErrorCategory::config,
          "supported image sizes are 32 and 64, got " + std::to_string(image_size));
  Index stages = 0;
  for (Index s = image_size; s > 4; s /= 2) ++stages;
  return stages;
}

// Project-and-reshape stem shared by the generator builders.
void add_generator_stem(nn::Network& net, Index z_dim, Index top_c, Rng& rng) {
  auto stem = std::make_shared<nn::Dense>(z_dim, top_c * 16);
  stem->init(rng);
  net.add(stem);
  net.add(std::make_shared<nn::Reshape>(std::vector<Index>{top_c, 4, 4}));
  auto bn = std::make_shared<nn::BatchNorm>(top_c);
  bn->init(rng);
  net.add(bn);
  net.add(std::make_shared<nn::ReLU>());
}

// One deconv block: ConvTranspose2d (+BN+ReLU) or (+Tanh) for the output.
void add_deconv_block(nn::Network& net, Index in_c, Index out_c, bool output,
                      Rng& rng) {
  auto deconv = std::make_shared<nn::ConvTranspose2d>(in_c, out_c, 4, 2, 1);
  deconv->init(rng);
  net.add(deconv);
  if (output) {
    net.add(std::make_shared<nn::Tanh>());
  } else {
    auto bn = std::make_shared<nn::BatchNorm>(out_c);
    bn->init(rng);
    net.add(bn);
    net.add(std::make_shared<nn::ReLU>());
  }
}

// Discriminator blocks carry no batch norm: real and fake samples go
// through in separate batches, and per-batch normalization would hand the
// discriminator the batch statistics as a free signal.
void add_conv_block(nn::Network& net, Index in_c, Index out_c, Rng& rng) {
  auto conv = std::make_shared<nn::Conv2d>(in_c, out_c, 4, 2, 1);
  conv->init(rng);
  net.add(conv);
  net.add(std::make_shared<nn::LeakyReLU>(0.2));
}

void add_discriminator_head(nn::Network& net, Index in_dim, Rng& rng) {
  net.add(std::make_shared<nn::Reshape>(std::vector<Index>{in_dim}));
  auto head = std::make_shared<nn::Dense>(in_dim, 1);
  head->init(rng);
  net.add(head);
  net.add(std::make_shared<nn::Sigmoid>());
}

}  // namespace

Generator build_generator(const LatentSpec& latent, Index image_size,
                          const WidthConfig& width, Rng& rng, std::string domain_id) {
  latent.validate();
  const Index stages = ladder_stages(image_size);
  const Index top_c = width.base << (stages - 1);

  Generator g;
  g.net = nn::Network("generator_" + domain_id);
  g.latent = latent;
  g.image_size = image_size;
  g.domain_id = std::move(domain_id);

  add_generator_stem(g.net, latent.z_dim, top_c, rng);
  Index in_c = top_c;
  for (Index s = 0; s < stages; ++s) {
    const bool last = s + 1 == stages;
    const Index out_c = last ? 3 : in_c / 2;
    add_deconv_block(g.net, in_c, out_c, last, rng);
    in_c = out_c;
  }
  return g;
}

Discriminator build_image_discriminator(Index image_size, const WidthConfig& width,
                                        Rng& rng) {
  const Index stages = ladder_stages(image_size);

  Discriminator d;
  d.net = nn::Network("discriminator");
  d.image_size = image_size;

  Index in_c = 3;
  Index out_c = width.base;
  for (Index s = 0; s < stages; ++s) {
    add_conv_block(d.net, in_c, out_c, rng);
    in_c = out_c;
    out_c *= 2;
  }
  add_discriminator_head(d.net, in_c * 16, rng);
  return d;
}

FeatureDiscriminator build_feature_discriminator(Index feature_dim, Rng& rng) {
  require(feature_dim >= 1, ErrorCategory::config, "feature_dim must be >= 1");
  const Index mid = std::max<Index>(1, feature_dim / 2);

  FeatureDiscriminator fd;
  fd.net = nn::Network("feature_discriminator");
  fd.feature_dim = feature_dim;

  auto l1 = std::make_shared<nn::Dense>(feature_dim, feature_dim);
  l1->init(rng);
  fd.net.add(l1).add(std::make_shared<nn::LeakyReLU>(0.2));
  auto l2 = std::make_shared<nn::Dense>(feature_dim, mid);
  l2->init(rng);
  fd.net.add(l2).add(std::make_shared<nn::LeakyReLU>(0.2));
  auto l3 = std::make_shared<nn::Dense>(mid, 1);
  l3->init(rng);
  fd.net.add(l3).add(std::make_shared<nn::Sigmoid>());
  return fd;
}

CoGANPair build_cogan_pair(const LatentSpec& latent, Index image_size,
                           const WidthConfig& width, Rng& rng) {
  CoGANPair pair;
  pair.gen_x = build_generator(latent, image_size, width, rng, "x");
  pair.disc_x = build_image_discriminator(image_size, width, rng);

  // G^y aliases every layer of G^x except the final deconv block.
  pair.gen_y = Generator{};
  pair.gen_y.net = nn::Network("generator_y");
  pair.gen_y.latent = latent;
  pair.gen_y.image_size = image_size;
  pair.gen_y.domain_id = "y";
  const auto& gx_layers = pair.gen_x.net.layers();
  const size_t g_split = gx_layers.size() - 2;  // final deconv + tanh
  for (size_t i = 0; i < g_split; ++i) {
    pair.gen_y.net.add(gx_layers[i]);
    pair.manifest.generator_shared.push_back(static_cast<Index>(i));
  }
  {
    auto* last_deconv = dynamic_cast<nn::ConvTranspose2d*>(gx_layers[g_split].get());
    require(last_deconv != nullptr, ErrorCategory::config, "unexpected generator tail");
    const Index stages = ladder_stages(image_size);
    const Index in_c = stages >= 2 ? width.base : width.base << (stages - 1);
    add_deconv_block(pair.gen_y.net, in_c, 3, /*output=*/true, rng);
  }

  // D^y aliases every layer of D^x except the first conv block.
  pair.disc_y = Discriminator{};
  pair.disc_y.net = nn::Network("discriminator_y");
  pair.disc_y.image_size = image_size;
  add_conv_block(pair.disc_y.net, 3, width.base, rng);
  const auto& dx_layers = pair.disc_x.net.layers();
  const size_t d_split = 2;  // first conv + leaky relu
  for (size_t i = d_split; i < dx_layers.size(); ++i) {
    pair.disc_y.net.add(dx_layers[i]);
    pair.manifest.discriminator_shared.push_back(static_cast<Index>(i));
  }
  return pair;
}

ZMapper build_z_mapper(Index feature_dim, Index z_dim, Rng& rng) {
  require(feature_dim >= 1 && z_dim >= 1, ErrorCategory::config,
          "mapper dims must be >= 1");
  // Inverting E o G needs headroom over the raw dims.
  const Index hidden = std::max<Index>(64, 2 * std::max(feature_dim, z_dim));

  ZMapper m;
  m.net = nn::Network("z_mapper");
  m.feature_dim = feature_dim;
  m.z_dim = z_dim;

  auto l1 = std::make_shared<nn::Dense>(feature_dim, hidden);
  l1->init(rng);
  m.net.add(l1).add(std::make_shared<nn::LeakyReLU>(0.2));
  auto l2 = std::make_shared<nn::Dense>(hidden, hidden);
  l2->init(rng);
  m.net.add(l2).add(std::make_shared<nn::LeakyReLU>(0.2));
  auto l3 = std::make_shared<nn::Dense>(hidden, z_dim);
  l3->init(rng);
  m.net.add(l3);
  return m;
}

std::vector<nn::Param*> ModelBundle::generator_params() const {
  std::vector<nn::Param*> params = gen_x.net.params();
  for (nn::Param* p : gen_y.net.params()) params.push_back(p);
  return nn::dedup_params(params);
}

std::vector<nn::Param*> ModelBundle::discriminator_params() const {
  std::vector<nn::Param*> params = disc_x.net.params();
  for (nn::Param* p : disc_y.net.params()) params.push_back(p);
  if (feat_disc_x)
    for (nn::Param* p : feat_disc_x->net.params()) params.push_back(p);
  if (feat_disc_y)
    for (nn::Param* p : feat_disc_y->net.params()) params.push_back(p);
  return nn::dedup_params(params);
}

uint64_t layer_params_checksum(const nn::Layer& layer) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const nn::Param* p : const_cast<nn::Layer&>(layer).params())
    h = fnv1a64(p->value.data(), static_cast<size_t>(p->value.numel()) * sizeof(double), h);
  return h;
}

// --- bundle serialization ----------------------------------------------
//
// Networks are written in a fixed order; a layer object reachable from two
// networks (weight tying) is serialized once and referenced afterwards, so
// aliasing survives the round trip bit-exactly.

namespace {

struct NetWriter {
  std::map<const nn::Layer*, std::pair<uint32_t, uint32_t>> seen;

  void write(BinaryWriter& w, const nn::Network& net, uint32_t net_idx) {
    w.str(net.name());
    w.u64(net.layers().size());
    for (size_t i = 0; i < net.layers().size(); ++i) {
      const nn::Layer* l = net.layers()[i].get();
      auto it = seen.find(l);
      if (it != seen.end()) {
        w.u8(1);
        w.u32(it->second.first);
        w.u32(it->second.second);
      } else {
        w.u8(0);
        l->save(w);
        seen.emplace(l, std::make_pair(net_idx, static_cast<uint32_t>(i)));
      }
    }
  }
};

struct NetReader {
  std::vector<const nn::Network*> nets;

  nn::Network read(BinaryReader& r) {
    nn::Network net(r.str());
    const uint64_t n = r.u64();
    for (uint64_t i = 0; i < n; ++i) {
      if (r.u8() == 1) {
        const uint32_t net_idx = r.u32(), layer_idx = r.u32();
        require(net_idx < nets.size() && layer_idx < nets[net_idx]->layers().size(),
                ErrorCategory::integrity, "dangling shared-layer reference");
        net.add(nets[net_idx]->layers()[layer_idx]);
      } else {
        net.add(nn::load_layer(r));
      }
    }
    return net;
  }
};

}  // namespace

void ModelBundle::save(BinaryWriter& w) const {
  w.u64(ae_hash);
  w.i64(iteration);
  w.str(gen_x.domain_id);
  w.str(gen_y.domain_id);
  w.i64(gen_x.image_size);
  w.i64(gen_x.latent.z_dim);
  w.u8(static_cast<uint8_t>(gen_x.latent.distribution));

  w.u8(feat_disc_x ? 1 : 0);
  w.u8(mapper ? 1 : 0);
  if (feat_disc_x) w.i64(feat_disc_x->feature_dim);
  if (mapper) {
    w.i64(mapper->feature_dim);
    w.i64(mapper->z_dim);
  }

  std::vector<uint32_t> gshared(tying.generator_shared.begin(), tying.generator_shared.end());
  std::vector<uint32_t> dshared(tying.discriminator_shared.begin(), tying.discriminator_shared.end());
  w.u32_vec(gshared);
  w.u32_vec(dshared);

  NetWriter nw;
  uint32_t idx = 0;
  nw.write(w, gen_x.net, idx++);
  nw.write(w, gen_y.net, idx++);
  nw.write(w, disc_x.net, idx++);
  nw.write(w, disc_y.net, idx++);
  if (feat_disc_x) nw.write(w, feat_disc_x->net, idx++);
  if (feat_disc_y) nw.write(w, feat_disc_y->net, idx++);
  if (mapper) nw.write(w, mapper->net, idx++);
}

ModelBundle ModelBundle::load(BinaryReader& r) {
  ModelBundle b;
  b.ae_hash = r.u64();
  b.iteration = r.i64();
  b.gen_x.domain_id = r.str();
  b.gen_y.domain_id = r.str();
  const Index image_size = r.i64();
  LatentSpec latent;
  latent.z_dim = r.i64();
  latent.distribution = static_cast<LatentDistribution>(r.u8());
  b.gen_x.image_size = b.gen_y.image_size = image_size;
  b.gen_x.latent = b.gen_y.latent = latent;
  b.disc_x.image_size = b.disc_y.image_size = image_size;

  const bool has_fd = r.u8() == 1;
  const bool has_mapper = r.u8() == 1;
  Index fd_dim = 0, m_fdim = 0, m_zdim = 0;
  if (has_fd) fd_dim = r.i64();
  if (has_mapper) {
    m_fdim = r.i64();
    m_zdim = r.i64();
  }

  auto gshared = r.u32_vec();
  auto dshared = r.u32_vec();
  b.tying.generator_shared.assign(gshared.begin(), gshared.end());
  b.tying.discriminator_shared.assign(dshared.begin(), dshared.end());

  NetReader nr;
  b.gen_x.net = nr.read(r);
  nr.nets.push_back(&b.gen_x.net);
  b.gen_y.net = nr.read(r);
  nr.nets.push_back(&b.gen_y.net);
  b.disc_x.net = nr.read(r);
  nr.nets.push_back(&b.disc_x.net);
  b.disc_y.net = nr.read(r);
  nr.nets.push_back(&b.disc_y.net);
  if (has_fd) {
    b.feat_disc_x = FeatureDiscriminator{nr.read(r), fd_dim};
    nr.nets.push_back(&b.feat_disc_x->net);
    b.feat_disc_y = FeatureDiscriminator{nr.read(r), fd_dim};
    nr.nets.push_back(&b.feat_disc_y->net);
  }
  if (has_mapper) {
    b.mapper = ZMapper{nr.read(r), m_fdim, m_zdim};
  }
  return b;
}

}  // namespace rgan::models

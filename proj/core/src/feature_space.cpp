#include "rgan/feature_space.hpp"

#include <algorithm>
#include <cmath>

namespace rgan::features {

const char* noise_kind_name(NoiseKind k) {
  switch (k) {
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::salt_pepper: return "salt_pepper";
    default: return "none";
  }
}

NoiseKind noise_kind_from_name(const std::string& name) {
  if (name == "gaussian") return NoiseKind::gaussian;
  if (name == "salt_pepper") return NoiseKind::salt_pepper;
  if (name == "none") return NoiseKind::none;
  fail(ErrorCategory::config, "unknown noise kind: " + name);
}

void NoiseSpec::validate() const {
  require(magnitude >= 0.0, ErrorCategory::config, "noise magnitude must be >= 0");
}

data::Batch corrupt(const data::Batch& batch, const NoiseSpec& noise, Rng& rng) {
  noise.validate();
  data::Batch out;
  out.indices = batch.indices;
  out.images = batch.images;
  if (noise.kind == NoiseKind::none || noise.magnitude == 0.0) return out;

  auto& px = out.images.array();
  if (noise.kind == NoiseKind::gaussian) {
    for (Index i = 0; i < px.size(); ++i)
      px[i] = std::clamp(px[i] + rng.normal(0.0, noise.magnitude), -1.0, 1.0);
  } else {
    for (Index i = 0; i < px.size(); ++i) {
      if (rng.uniform() < noise.magnitude) px[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
    }
  }
  return out;
}

void AeTrainConfig::validate() const {
  require(image_size >= 8, ErrorCategory::config, "image_size must be >= 8");
  require(base_width >= 1 && feature_dim >= 1, ErrorCategory::config,
          "widths must be >= 1");
  require(steps >= 0, ErrorCategory::config, "steps must be >= 0");
  require(batch_size >= 1, ErrorCategory::config, "batch_size must be >= 1");
  noise.validate();
}

namespace {

Index ladder_stages(Index image_size) {
  require(image_size >= 8 && (image_size & (image_size - 1)) == 0,
          ErrorCategory::config,
          "image_size must be a power of two >= 8, got " + std::to_string(image_size));
  Index stages = 0;
  for (Index s = image_size; s > 4; s /= 2) ++stages;
  return stages;
}

}  // namespace

EncoderModel build_encoder(Index image_size, Index base_width, Index feature_dim,
                           Rng& rng) {
  const Index stages = ladder_stages(image_size);
  nn::Network net("encoder");
  Index in_c = 3;
  Index out_c = base_width;
  for (Index s = 0; s < stages; ++s) {
    auto conv = std::make_shared<nn::Conv2d>(in_c, out_c, 4, 2, 1);
    conv->init(rng);
    net.add(conv);
    if (s > 0) {
      auto bn = std::make_shared<nn::BatchNorm>(out_c);
      bn->init(rng);
      net.add(bn);
    }
    net.add(std::make_shared<nn::LeakyReLU>(0.2));
    in_c = out_c;
    out_c *= 2;
  }
  net.add(std::make_shared<nn::Reshape>(std::vector<Index>{in_c * 16}));
  auto head = std::make_shared<nn::Dense>(in_c * 16, feature_dim);
  head->init(rng);
  net.add(head);

  EncoderModel enc;
  enc.net = std::move(net);
  enc.feature_dim = feature_dim;
  enc.image_size = image_size;
  return enc;
}

DecoderModel build_decoder(Index image_size, Index base_width, Index feature_dim,
                           Rng& rng) {
  const Index stages = ladder_stages(image_size);
  const Index top_c = base_width << (stages - 1);

  nn::Network net("decoder");
  auto stem = std::make_shared<nn::Dense>(feature_dim, top_c * 16);
  stem->init(rng);
  net.add(stem);
  net.add(std::make_shared<nn::Reshape>(std::vector<Index>{top_c, 4, 4}));
  {
    auto bn = std::make_shared<nn::BatchNorm>(top_c);
    bn->init(rng);
    net.add(bn);
    net.add(std::make_shared<nn::ReLU>());
  }
  Index in_c = top_c;
  for (Index s = 0; s < stages; ++s) {
    const bool last = s + 1 == stages;
    const Index out_c = last ? 3 : in_c / 2;
    auto deconv = std::make_shared<nn::ConvTranspose2d>(in_c, out_c, 4, 2, 1);
    deconv->init(rng);
    net.add(deconv);
    if (last) {
      net.add(std::make_shared<nn::Tanh>());
    } else {
      auto bn = std::make_shared<nn::BatchNorm>(out_c);
      bn->init(rng);
      net.add(bn);
      net.add(std::make_shared<nn::ReLU>());
    }
    in_c = out_c;
  }
  return {std::move(net)};
}

namespace {

double holdout_mse(EncoderModel& enc, DecoderModel& dec, const Tensor& images) {
  const Tensor code = enc.net.forward(images, /*train=*/false);
  const Tensor recon = dec.net.forward(code, /*train=*/false);
  return (recon.array() - images.array()).square().mean();
}

Tensor gather_images(const data::DomainDataset& a, const data::DomainDataset& b,
                     const std::vector<uint32_t>& ids) {
  const Index na = a.size();
  const Index numel = a.image_numel();
  Tensor out({static_cast<Index>(ids.size()), a.channels(), a.height(), a.width()});
  for (size_t i = 0; i < ids.size(); ++i) {
    const uint32_t id = ids[i];
    const double* src = id < na ? a.image_data(id) : b.image_data(id - na);
    std::copy(src, src + numel, out.data() + static_cast<Index>(i) * numel);
  }
  return out;
}

}  // namespace

PretrainResult pretrain_autoencoder(const data::DomainDataset& domain_x,
                                    const data::DomainDataset& domain_y,
                                    const AeTrainConfig& config) {
  config.validate();
  require(domain_x.size() >= 1 && domain_y.size() >= 1, ErrorCategory::data,
          "both domains must be non-empty");
  require(domain_x.channels() == domain_y.channels() &&
              domain_x.height() == domain_y.height() &&
              domain_x.width() == domain_y.width(),
          ErrorCategory::shape, "domains must share the image shape");
  require(domain_x.height() == config.image_size &&
              domain_x.width() == config.image_size,
          ErrorCategory::shape, "dataset does not match configured image_size");

  Rng rng(config.seed);
  EncoderModel enc = build_encoder(config.image_size, config.base_width,
                                   config.feature_dim, rng);
  DecoderModel dec = build_decoder(config.image_size, config.base_width,
                                   config.feature_dim, rng);

  // Union of the two domains; a shuffled prefix is held out. A zero
  // fraction trains on everything and measures the "holdout" loss on the
  // full union (the overfit-capacity checks need that).
  const Index n_total = domain_x.size() + domain_y.size();
  std::vector<uint32_t> order(n_total);
  for (Index i = 0; i < n_total; ++i) order[i] = static_cast<uint32_t>(i);
  rng.shuffle(order);
  Index n_hold = static_cast<Index>(std::llround(config.holdout_fraction * n_total));
  if (config.holdout_fraction > 0.0)
    n_hold = std::clamp<Index>(n_hold, 1, std::max<Index>(1, n_total / 2));
  else
    n_hold = 0;
  std::vector<uint32_t> hold_ids(order.begin(), order.begin() + n_hold);
  std::vector<uint32_t> train_ids(order.begin() + n_hold, order.end());
  if (hold_ids.empty()) hold_ids = train_ids;

  const Tensor holdout = gather_images(domain_x, domain_y, hold_ids);

  PretrainResult result;
  result.holdout_loss_before = holdout_mse(enc, dec, holdout);

  std::vector<nn::Param*> params = enc.net.params();
  for (nn::Param* p : dec.net.params()) params.push_back(p);
  nn::Adam opt(params, config.adam);

  size_t cursor = train_ids.size();
  std::vector<uint32_t> batch_ids(config.batch_size);
  for (Index step = 0; step < config.steps; ++step) {
    for (Index b = 0; b < config.batch_size; ++b) {
      if (cursor >= train_ids.size()) {
        rng.shuffle(train_ids);
        cursor = 0;
      }
      batch_ids[b] = train_ids[cursor++];
    }
    data::Batch clean;
    clean.indices = batch_ids;
    clean.images = gather_images(domain_x, domain_y, batch_ids);
    data::Batch noisy = corrupt(clean, config.noise, rng);

    opt.zero_grad();
    Tensor code = enc.net.forward(noisy.images, /*train=*/true);
    Tensor recon = dec.net.forward(code, /*train=*/true);
    const Index numel = recon.numel();
    Tensor grad(recon.shape());
    grad.array() = 2.0 * (recon.array() - clean.images.array()) / numel;
    const double loss = (recon.array() - clean.images.array()).square().mean();
    if (!std::isfinite(loss)) {
      result.diverged = true;
      result.steps_completed = step;
      break;
    }
    enc.net.backward(dec.net.backward(grad));
    if (!opt.grads_finite()) {
      result.diverged = true;
      result.steps_completed = step;
      break;
    }
    // Snapshot so an update that overflows can be rolled back: the returned
    // model is always the last finite state.
    const VectorXd before = nn::flatten_params(opt.params());
    opt.step();
    bool finite = true;
    for (const nn::Param* p : opt.params())
      if (!p->value.all_finite()) {
        finite = false;
        break;
      }
    if (!finite) {
      nn::unflatten_params(opt.params(), before);
      result.diverged = true;
      result.steps_completed = step;
      break;
    }
    result.steps_completed = step + 1;
  }

  result.holdout_loss_after = holdout_mse(enc, dec, holdout);
  enc.frozen = true;
  result.encoder = std::move(enc);
  result.decoder = std::move(dec);
  return result;
}

MatrixXd encode(EncoderModel& encoder, const Tensor& images) {
  require(images.rank() == 4, ErrorCategory::shape, "encode expects (B,C,H,W)");
  require(images.dim(1) == encoder.channels && images.dim(2) == encoder.image_size &&
              images.dim(3) == encoder.image_size,
          ErrorCategory::shape,
          "encode: input " + shape_str(images.shape()) + " does not match encoder");
  const Index b = images.dim(0);
  Tensor out = encoder.net.forward(images, /*train=*/false);
  MatrixXd feats(b, encoder.feature_dim);
  feats = out.mat(b, encoder.feature_dim);
  return feats;
}

FeatureStats compute_feature_stats(const MatrixXd& features) {
  const Index n = features.rows(), d = features.cols();
  require(n >= 2, ErrorCategory::statistics,
          "need at least 2 samples for covariance, got " + std::to_string(n));
  FeatureStats stats;
  stats.n = n;
  stats.mean = features.colwise().mean();
  MatrixXd centered = features.rowwise() - stats.mean.transpose();
  stats.covariance = MatrixXd::Zero(d, d);
  stats.covariance.selfadjointView<Eigen::Lower>().rankUpdate(
      centered.transpose(), 1.0 / static_cast<double>(n - 1));
  stats.covariance.triangularView<Eigen::StrictlyUpper>() =
      stats.covariance.transpose().triangularView<Eigen::StrictlyUpper>();
  return stats;
}

FeatureStats compute_domain_feature_stats(EncoderModel& encoder,
                                          const data::DomainDataset& dataset,
                                          Index batch_size) {
  require(encoder.frozen, ErrorCategory::config,
          "feature statistics require a frozen encoder");
  require(dataset.size() >= 2, ErrorCategory::statistics,
          "need at least 2 samples, got " + std::to_string(dataset.size()));
  MatrixXd feats(dataset.size(), encoder.feature_dim);
  const Index numel = dataset.image_numel();
  for (Index start = 0; start < dataset.size(); start += batch_size) {
    const Index b = std::min(batch_size, dataset.size() - start);
    Tensor chunk({b, dataset.channels(), dataset.height(), dataset.width()});
    std::copy(dataset.image_data(start), dataset.image_data(start) + b * numel,
              chunk.data());
    feats.middleRows(start, b) = encode(encoder, chunk);
  }
  return compute_feature_stats(feats);
}

// --- persistence ------------------------------------------------------

namespace {
constexpr uint32_t kAeMagic = 0x45414752;     // "RGAE"
constexpr uint32_t kStatsMagic = 0x53464752;  // "RGFS"
constexpr uint32_t kAeVersion = 1;

void write_stats(BinaryWriter& w, const FeatureStats& s) {
  w.i64(s.n);
  w.f64_span(s.mean.data(), s.mean.size());
  w.i64(s.covariance.rows());
  w.f64_span(s.covariance.data(), s.covariance.size());
}

FeatureStats read_stats(BinaryReader& r) {
  FeatureStats s;
  s.n = r.i64();
  auto mean = r.f64_vec();
  s.mean = Eigen::Map<const VectorXd>(mean.data(), mean.size());
  const Index d = r.i64();
  auto cov = r.f64_vec();
  require(static_cast<Index>(cov.size()) == d * d, ErrorCategory::integrity,
          "covariance size mismatch");
  s.covariance = Eigen::Map<const MatrixXd>(cov.data(), d, d);
  return s;
}
}  // namespace

uint64_t save_ae_checkpoint(const AeCheckpoint& ckpt, const std::filesystem::path& path) {
  BinaryWriter w;
  w.u32(kAeMagic);
  w.u32(kAeVersion);
  w.i64(ckpt.encoder.image_size);
  w.i64(ckpt.encoder.feature_dim);
  w.i64(ckpt.encoder.channels);
  w.u8(static_cast<uint8_t>(ckpt.noise.kind));
  w.f64(ckpt.noise.magnitude);
  w.u64(ckpt.config_hash);
  ckpt.encoder.net.save(w);
  ckpt.decoder.net.save(w);
  w.write_file(path);
  return w.checksum();
}

LoadedAe load_ae_checkpoint(const std::filesystem::path& path) {
  BinaryReader r = BinaryReader::from_file(path);
  require(r.u32() == kAeMagic, ErrorCategory::integrity,
          "not an AE checkpoint: " + path.string());
  const uint32_t version = r.u32();
  require(version == kAeVersion, ErrorCategory::version,
          "unsupported AE checkpoint version " + std::to_string(version));
  LoadedAe loaded;
  loaded.hash = r.payload_checksum();
  auto& ae = loaded.checkpoint;
  ae.encoder.image_size = r.i64();
  ae.encoder.feature_dim = r.i64();
  ae.encoder.channels = r.i64();
  ae.noise.kind = static_cast<NoiseKind>(r.u8());
  ae.noise.magnitude = r.f64();
  ae.config_hash = r.u64();
  ae.encoder.net = nn::Network::load(r);
  ae.decoder.net = nn::Network::load(r);
  ae.encoder.frozen = true;
  return loaded;
}

void save_feature_stats(const std::map<std::string, FeatureStats>& per_domain,
                        uint64_t ae_hash, const std::filesystem::path& path) {
  BinaryWriter w;
  w.u32(kStatsMagic);
  w.u32(kAeVersion);
  w.u64(ae_hash);
  w.u64(per_domain.size());
  for (const auto& [id, stats] : per_domain) {
    w.str(id);
    write_stats(w, stats);
  }
  w.write_file(path);
}

LoadedStats load_feature_stats(const std::filesystem::path& path) {
  BinaryReader r = BinaryReader::from_file(path);
  require(r.u32() == kStatsMagic, ErrorCategory::integrity,
          "not a feature-stats file: " + path.string());
  const uint32_t version = r.u32();
  require(version == kAeVersion, ErrorCategory::version,
          "unsupported stats version " + std::to_string(version));
  LoadedStats out;
  out.ae_hash = r.u64();
  const uint64_t n = r.u64();
  for (uint64_t i = 0; i < n; ++i) {
    std::string id = r.str();
    out.per_domain.emplace(std::move(id), read_stats(r));
  }
  return out;
}

}  // namespace rgan::features

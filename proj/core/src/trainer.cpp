#include "rgan/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "rgan/config_io.hpp"
#include "rgan/inference.hpp"
#include "rgan/metrics.hpp"

namespace rgan::train {

namespace fs = std::filesystem;
using json = nlohmann::json;

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::resembled: return "resembled";
    case Mode::cogan: return "cogan";
    default: return "ablation_omega0";
  }
}

Mode mode_from_name(const std::string& s) {
  if (s == "resembled") return Mode::resembled;
  if (s == "cogan") return Mode::cogan;
  if (s == "ablation_omega0") return Mode::ablation_omega0;
  fail(ErrorCategory::config, "unknown mode: " + s);
}

void ExperimentConfig::validate() const {
  latent.validate();
  require(omega >= 0.0, ErrorCategory::config, "omega must be >= 0");
  require(iterations >= 0, ErrorCategory::config, "iterations must be >= 0");
  require(batch_size >= 2, ErrorCategory::config, "batch_size must be >= 2");
  require(optimizer.lr > 0.0, ErrorCategory::config, "lr must be positive");
  require(optimizer.d_lr_scale > 0.0, ErrorCategory::config,
          "d_lr_scale must be positive");
  require(d_steps_per_g_step >= 1, ErrorCategory::config,
          "d_steps_per_g_step must be >= 1");
  require(image_size == 32 || image_size == 64, ErrorCategory::config,
          "image_size must be 32 or 64");
  if (uses_encoder())
    require(!ae_checkpoint.empty(), ErrorCategory::config,
            std::string(mode_name(mode)) + " mode requires an AE checkpoint");
  require(dataset.kind == "synthetic" || dataset.kind == "dirs",
          ErrorCategory::config, "dataset.kind must be synthetic or dirs");
  if (dataset.kind == "dirs")
    require(!dataset.path_x.empty() && !dataset.path_y.empty(), ErrorCategory::config,
            "dataset.kind=dirs requires path_x and path_y");
}

namespace {

Eigen::Map<const Eigen::ArrayXd> as_array(const Tensor& t) {
  return {t.data(), t.numel()};
}

Tensor from_array(const Eigen::ArrayXd& a, std::vector<Index> shape) {
  Tensor t(std::move(shape));
  t.array() = a;
  return t;
}

MatrixXd feat_matrix(const Tensor& feats) {
  return feats.mat(feats.dim(0), feats.dim(1));
}

features::EncoderModel clone_encoder(const features::EncoderModel& enc) {
  BinaryWriter w;
  enc.net.save(w);
  BinaryReader r(w.bytes());
  features::EncoderModel copy;
  copy.net = nn::Network::load(r);
  copy.feature_dim = enc.feature_dim;
  copy.image_size = enc.image_size;
  copy.channels = enc.channels;
  copy.frozen = enc.frozen;
  return copy;
}

}  // namespace

Trainer::Trainer(const ExperimentConfig& config) : config_(config) {
  config_.validate();
  load_data();
  resolve_encoder();

  Rng build_rng = Rng(config_.seed).split(10);
  auto& b = state_.bundle;
  if (config_.mode == Mode::cogan) {
    models::CoGANPair pair = models::build_cogan_pair(config_.latent, config_.image_size,
                                                      config_.gen_width, build_rng);
    b.gen_x = std::move(pair.gen_x);
    b.gen_y = std::move(pair.gen_y);
    b.disc_x = std::move(pair.disc_x);
    b.disc_y = std::move(pair.disc_y);
    b.tying = std::move(pair.manifest);
  } else {
    b.gen_x = models::build_generator(config_.latent, config_.image_size,
                                      config_.gen_width, build_rng, "x");
    b.gen_y = models::build_generator(config_.latent, config_.image_size,
                                      config_.gen_width, build_rng, "y");
    b.disc_x = models::build_image_discriminator(config_.image_size,
                                                 config_.disc_width, build_rng);
    b.disc_y = models::build_image_discriminator(config_.image_size,
                                                 config_.disc_width, build_rng);
    const Index fd = state_.encoder->feature_dim;
    b.feat_disc_x = models::build_feature_discriminator(fd, build_rng);
    b.feat_disc_y = models::build_feature_discriminator(fd, build_rng);
  }
  state_.rng = Rng(config_.seed).split(20);
  state_.iteration = 0;
  init_optimizers();
}

Trainer::Trainer(const ExperimentConfig& config, const fs::path& checkpoint)
    : config_(config) {
  config_.validate();
  load_data();
  resolve_encoder();

  BinaryReader r = BinaryReader::from_file(checkpoint);
  require(r.u32() == 0x4b434752u, ErrorCategory::integrity,
          "not a training checkpoint: " + checkpoint.string());
  const uint32_t version = r.u32();
  require(version == 1, ErrorCategory::version,
          "unsupported checkpoint version " + std::to_string(version) +
              " (no migration path)");
  const uint64_t stored_cfg = r.u64();
  require(stored_cfg == config_.hash(), ErrorCategory::config,
          "checkpoint was produced by a different config");
  const Mode stored_mode = static_cast<Mode>(r.u8());
  require(stored_mode == config_.mode, ErrorCategory::config,
          "checkpoint mode differs from config");
  r.f64();  // effective omega, informational

  state_.iteration = r.i64();
  Rng::State rs;
  for (auto& w : rs.s) w = r.u64();
  rs.has_spare = r.u8() != 0;
  rs.spare = r.f64();
  state_.rng.set_state(rs);

  auto read_sampler = [&](data::SamplerState& s) {
    s.permutation = r.u32_vec();
    s.cursor = r.u64();
  };
  read_sampler(state_.sampler_x);
  read_sampler(state_.sampler_y);

  auto mu_x = r.f64_vec();
  auto mu_y = r.f64_vec();
  state_.mu_x = Eigen::Map<const VectorXd>(mu_x.data(), mu_x.size());
  state_.mu_y = Eigen::Map<const VectorXd>(mu_y.data(), mu_y.size());

  state_.bundle = models::ModelBundle::load(r);
  if (config_.uses_encoder()) {
    const uint64_t ae_hash = features::load_ae_checkpoint(config_.ae_checkpoint).hash;
    require(state_.bundle.ae_hash == ae_hash, ErrorCategory::dependency,
            "checkpoint depends on a different AE (hash mismatch)");
  }

  init_optimizers();
  opt_d_->load(r);
  opt_g_->load(r);
}

void Trainer::load_data() {
  const auto& ds = config_.dataset;
  if (ds.kind == "synthetic") {
    data::SyntheticSpec spec = ds.synthetic;
    require(spec.image_size == config_.image_size, ErrorCategory::config,
            "synthetic image_size must match experiment image_size");
    auto pair = data::generate_synthetic_pair(spec);
    data_x_ = std::move(pair.first);
    data_y_ = std::move(pair.second);
  } else {
    auto load_dir = [&](const std::string& p, const char* id) {
      const fs::path dir(p);
      if (fs::exists(dir / "attributes.csv")) {
        auto loaded = data::load_synthetic_dataset(dir, id);
        require(loaded.height() == config_.image_size, ErrorCategory::config,
                "dataset in " + p + " does not match image_size");
        return loaded;
      }
      return data::load_image_domain(dir, config_.image_size);
    };
    data_x_ = load_dir(ds.path_x, "x");
    data_y_ = load_dir(ds.path_y, "y");
  }
  if (ds.augment_factor_x > 1)
    data_x_ = data::augment_affine(data_x_, ds.augment_factor_x, ds.affine,
                                   config_.seed ^ 0xA1u);
  if (ds.augment_factor_y > 1)
    data_y_ = data::augment_affine(data_y_, ds.augment_factor_y, ds.affine,
                                   config_.seed ^ 0xA2u);
  data_x_.validate();
  data_y_.validate();
}

void Trainer::resolve_encoder() {
  if (!config_.uses_encoder()) return;
  auto loaded = features::load_ae_checkpoint(config_.ae_checkpoint);
  require(loaded.checkpoint.encoder.image_size == config_.image_size,
          ErrorCategory::dependency, "AE was trained at a different image size");
  state_.encoder = std::move(loaded.checkpoint.encoder);
  state_.bundle.ae_hash = loaded.hash;
  enc_fake_x_ = clone_encoder(*state_.encoder);
  enc_fake_y_ = clone_encoder(*state_.encoder);
  precompute_real_features();
}

void Trainer::precompute_real_features() {
  auto encode_all = [&](const data::DomainDataset& d) {
    MatrixXd feats(d.size(), state_.encoder->feature_dim);
    const Index chunk = 256;
    for (Index start = 0; start < d.size(); start += chunk) {
      const Index b = std::min(chunk, d.size() - start);
      Tensor block({b, d.channels(), d.height(), d.width()});
      std::copy(d.image_data(start), d.image_data(start) + b * d.image_numel(),
                block.data());
      feats.middleRows(start, b) = features::encode(*state_.encoder, block);
    }
    return feats;
  };
  real_features_x_ = encode_all(data_x_);
  real_features_y_ = encode_all(data_y_);
  state_.mu_x = real_features_x_.colwise().mean();
  state_.mu_y = real_features_y_.colwise().mean();
}

void Trainer::init_optimizers() {
  nn::AdamConfig ac;
  ac.lr = config_.optimizer.lr;
  ac.beta1 = config_.optimizer.beta1;
  ac.beta2 = config_.optimizer.beta2;
  nn::AdamConfig dc = ac;
  dc.lr = ac.lr * config_.optimizer.d_lr_scale;
  opt_d_.emplace(state_.bundle.discriminator_params(), dc);
  opt_g_.emplace(state_.bundle.generator_params(), ac);
}

Tensor Trainer::real_feature_rows(const std::vector<uint32_t>& indices,
                                  bool domain_x) const {
  const MatrixXd& feats = domain_x ? real_features_x_ : real_features_y_;
  Tensor out({static_cast<Index>(indices.size()), feats.cols()});
  auto m = out.mat(out.dim(0), out.dim(1));
  for (size_t i = 0; i < indices.size(); ++i)
    m.row(static_cast<Index>(i)) = feats.row(indices[i]);
  return out;
}

void Trainer::abort_non_finite(const std::string& where) {
  std::string snapshot_note;
  if (!run_dir_.empty()) {
    const fs::path snap =
        run_dir_ / "checkpoints" /
        ("diagnostic_iter_" + std::to_string(state_.iteration) + ".ckpt");
    try {
      save_checkpoint(snap);
      snapshot_note = "; diagnostic snapshot at " + snap.string();
    } catch (const Error&) {
      snapshot_note = "; diagnostic snapshot failed";
    }
  }
  fail(ErrorCategory::training,
       "non-finite loss in " + where + " at iteration " +
           std::to_string(state_.iteration) + snapshot_note);
}

void Trainer::discriminator_phase(const data::Batch& batch_x,
                                  const data::Batch& batch_y, const Tensor& z,
                                  objectives::LossBreakdown& losses) {
  require(batch_x.batch_size() == batch_y.batch_size() &&
              batch_x.batch_size() == z.dim(0),
          ErrorCategory::shape, "batch sizes must agree");
  auto& b = state_.bundle;
  opt_d_->zero_grad();

  // Each discriminator minimizes its own BCE; fakes enter as constants
  // (the generator backward never runs in this phase).
  auto image_term = [&](models::Discriminator& d, const Tensor& real,
                        const Tensor& fake) {
    Tensor p_real = d.discriminate(real, true);
    Eigen::ArrayXd pr = as_array(p_real);
    d.net.backward(from_array(objectives::discriminator_real_grad(pr), p_real.shape()));
    Tensor p_fake = d.discriminate(fake, true);
    Eigen::ArrayXd pf = as_array(p_fake);
    d.net.backward(from_array(objectives::discriminator_fake_grad(pf), p_fake.shape()));
    return objectives::discriminator_loss(pr, pf);
  };

  if (config_.mode == Mode::cogan) {
    fake_x_ = b.gen_x.generate(z, true);
    losses.d_x = image_term(b.disc_x, batch_x.images, fake_x_);
    fake_y_ = b.gen_y.generate(z, true);
    losses.d_y = image_term(b.disc_y, batch_y.images, fake_y_);
  } else {
    fake_x_ = b.gen_x.generate(z, true);
    fake_y_ = b.gen_y.generate(z, true);
    losses.d_x = image_term(b.disc_x, batch_x.images, fake_x_);
    losses.d_y = image_term(b.disc_y, batch_y.images, fake_y_);

    // Feature discriminators: real features are precomputed (the encoder is
    // frozen); fake features keep their caches alive in the per-domain
    // encoder workers for the generator phase.
    Tensor feat_real_x = real_feature_rows(batch_x.indices, true);
    Tensor feat_real_y = real_feature_rows(batch_y.indices, false);
    enc_fake_x_->net.zero_grad();
    enc_fake_y_->net.zero_grad();
    feat_fake_x_ = enc_fake_x_->net.forward(fake_x_, false);
    feat_fake_y_ = enc_fake_y_->net.forward(fake_y_, false);

    auto feature_term = [&](models::FeatureDiscriminator& fd, const Tensor& real,
                            const Tensor& fake) {
      Tensor p_real = fd.discriminate(real, true);
      Eigen::ArrayXd pr = as_array(p_real);
      fd.net.backward(from_array(objectives::discriminator_real_grad(pr), p_real.shape()));
      Tensor p_fake = fd.discriminate(fake, true);
      Eigen::ArrayXd pf = as_array(p_fake);
      fd.net.backward(from_array(objectives::discriminator_fake_grad(pf), p_fake.shape()));
      return objectives::discriminator_loss(pr, pf);
    };
    losses.d_xf = feature_term(*b.feat_disc_x, feat_real_x, feat_fake_x_);
    losses.d_yf = feature_term(*b.feat_disc_y, feat_real_y, feat_fake_y_);
  }

  losses.total_d = losses.d_x + losses.d_y + losses.d_xf + losses.d_yf;
  if (!std::isfinite(losses.total_d) || !opt_d_->grads_finite())
    abort_non_finite("discriminator phase");
  opt_d_->step();
  for (const nn::Param* p : opt_d_->params())
    if (!p->value.all_finite()) abort_non_finite("discriminator update overflow");
}

void Trainer::generator_phase(const Tensor& z, objectives::LossBreakdown& losses) {
  auto& b = state_.bundle;
  opt_g_->zero_grad();
  const objectives::LossVariant& variant = config_.loss_variant;
  const double omega = config_.effective_omega();

  if (config_.mode == Mode::cogan) {
    // Domains run start-to-finish one at a time: the shared trunk's caches
    // must belong to the domain being backpropagated.
    auto domain_term = [&](models::Generator& g, models::Discriminator& d) {
      Tensor fake = g.generate(z, true);
      Tensor p = d.discriminate(fake, true);
      Eigen::ArrayXd pf = as_array(p);
      Tensor g_img =
          d.net.backward(from_array(objectives::generator_adversarial_loss_grad(pf, variant),
                                    p.shape()));
      g.net.backward(g_img);
      return objectives::generator_adversarial_loss(pf, variant);
    };
    losses.g_x_adv = domain_term(b.gen_x, b.disc_x);
    losses.g_y_adv = domain_term(b.gen_y, b.disc_y);
    losses.fc = 0.0;
  } else {
    // Adversarial image terms against the freshly updated discriminators.
    auto adv_image = [&](models::Discriminator& d, const Tensor& fake, Tensor& g_img) {
      Tensor p = d.discriminate(fake, true);
      Eigen::ArrayXd pf = as_array(p);
      g_img = d.net.backward(
          from_array(objectives::generator_adversarial_loss_grad(pf, variant), p.shape()));
      return objectives::generator_adversarial_loss(pf, variant);
    };
    auto adv_feature = [&](models::FeatureDiscriminator& fd, const Tensor& feat,
                           Tensor& g_feat) {
      Tensor p = fd.discriminate(feat, true);
      Eigen::ArrayXd pf = as_array(p);
      g_feat = fd.net.backward(
          from_array(objectives::generator_adversarial_loss_grad(pf, variant), p.shape()));
      return objectives::generator_adversarial_loss(pf, variant);
    };

    const MatrixXd fx = feat_matrix(feat_fake_x_);
    const MatrixXd fy = feat_matrix(feat_fake_y_);
    losses.fc = objectives::feature_covariance_loss(fx, fy, state_.mu_x, state_.mu_y,
                                                    variant);
    MatrixXd gfc_x, gfc_y;
    objectives::feature_covariance_loss_grad(fx, fy, state_.mu_x, state_.mu_y, variant,
                                             gfc_x, gfc_y);

    Tensor g_img_x, g_feat_x;
    losses.g_x_adv = adv_image(b.disc_x, fake_x_, g_img_x);
    losses.g_xf_adv = adv_feature(*b.feat_disc_x, feat_fake_x_, g_feat_x);
    g_feat_x.mat(g_feat_x.dim(0), g_feat_x.dim(1)) += omega * gfc_x;
    Tensor g_img_x2 = enc_fake_x_->net.backward(g_feat_x);
    g_img_x.array() += g_img_x2.array();
    b.gen_x.net.backward(g_img_x);

    Tensor g_img_y, g_feat_y;
    losses.g_y_adv = adv_image(b.disc_y, fake_y_, g_img_y);
    losses.g_yf_adv = adv_feature(*b.feat_disc_y, feat_fake_y_, g_feat_y);
    g_feat_y.mat(g_feat_y.dim(0), g_feat_y.dim(1)) += omega * gfc_y;
    Tensor g_img_y2 = enc_fake_y_->net.backward(g_feat_y);
    g_img_y.array() += g_img_y2.array();
    b.gen_y.net.backward(g_img_y);
  }

  losses.omega = omega;
  losses.total_g = losses.g_x_adv + losses.g_y_adv + losses.g_xf_adv +
                   losses.g_yf_adv + omega * losses.fc;
  if (!std::isfinite(losses.total_g) || !opt_g_->grads_finite())
    abort_non_finite("generator phase");
  opt_g_->step();
  for (const nn::Param* p : opt_g_->params())
    if (!p->value.all_finite()) abort_non_finite("generator update overflow");
}

objectives::LossBreakdown Trainer::train_step(const data::Batch& batch_x,
                                              const data::Batch& batch_y,
                                              const Tensor& z) {
  objectives::LossBreakdown losses;
  // Non-finite values surface either as a numeric error from the
  // probability checks or through the pre-step finiteness guards; both
  // become a training abort with a diagnostic snapshot.
  try {
    discriminator_phase(batch_x, batch_y, z, losses);
    generator_phase(z, losses);
  } catch (const Error& e) {
    if (e.category() == ErrorCategory::numeric)
      abort_non_finite(std::string("train_step: ") + e.what());
    throw;
  }
  state_.bundle.iteration = ++state_.iteration;
  return losses;
}

double Trainer::generator_objective(const Tensor& z) {
  auto& b = state_.bundle;
  const objectives::LossVariant& variant = config_.loss_variant;
  const double omega = config_.effective_omega();

  Tensor fx = b.gen_x.generate(z, true);
  Tensor fy = b.gen_y.generate(z, true);
  const double adv_x = objectives::generator_adversarial_loss(
      as_array(b.disc_x.discriminate(fx, true)), variant);
  const double adv_y = objectives::generator_adversarial_loss(
      as_array(b.disc_y.discriminate(fy, true)), variant);
  if (config_.mode == Mode::cogan) return adv_x + adv_y;

  Tensor feat_x = enc_fake_x_->net.forward(fx, false);
  Tensor feat_y = enc_fake_y_->net.forward(fy, false);
  const double adv_xf = objectives::generator_adversarial_loss(
      as_array(b.feat_disc_x->discriminate(feat_x, true)), variant);
  const double adv_yf = objectives::generator_adversarial_loss(
      as_array(b.feat_disc_y->discriminate(feat_y, true)), variant);
  const double fc = objectives::feature_covariance_loss(
      feat_matrix(feat_x), feat_matrix(feat_y), state_.mu_x, state_.mu_y, variant);
  return adv_x + adv_y + adv_xf + adv_yf + omega * fc;
}

void Trainer::next_batches(data::Batch& bx, data::Batch& by, Tensor& z) {
  bx = data::sample_batch(data_x_, config_.batch_size, state_.sampler_x, state_.rng);
  by = data::sample_batch(data_y_, config_.batch_size, state_.sampler_y, state_.rng);
  z = models::sample_latent(config_.latent, config_.batch_size, state_.rng);
}

uint64_t Trainer::encoder_checksum() const {
  return state_.encoder ? state_.encoder->params_checksum() : 0;
}

double Trainer::covariance_distance_diagnostic(Index n_samples) {
  if (!state_.encoder) return std::numeric_limits<double>::quiet_NaN();
  Rng diag = Rng(config_.seed ^ 0xD1A6D1A6ULL).split(static_cast<uint64_t>(state_.iteration));
  Tensor z = models::sample_latent(config_.latent, n_samples, diag);
  Tensor fx = state_.bundle.gen_x.generate(z, false);
  Tensor fy = state_.bundle.gen_y.generate(z, false);
  auto sx = features::compute_feature_stats(features::encode(*enc_fake_x_, fx));
  auto sy = features::compute_feature_stats(features::encode(*enc_fake_x_, fy));
  return metrics::covariance_distance(sx, sy, metrics::CovNorm::frobenius);
}

std::filesystem::path Trainer::run(const fs::path& run_dir) {
  run_dir_ = run_dir;
  fs::create_directories(run_dir / "checkpoints");
  fs::create_directories(run_dir / "logs");
  if (config_.sample_every > 0) fs::create_directories(run_dir / "samples");
  write_text_atomic(run_dir / "config.json", experiment_config_to_json(config_));

  const fs::path log_path = run_dir / "logs" / "metrics.jsonl";
  std::ofstream log(log_path, state_.iteration > 0 ? std::ios::app : std::ios::trunc);
  require(log.good(), ErrorCategory::io, "cannot open " + log_path.string());

  const auto t0 = std::chrono::steady_clock::now();
  data::Batch bx, by;
  Tensor z;
  while (state_.iteration < config_.iterations) {
    for (Index extra = 1; extra < config_.d_steps_per_g_step; ++extra) {
      objectives::LossBreakdown d_only;
      next_batches(bx, by, z);
      try {
        discriminator_phase(bx, by, z, d_only);
      } catch (const Error& e) {
        if (e.category() == ErrorCategory::numeric)
          abort_non_finite(std::string("discriminator step: ") + e.what());
        throw;
      }
    }
    next_batches(bx, by, z);
    const objectives::LossBreakdown losses = train_step(bx, by, z);
    const int64_t it = state_.iteration;

    if (config_.log_every > 0 &&
        (it % config_.log_every == 0 || it == config_.iterations)) {
      const double wallclock =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const double cov_dist = covariance_distance_diagnostic();
      json rec{{"iteration", it},
               {"d_x", losses.d_x},
               {"d_y", losses.d_y},
               {"d_xf", losses.d_xf},
               {"d_yf", losses.d_yf},
               {"g_x_adv", losses.g_x_adv},
               {"g_y_adv", losses.g_y_adv},
               {"g_xf_adv", losses.g_xf_adv},
               {"g_yf_adv", losses.g_yf_adv},
               {"fc", losses.fc},
               {"omega", losses.omega},
               {"total_d", losses.total_d},
               {"total_g", losses.total_g},
               {"covariance_distance",
                std::isfinite(cov_dist) ? json(cov_dist) : json(nullptr)},
               {"wallclock", wallclock}};
      log << rec.dump() << "\n";
      log.flush();
    }
    if (config_.checkpoint_every > 0 && it % config_.checkpoint_every == 0 &&
        it < config_.iterations)
      save_checkpoint(run_dir / "checkpoints" / ("iter_" + std::to_string(it) + ".ckpt"));
    if (config_.sample_every > 0 && it % config_.sample_every == 0) {
      auto grid = infer::sample_pairs(state_.bundle, 0, 8,
                                      config_.seed ^ static_cast<uint64_t>(it));
      infer::write_grid(grid, run_dir / "samples" / ("iter_" + std::to_string(it) + ".png"));
    }
  }

  if (config_.mapper_steps > 0 && state_.encoder) {
    state_.bundle.mapper =
        infer::train_z_mapper(state_.bundle, *state_.encoder, config_.mapper_steps,
                              config_.batch_size, config_.mapper_lr,
                              config_.seed ^ 0x33AA33AAULL);
  }

  const fs::path final_path =
      run_dir / "checkpoints" / ("iter_" + std::to_string(config_.iterations) + ".ckpt");
  save_checkpoint(final_path);
  run_dir_.clear();
  return final_path;
}

namespace {
constexpr uint32_t kCkptMagic = 0x4b434752u;  // "RGCK"
constexpr uint32_t kCkptVersion = 1;
}  // namespace

void Trainer::save_checkpoint(const fs::path& path) const {
  BinaryWriter w;
  w.u32(kCkptMagic);
  w.u32(kCkptVersion);
  w.u64(config_.hash());
  w.u8(static_cast<uint8_t>(config_.mode));
  w.f64(config_.effective_omega());
  w.i64(state_.iteration);
  const Rng::State rs = state_.rng.state();
  for (uint64_t word : rs.s) w.u64(word);
  w.u8(rs.has_spare ? 1 : 0);
  w.f64(rs.spare);
  auto write_sampler = [&](const data::SamplerState& s) {
    w.u32_vec(s.permutation);
    w.u64(s.cursor);
  };
  write_sampler(state_.sampler_x);
  write_sampler(state_.sampler_y);
  w.f64_span(state_.mu_x.data(), state_.mu_x.size());
  w.f64_span(state_.mu_y.data(), state_.mu_y.size());
  state_.bundle.save(w);
  opt_d_->save(w);
  opt_g_->save(w);
  w.write_file(path);
}

LoadedCheckpoint load_checkpoint(const fs::path& path, uint64_t expected_ae_hash) {
  BinaryReader r = BinaryReader::from_file(path);
  require(r.u32() == kCkptMagic, ErrorCategory::integrity,
          "not a training checkpoint: " + path.string());
  const uint32_t version = r.u32();
  require(version == kCkptVersion, ErrorCategory::version,
          "unsupported checkpoint version " + std::to_string(version) +
              " (no migration path)");
  LoadedCheckpoint out;
  out.file_hash = r.payload_checksum();
  out.config_hash = r.u64();
  out.mode = static_cast<Mode>(r.u8());
  out.omega = r.f64();
  r.i64();  // iteration (also in bundle)
  for (int i = 0; i < 4; ++i) r.u64();
  r.u8();
  r.f64();
  r.u32_vec();
  r.u64();
  r.u32_vec();
  r.u64();
  auto mx = r.f64_vec();
  auto my = r.f64_vec();
  out.mu_x = Eigen::Map<const VectorXd>(mx.data(), mx.size());
  out.mu_y = Eigen::Map<const VectorXd>(my.data(), my.size());
  out.bundle = models::ModelBundle::load(r);
  if (expected_ae_hash != 0)
    require(out.bundle.ae_hash == expected_ae_hash, ErrorCategory::dependency,
            "checkpoint depends on a different AE (hash mismatch)");
  return out;
}

std::filesystem::path train(const ExperimentConfig& config, const fs::path& run_dir) {
  Trainer trainer(config);
  return trainer.run(run_dir);
}

}  // namespace rgan::train

// Command line front end: every subcommand wraps one library workflow and
// leaves a self-describing output directory (config copy + hashes) behind,
// so any result can be replayed from its persisted inputs.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "rgan/config_io.hpp"
#include "rgan/data.hpp"
#include "rgan/image_io.hpp"
#include "rgan/inference.hpp"
#include "rgan/metrics.hpp"
#include "rgan/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rgan;

namespace {

std::string hex64(uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// --- make-data -----------------------------------------------------------

int cmd_make_data(const std::string& spec_path, const std::string& out_dir,
                  std::optional<uint64_t> seed, Index augment_x, Index augment_y) {
  data::SyntheticSpec spec = load_synthetic_spec(spec_path);
  if (seed) spec.seed = *seed;
  auto [dx, dy] = data::generate_synthetic_pair(spec);
  if (augment_x > 1) dx = data::augment_affine(dx, augment_x, {}, spec.seed ^ 0xA1u);
  if (augment_y > 1) dy = data::augment_affine(dy, augment_y, {}, spec.seed ^ 0xA2u);

  const fs::path out(out_dir);
  fs::create_directories(out);
  data::save_dataset(dx, out / "x");
  data::save_dataset(dy, out / "y");
  write_text_atomic(out / "spec.json", synthetic_spec_to_json(spec));

  json summary{{"x", (out / "x").string()},
               {"y", (out / "y").string()},
               {"n_per_domain", dx.size()},
               {"image_size", spec.image_size}};
  std::cout << summary.dump() << "\n";
  return 0;
}

// --- pretrain-ae -----------------------------------------------------------

data::DomainDataset load_any_domain(const fs::path& dir, const char* id,
                                    Index image_size) {
  if (fs::exists(dir / "attributes.csv")) {
    auto ds = data::load_synthetic_dataset(dir, id);
    require(ds.height() == image_size, ErrorCategory::config,
            dir.string() + " does not match image_size");
    return ds;
  }
  return data::load_image_domain(dir, image_size);
}

int cmd_pretrain_ae(const std::string& config_path, const std::string& data_x,
                    const std::string& data_y, const std::string& out_path,
                    std::optional<uint64_t> seed) {
  features::AeTrainConfig cfg = load_ae_config(config_path);
  if (seed) cfg.seed = *seed;
  auto dx = load_any_domain(data_x, "x", cfg.image_size);
  auto dy = load_any_domain(data_y, "y", cfg.image_size);

  auto result = features::pretrain_autoencoder(dx, dy, cfg);

  features::AeCheckpoint ckpt;
  ckpt.encoder = std::move(result.encoder);
  ckpt.decoder = std::move(result.decoder);
  ckpt.noise = cfg.noise;
  ckpt.config_hash = fnv1a64(ae_config_to_json(cfg));
  const uint64_t ae_hash = features::save_ae_checkpoint(ckpt, out_path);

  std::map<std::string, features::FeatureStats> stats;
  stats.emplace(dx.domain_id(), features::compute_domain_feature_stats(ckpt.encoder, dx));
  stats.emplace(dy.domain_id(), features::compute_domain_feature_stats(ckpt.encoder, dy));
  features::save_feature_stats(stats, ae_hash, out_path + ".stats");

  json summary{{"checkpoint", out_path},
               {"ae_hash", hex64(ae_hash)},
               {"holdout_loss_before", result.holdout_loss_before},
               {"holdout_loss_after", result.holdout_loss_after},
               {"steps_completed", result.steps_completed}};
  std::cout << summary.dump() << "\n";

  // Divergence keeps the last finite checkpoint on disk but exits unhealthy.
  require(!result.diverged, ErrorCategory::training,
          "AE training diverged at step " + std::to_string(result.steps_completed) +
              "; last finite checkpoint written to " + out_path);
  return 0;
}

// --- train -----------------------------------------------------------------

int cmd_train(const std::string& config_path, const std::string& out_dir,
              std::optional<std::string> mode, std::optional<double> omega,
              std::optional<Index> iterations, std::optional<uint64_t> seed,
              bool deterministic, const std::string& resume) {
  train::ExperimentConfig cfg = load_experiment_config(config_path);
  if (mode) cfg.mode = train::mode_from_name(*mode);
  if (omega) cfg.omega = *omega;
  if (iterations) cfg.iterations = *iterations;
  if (seed) cfg.seed = *seed;
  if (deterministic) cfg.deterministic = true;
  cfg.validate();

  std::optional<train::Trainer> trainer;
  if (resume.empty())
    trainer.emplace(cfg);
  else
    trainer.emplace(cfg, fs::path(resume));
  const fs::path final_ckpt = trainer->run(out_dir);

  json summary{{"run_dir", out_dir},
               {"final_checkpoint", final_ckpt.string()},
               {"config_hash", hex64(cfg.hash())},
               {"iterations", cfg.iterations}};
  std::cout << summary.dump() << "\n";
  return 0;
}

// --- inference commands ------------------------------------------------------

uint64_t ae_hash_for(const std::string& ae_path) {
  if (ae_path.empty()) return 0;
  return features::load_ae_checkpoint(ae_path).hash;
}

int cmd_sample(const std::string& ckpt_path, const std::string& ae_path, Index n,
               uint64_t seed, Index pairs_per_row, const std::string& out_path) {
  auto loaded = train::load_checkpoint(ckpt_path, ae_hash_for(ae_path));
  auto grid = infer::sample_pairs(loaded.bundle, loaded.file_hash, n, seed, pairs_per_row);
  infer::write_grid(grid, out_path);
  json summary{{"png", out_path},
               {"sidecar", out_path + ".json"},
               {"rows", grid.rows},
               {"cols", grid.cols}};
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_interpolate(const std::string& ckpt_path, const std::string& ae_path,
                    Index steps, uint64_t seed, bool spherical,
                    const std::string& out_path) {
  auto loaded = train::load_checkpoint(ckpt_path, ae_hash_for(ae_path));
  Rng rng(seed);
  const Index z_dim = loaded.bundle.gen_x.latent.z_dim;
  Tensor z_pair = models::sample_latent(loaded.bundle.gen_x.latent, 2, rng);
  VectorXd z0 = z_pair.mat(2, z_dim).row(0);
  VectorXd z1 = z_pair.mat(2, z_dim).row(1);
  auto grid = infer::interpolate(loaded.bundle, loaded.file_hash, z0, z1, steps, spherical);
  infer::write_grid(grid, out_path);
  json summary{{"png", out_path}, {"steps", steps}, {"spherical", spherical}};
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_reconstruct(const std::string& ckpt_path, const std::string& ae_path,
                    const std::string& image_path, const std::string& domain,
                    const std::string& out_prefix) {
  auto ae = features::load_ae_checkpoint(ae_path);
  auto loaded = train::load_checkpoint(ckpt_path, ae.hash);
  Tensor img = io::center_crop_resize(io::raw_to_chw(io::decode_image(image_path)),
                                      ae.checkpoint.encoder.image_size);
  auto rec = infer::reconstruct(loaded.bundle, ae.checkpoint.encoder, img, domain);
  io::write_png(out_prefix + "_recon.png", rec.reconstruction);
  io::write_png(out_prefix + "_resemble.png", rec.cross_domain);
  json summary{{"reconstruction", out_prefix + "_recon.png"},
               {"resemble", out_prefix + "_resemble.png"}};
  std::cout << summary.dump() << "\n";
  return 0;
}

// --- evaluate ----------------------------------------------------------------

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= s.size()) {
    const size_t comma = s.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

Tensor dataset_stack(const data::DomainDataset& d) {
  Tensor t({d.size(), d.channels(), d.height(), d.width()});
  std::copy(d.image_data(0), d.image_data(0) + t.numel(), t.data());
  return t;
}

int cmd_evaluate(const std::string& ckpt_path, const std::string& ae_path,
                 const std::string& dir_a, const std::string& dir_b,
                 const std::string& data_x, const std::string& data_y,
                 const std::string& metrics_csv, Index n_samples, Index n_pairs,
                 uint64_t seed, Index image_size, const std::string& shape_x,
                 const std::string& shape_y, const std::string& out_path) {
  const auto metric_names = split_csv(metrics_csv);
  std::map<std::string, metrics::MetricReport> reports;
  std::map<std::string, std::string> meta;
  meta["seed"] = std::to_string(seed);

  std::unique_ptr<metrics::FeatureExtractor> extractor;
  std::optional<features::LoadedAe> ae;
  if (!ae_path.empty()) {
    ae = features::load_ae_checkpoint(ae_path);
    extractor = std::make_unique<metrics::EncoderExtractor>(ae->checkpoint.encoder);
    meta["ae_hash"] = hex64(ae->hash);
  } else {
    extractor = std::make_unique<metrics::IdentityExtractor>();
  }
  meta["extractor"] = extractor->id();

  if (!dir_a.empty() || !dir_b.empty()) {
    // Directory mode: metrics between two image folders.
    require(!dir_a.empty() && !dir_b.empty(), ErrorCategory::config,
            "evaluate needs both --dir-a and --dir-b");
    Tensor a = dataset_stack(load_any_domain(dir_a, "a", image_size));
    Tensor b = dataset_stack(load_any_domain(dir_b, "b", image_size));
    for (const auto& m : metric_names) {
      if (m == "feature_fid") {
        reports["feature_fid"] = metrics::feature_fid(*extractor, a, b);
      } else if (m == "ms_ssim") {
        auto ra = metrics::mean_pairwise_ms_ssim(a, n_pairs, seed);
        ra.name = "ms_ssim_a";
        auto rb = metrics::mean_pairwise_ms_ssim(b, n_pairs, seed ^ 1);
        rb.name = "ms_ssim_b";
        reports["ms_ssim_a"] = std::move(ra);
        reports["ms_ssim_b"] = std::move(rb);
      } else if (m == "covariance_distance") {
        auto sa = features::compute_feature_stats(extractor->extract(a));
        auto sb = features::compute_feature_stats(extractor->extract(b));
        reports["covariance_distance"] =
            metrics::make_report("covariance_distance",
                                 {metrics::covariance_distance(sa, sb)});
        reports["covariance_distance"].extractor_id = extractor->id();
      } else {
        fail(ErrorCategory::config, "unsupported metric in directory mode: " + m);
      }
    }
  } else {
    // Checkpoint mode: metrics over paired generations.
    require(!ckpt_path.empty(), ErrorCategory::config,
            "evaluate needs --checkpoint or --dir-a/--dir-b");
    auto loaded = train::load_checkpoint(ckpt_path, ae ? ae->hash : 0);
    meta["checkpoint_hash"] = hex64(loaded.file_hash);
    meta["config_hash"] = hex64(loaded.config_hash);

    Rng rng(seed);
    Tensor z = models::sample_latent(loaded.bundle.gen_x.latent, n_samples, rng);
    Tensor fake_x = loaded.bundle.gen_x.generate(z, false);
    Tensor fake_y = loaded.bundle.gen_y.generate(z, false);

    for (const auto& m : metric_names) {
      if (m == "ms_ssim") {
        auto rx = metrics::mean_pairwise_ms_ssim(fake_x, n_pairs, seed);
        rx.name = "ms_ssim_x";
        auto ry = metrics::mean_pairwise_ms_ssim(fake_y, n_pairs, seed ^ 1);
        ry.name = "ms_ssim_y";
        reports["ms_ssim_x"] = std::move(rx);
        reports["ms_ssim_y"] = std::move(ry);
      } else if (m == "covariance_distance") {
        auto sx = features::compute_feature_stats(extractor->extract(fake_x));
        auto sy = features::compute_feature_stats(extractor->extract(fake_y));
        reports["covariance_distance"] =
            metrics::make_report("covariance_distance",
                                 {metrics::covariance_distance(sx, sy)});
        reports["covariance_distance"].extractor_id = extractor->id();
      } else if (m == "feature_fid") {
        require(!data_x.empty() && !data_y.empty(), ErrorCategory::config,
                "feature_fid against real data needs --data-x and --data-y");
        Tensor real_x = dataset_stack(load_any_domain(data_x, "x", image_size));
        Tensor real_y = dataset_stack(load_any_domain(data_y, "y", image_size));
        auto fx = metrics::feature_fid(*extractor, fake_x, real_x);
        fx.name = "feature_fid_x";
        auto fy = metrics::feature_fid(*extractor, fake_y, real_y);
        fy.name = "feature_fid_y";
        reports["feature_fid_x"] = std::move(fx);
        reports["feature_fid_y"] = std::move(fy);
      } else if (m == "attribute_correlation") {
        auto corr = metrics::attribute_correlation(
            fake_x, fake_y, data::shape_class_from_name(shape_x),
            data::shape_class_from_name(shape_y));
        reports["attribute_correlation_hue"] = corr.hue;
        reports["attribute_correlation_center_x"] = corr.center_x;
        reports["attribute_correlation_center_y"] = corr.center_y;
        reports["attribute_correlation_size"] = corr.size;
      } else {
        fail(ErrorCategory::config, "unknown metric: " + m);
      }
    }
  }

  write_text_atomic(out_path, reports_to_json(reports, meta));
  std::cout << json{{"report", out_path}, {"metrics", metric_names.size()}}.dump()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coupled two-domain GAN laboratory"};
  app.require_subcommand(1);

  // make-data
  auto* make_data = app.add_subcommand("make-data", "render a synthetic domain pair");
  std::string md_spec, md_out;
  std::optional<uint64_t> md_seed;
  Index md_aug_x = 1, md_aug_y = 1;
  make_data->add_option("--spec", md_spec, "synthetic spec JSON")->required();
  make_data->add_option("--out", md_out, "output directory")->required();
  make_data->add_option("--seed", md_seed, "override spec seed");
  make_data->add_option("--augment-x", md_aug_x, "affine copies per image, domain x");
  make_data->add_option("--augment-y", md_aug_y, "affine copies per image, domain y");

  // pretrain-ae
  auto* pretrain = app.add_subcommand("pretrain-ae", "denoising AE over both domains");
  std::string pa_config, pa_dx, pa_dy, pa_out;
  std::optional<uint64_t> pa_seed;
  pretrain->add_option("--config", pa_config, "AE config JSON")->required();
  pretrain->add_option("--data-x", pa_dx, "domain x directory")->required();
  pretrain->add_option("--data-y", pa_dy, "domain y directory")->required();
  pretrain->add_option("--out", pa_out, "AE checkpoint path")->required();
  pretrain->add_option("--seed", pa_seed, "override config seed");

  // train
  auto* tr = app.add_subcommand("train", "train resembled/cogan/ablation_omega0");
  std::string tr_config, tr_out, tr_resume;
  std::optional<std::string> tr_mode;
  std::optional<double> tr_omega;
  std::optional<Index> tr_iters;
  std::optional<uint64_t> tr_seed;
  bool tr_det = false;
  tr->add_option("--config", tr_config, "experiment config JSON")->required();
  tr->add_option("--out", tr_out, "run directory")->required();
  tr->add_option("--mode", tr_mode, "resembled|cogan|ablation_omega0");
  tr->add_option("--omega", tr_omega, "feature covariance weight");
  tr->add_option("--iterations", tr_iters, "training iterations");
  tr->add_option("--seed", tr_seed, "experiment seed");
  tr->add_flag("--deterministic", tr_det, "force deterministic mode");
  tr->add_option("--resume", tr_resume, "checkpoint to resume from");

  // sample
  auto* sm = app.add_subcommand("sample", "paired sample grid from a checkpoint");
  std::string sm_ckpt, sm_ae, sm_out;
  Index sm_n = 8, sm_ppr = 4;
  uint64_t sm_seed = 0;
  sm->add_option("--checkpoint", sm_ckpt, "training checkpoint")->required();
  sm->add_option("--ae", sm_ae, "AE checkpoint (dependency check)");
  sm->add_option("--n", sm_n, "number of pairs");
  sm->add_option("--seed", sm_seed, "latent seed");
  sm->add_option("--pairs-per-row", sm_ppr, "pairs per grid row");
  sm->add_option("--out", sm_out, "output PNG")->required();

  // interpolate
  auto* ip = app.add_subcommand("interpolate", "latent space walk in both domains");
  std::string ip_ckpt, ip_ae, ip_out;
  Index ip_steps = 8;
  uint64_t ip_seed = 0;
  bool ip_spherical = false;
  ip->add_option("--checkpoint", ip_ckpt, "training checkpoint")->required();
  ip->add_option("--ae", ip_ae, "AE checkpoint (dependency check)");
  ip->add_option("--steps", ip_steps, "interpolation points");
  ip->add_option("--seed", ip_seed, "endpoint latent seed");
  ip->add_flag("--spherical", ip_spherical, "slerp instead of lerp");
  ip->add_option("--out", ip_out, "output PNG")->required();

  // reconstruct
  auto* rc = app.add_subcommand("reconstruct", "reconstruction + cross-domain resemble");
  std::string rc_ckpt, rc_ae, rc_img, rc_domain = "x", rc_out;
  rc->add_option("--checkpoint", rc_ckpt, "training checkpoint (with mapper)")->required();
  rc->add_option("--ae", rc_ae, "AE checkpoint")->required();
  rc->add_option("--image", rc_img, "input image (png/jpg)")->required();
  rc->add_option("--domain", rc_domain, "source domain: x|y");
  rc->add_option("--out", rc_out, "output path prefix")->required();

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "quantitative evaluation report");
  std::string ev_ckpt, ev_ae, ev_dir_a, ev_dir_b, ev_data_x, ev_data_y, ev_out;
  std::string ev_metrics = "ms_ssim,covariance_distance";
  std::string ev_shape_x = "circle", ev_shape_y = "square";
  Index ev_n = 1000, ev_pairs = 10000, ev_size = 32;
  uint64_t ev_seed = 0;
  ev->add_option("--checkpoint", ev_ckpt, "training checkpoint");
  ev->add_option("--ae", ev_ae, "AE checkpoint (encoder extractor)");
  ev->add_option("--dir-a", ev_dir_a, "image directory A");
  ev->add_option("--dir-b", ev_dir_b, "image directory B");
  ev->add_option("--data-x", ev_data_x, "real data for feature_fid, domain x");
  ev->add_option("--data-y", ev_data_y, "real data for feature_fid, domain y");
  ev->add_option("--metrics", ev_metrics, "comma list: ms_ssim,feature_fid,covariance_distance,attribute_correlation");
  ev->add_option("--n", ev_n, "generated samples per domain");
  ev->add_option("--pairs", ev_pairs, "MS-SSIM pairs per repeat");
  ev->add_option("--seed", ev_seed, "evaluation seed");
  ev->add_option("--image-size", ev_size, "image size for directory loading");
  ev->add_option("--shape-x", ev_shape_x, "attribute family, domain x");
  ev->add_option("--shape-y", ev_shape_y, "attribute family, domain y");
  ev->add_option("--out", ev_out, "report JSON path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(make_data))
      return cmd_make_data(md_spec, md_out, md_seed, md_aug_x, md_aug_y);
    if (app.got_subcommand(pretrain))
      return cmd_pretrain_ae(pa_config, pa_dx, pa_dy, pa_out, pa_seed);
    if (app.got_subcommand(tr))
      return cmd_train(tr_config, tr_out, tr_mode, tr_omega, tr_iters, tr_seed,
                       tr_det, tr_resume);
    if (app.got_subcommand(sm))
      return cmd_sample(sm_ckpt, sm_ae, sm_n, sm_seed, sm_ppr, sm_out);
    if (app.got_subcommand(ip))
      return cmd_interpolate(ip_ckpt, ip_ae, ip_steps, ip_seed, ip_spherical, ip_out);
    if (app.got_subcommand(rc))
      return cmd_reconstruct(rc_ckpt, rc_ae, rc_img, rc_domain, rc_out);
    if (app.got_subcommand(ev))
      return cmd_evaluate(ev_ckpt, ev_ae, ev_dir_a, ev_dir_b, ev_data_x, ev_data_y,
                          ev_metrics, ev_n, ev_pairs, ev_seed, ev_size, ev_shape_x,
                          ev_shape_y, ev_out);
  } catch (const Error& e) {
    std::cerr << json{{"error", e.category_name()}, {"message", e.what()}}.dump()
              << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}

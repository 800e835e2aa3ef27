#include "rgan/config_io.hpp"

#include <fstream>

#include <json.hpp>

namespace rgan {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

json parse_strict(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  require(!j.is_discarded(), ErrorCategory::config,
          std::string(what) + ": malformed JSON");
  require(j.is_object(), ErrorCategory::config,
          std::string(what) + ": expected a JSON object");
  return j;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const char* where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) {
        ok = true;
        break;
      }
    require(ok, ErrorCategory::config,
            std::string("unknown key \"") + key + "\" in " + where);
  }
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCategory::io, "cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return text;
}

json affine_to_json(const data::AffineParams& a) {
  return json{{"max_rotation_deg", a.max_rotation_deg},
              {"max_translation", a.max_translation},
              {"scale_min", a.scale_min},
              {"scale_max", a.scale_max}};
}

data::AffineParams affine_from_json(const json& j) {
  check_keys(j, {"max_rotation_deg", "max_translation", "scale_min", "scale_max"},
             "affine");
  data::AffineParams a;
  get_if(j, "max_rotation_deg", a.max_rotation_deg);
  get_if(j, "max_translation", a.max_translation);
  get_if(j, "scale_min", a.scale_min);
  get_if(j, "scale_max", a.scale_max);
  return a;
}

json synthetic_to_json_obj(const data::SyntheticSpec& s) {
  return json{{"n_per_domain", s.n_per_domain},
              {"image_size", s.image_size},
              {"shape_x", data::shape_class_name(s.shape_x)},
              {"shape_y", data::shape_class_name(s.shape_y)},
              {"attribute_distribution",
               json{{"center_min", s.attribute_distribution.center_min},
                    {"center_max", s.attribute_distribution.center_max},
                    {"size_min", s.attribute_distribution.size_min},
                    {"size_max", s.attribute_distribution.size_max}}},
              {"seed", s.seed}};
}

data::SyntheticSpec synthetic_from_json_obj(const json& j) {
  check_keys(j,
             {"n_per_domain", "image_size", "shape_x", "shape_y",
              "attribute_distribution", "seed"},
             "synthetic spec");
  data::SyntheticSpec s;
  get_if(j, "n_per_domain", s.n_per_domain);
  get_if(j, "image_size", s.image_size);
  if (j.contains("shape_x"))
    s.shape_x = data::shape_class_from_name(j.at("shape_x").get<std::string>());
  if (j.contains("shape_y"))
    s.shape_y = data::shape_class_from_name(j.at("shape_y").get<std::string>());
  if (j.contains("attribute_distribution")) {
    const json& d = j.at("attribute_distribution");
    check_keys(d, {"center_min", "center_max", "size_min", "size_max"},
               "attribute_distribution");
    get_if(d, "center_min", s.attribute_distribution.center_min);
    get_if(d, "center_max", s.attribute_distribution.center_max);
    get_if(d, "size_min", s.attribute_distribution.size_min);
    get_if(d, "size_max", s.attribute_distribution.size_max);
  }
  get_if(j, "seed", s.seed);
  return s;
}

}  // namespace

std::string experiment_config_to_json(const train::ExperimentConfig& c) {
  json j;
  j["mode"] = train::mode_name(c.mode);
  j["latent"] = json{{"z_dim", c.latent.z_dim},
                     {"distribution",
                      models::latent_distribution_name(c.latent.distribution)}};
  j["omega"] = c.omega;
  j["loss_variant"] =
      json{{"fc_mode", objectives::fc_mode_name(c.loss_variant.fc_mode)},
           {"adversarial_mode",
            objectives::adversarial_mode_name(c.loss_variant.adversarial_mode)}};
  j["image_size"] = c.image_size;
  j["batch_size"] = c.batch_size;
  j["iterations"] = c.iterations;
  j["optimizer"] = json{{"kind", "adam"},
                        {"lr", c.optimizer.lr},
                        {"beta1", c.optimizer.beta1},
                        {"beta2", c.optimizer.beta2},
                        {"d_lr_scale", c.optimizer.d_lr_scale}};
  j["d_steps_per_g_step"] = c.d_steps_per_g_step;
  j["seed"] = c.seed;
  json ds;
  ds["kind"] = c.dataset.kind;
  ds["path_x"] = c.dataset.path_x;
  ds["path_y"] = c.dataset.path_y;
  ds["synthetic"] = synthetic_to_json_obj(c.dataset.synthetic);
  ds["augment_factor_x"] = c.dataset.augment_factor_x;
  ds["augment_factor_y"] = c.dataset.augment_factor_y;
  ds["affine"] = affine_to_json(c.dataset.affine);
  j["dataset"] = std::move(ds);
  j["ae_checkpoint"] = c.ae_checkpoint;
  j["gen_width"] = c.gen_width.base;
  j["disc_width"] = c.disc_width.base;
  j["log_every"] = c.log_every;
  j["checkpoint_every"] = c.checkpoint_every;
  j["sample_every"] = c.sample_every;
  j["mapper_steps"] = c.mapper_steps;
  j["mapper_lr"] = c.mapper_lr;
  j["deterministic"] = c.deterministic;
  return j.dump(2) + "\n";
}

train::ExperimentConfig experiment_config_from_json(const std::string& text) {
  const json j = parse_strict(text, "experiment config");
  check_keys(j,
             {"mode", "latent", "omega", "loss_variant", "image_size", "batch_size",
              "iterations", "optimizer", "d_steps_per_g_step", "seed", "dataset",
              "ae_checkpoint", "gen_width", "disc_width", "log_every",
              "checkpoint_every", "sample_every", "mapper_steps", "mapper_lr",
              "deterministic"},
             "experiment config");
  train::ExperimentConfig c;
  if (j.contains("mode")) c.mode = train::mode_from_name(j.at("mode").get<std::string>());
  if (j.contains("latent")) {
    const json& l = j.at("latent");
    check_keys(l, {"z_dim", "distribution"}, "latent");
    get_if(l, "z_dim", c.latent.z_dim);
    if (l.contains("distribution"))
      c.latent.distribution =
          models::latent_distribution_from_name(l.at("distribution").get<std::string>());
  }
  get_if(j, "omega", c.omega);
  if (j.contains("loss_variant")) {
    const json& v = j.at("loss_variant");
    check_keys(v, {"fc_mode", "adversarial_mode"}, "loss_variant");
    if (v.contains("fc_mode"))
      c.loss_variant.fc_mode =
          objectives::fc_mode_from_name(v.at("fc_mode").get<std::string>());
    if (v.contains("adversarial_mode"))
      c.loss_variant.adversarial_mode = objectives::adversarial_mode_from_name(
          v.at("adversarial_mode").get<std::string>());
  }
  get_if(j, "image_size", c.image_size);
  get_if(j, "batch_size", c.batch_size);
  get_if(j, "iterations", c.iterations);
  if (j.contains("optimizer")) {
    const json& o = j.at("optimizer");
    check_keys(o, {"kind", "lr", "beta1", "beta2", "d_lr_scale"}, "optimizer");
    if (o.contains("kind"))
      require(o.at("kind").get<std::string>() == "adam", ErrorCategory::config,
              "only the adaptive-moment optimizer is supported");
    get_if(o, "lr", c.optimizer.lr);
    get_if(o, "beta1", c.optimizer.beta1);
    get_if(o, "beta2", c.optimizer.beta2);
    get_if(o, "d_lr_scale", c.optimizer.d_lr_scale);
  }
  get_if(j, "d_steps_per_g_step", c.d_steps_per_g_step);
  get_if(j, "seed", c.seed);
  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    check_keys(d,
               {"kind", "path_x", "path_y", "synthetic", "augment_factor_x",
                "augment_factor_y", "affine"},
               "dataset");
    get_if(d, "kind", c.dataset.kind);
    get_if(d, "path_x", c.dataset.path_x);
    get_if(d, "path_y", c.dataset.path_y);
    if (d.contains("synthetic"))
      c.dataset.synthetic = synthetic_from_json_obj(d.at("synthetic"));
    get_if(d, "augment_factor_x", c.dataset.augment_factor_x);
    get_if(d, "augment_factor_y", c.dataset.augment_factor_y);
    if (d.contains("affine")) c.dataset.affine = affine_from_json(d.at("affine"));
  }
  get_if(j, "ae_checkpoint", c.ae_checkpoint);
  get_if(j, "gen_width", c.gen_width.base);
  get_if(j, "disc_width", c.disc_width.base);
  get_if(j, "log_every", c.log_every);
  get_if(j, "checkpoint_every", c.checkpoint_every);
  get_if(j, "sample_every", c.sample_every);
  get_if(j, "mapper_steps", c.mapper_steps);
  get_if(j, "mapper_lr", c.mapper_lr);
  get_if(j, "deterministic", c.deterministic);
  return c;
}

train::ExperimentConfig load_experiment_config(const fs::path& path) {
  return experiment_config_from_json(read_file(path));
}

std::string synthetic_spec_to_json(const data::SyntheticSpec& spec) {
  return synthetic_to_json_obj(spec).dump(2) + "\n";
}

data::SyntheticSpec synthetic_spec_from_json(const std::string& text) {
  return synthetic_from_json_obj(parse_strict(text, "synthetic spec"));
}

data::SyntheticSpec load_synthetic_spec(const fs::path& path) {
  return synthetic_spec_from_json(read_file(path));
}

std::string ae_config_to_json(const features::AeTrainConfig& c) {
  json j;
  j["image_size"] = c.image_size;
  j["base_width"] = c.base_width;
  j["feature_dim"] = c.feature_dim;
  j["noise"] = json{{"kind", features::noise_kind_name(c.noise.kind)},
                    {"magnitude", c.noise.magnitude}};
  j["steps"] = c.steps;
  j["batch_size"] = c.batch_size;
  j["adam"] = json{{"lr", c.adam.lr}, {"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}};
  j["holdout_fraction"] = c.holdout_fraction;
  j["seed"] = c.seed;
  return j.dump(2) + "\n";
}

features::AeTrainConfig ae_config_from_json(const std::string& text) {
  const json j = parse_strict(text, "AE config");
  check_keys(j,
             {"image_size", "base_width", "feature_dim", "noise", "steps",
              "batch_size", "adam", "holdout_fraction", "seed"},
             "AE config");
  features::AeTrainConfig c;
  get_if(j, "image_size", c.image_size);
  get_if(j, "base_width", c.base_width);
  get_if(j, "feature_dim", c.feature_dim);
  if (j.contains("noise")) {
    const json& n = j.at("noise");
    check_keys(n, {"kind", "magnitude"}, "noise");
    if (n.contains("kind"))
      c.noise.kind = features::noise_kind_from_name(n.at("kind").get<std::string>());
    get_if(n, "magnitude", c.noise.magnitude);
  }
  get_if(j, "steps", c.steps);
  get_if(j, "batch_size", c.batch_size);
  if (j.contains("adam")) {
    const json& a = j.at("adam");
    check_keys(a, {"lr", "beta1", "beta2"}, "adam");
    get_if(a, "lr", c.adam.lr);
    get_if(a, "beta1", c.adam.beta1);
    get_if(a, "beta2", c.adam.beta2);
  }
  get_if(j, "holdout_fraction", c.holdout_fraction);
  get_if(j, "seed", c.seed);
  return c;
}

features::AeTrainConfig load_ae_config(const fs::path& path) {
  return ae_config_from_json(read_file(path));
}

std::string reports_to_json(const std::map<std::string, metrics::MetricReport>& reports,
                            const std::map<std::string, std::string>& meta) {
  json j;
  json m = json::object();
  for (const auto& [k, v] : meta) m[k] = v;
  j["meta"] = std::move(m);
  json rs = json::object();
  for (const auto& [name, r] : reports) {
    rs[name] = json{{"values", r.values},
                    {"mean", r.mean},
                    {"std", r.stddev},
                    {"n_repeats", r.n_repeats},
                    {"sample_counts", r.sample_counts},
                    {"extractor", r.extractor_id},
                    {"notes", r.notes}};
  }
  j["metrics"] = std::move(rs);
  return j.dump(2) + "\n";
}

uint64_t train::ExperimentConfig::hash() const {
  return fnv1a64(experiment_config_to_json(*this));
}

}  // namespace rgan

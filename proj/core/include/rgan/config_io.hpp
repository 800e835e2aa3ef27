#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "rgan/feature_space.hpp"
#include "rgan/metrics.hpp"
#include "rgan/trainer.hpp"

namespace rgan {

// JSON forms mirror the config structs field-for-field. Parsers apply
// defaults for absent keys and reject unknown keys, so a config file is
// validated before any side effect happens.

std::string experiment_config_to_json(const train::ExperimentConfig& config);
train::ExperimentConfig experiment_config_from_json(const std::string& text);
train::ExperimentConfig load_experiment_config(const std::filesystem::path& path);

std::string synthetic_spec_to_json(const data::SyntheticSpec& spec);
data::SyntheticSpec synthetic_spec_from_json(const std::string& text);
data::SyntheticSpec load_synthetic_spec(const std::filesystem::path& path);

std::string ae_config_to_json(const features::AeTrainConfig& config);
features::AeTrainConfig ae_config_from_json(const std::string& text);
features::AeTrainConfig load_ae_config(const std::filesystem::path& path);

// Evaluation report: metric name -> report plus provenance metadata.
std::string reports_to_json(const std::map<std::string, metrics::MetricReport>& reports,
                            const std::map<std::string, std::string>& meta);

}  // namespace rgan

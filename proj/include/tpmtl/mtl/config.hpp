#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>

#include "tpmtl/mtl/model.hpp"
#include "tpmtl/mtl/objective.hpp"
#include "tpmtl/mtl/optim.hpp"

namespace tpmtl {

struct TrainConfig {
  ModelConfig model;
  std::size_t batch_size = 1;
  long total_iters = 2000;
  AdamConfig adam;
  std::uint64_t seed = 0;
  std::string data_dir;
  std::string out_dir = "run";
  bool cross_view = false;
  /// Replace the regularizer branch by duplicate 2D heads.
  bool aux_heads_baseline = false;
  AlphaSchedule alpha = AlphaSchedule::half_ramp(2000);
  long log_every = 50;
  long checkpoint_every = 1000;

  /// Model configuration with the baseline flag applied.
  ModelConfig effective_model() const;
  void validate() const;
};

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainConfig& cfg);
/// Fields absent from `j` keep their defaults; unknown keys are rejected.
TrainConfig train_config_from_json(const nlohmann::json& j);
TrainConfig load_train_config(const std::filesystem::path& path);

std::string sample_mode_name(SampleMode mode);
SampleMode parse_sample_mode(const std::string& name);

}  // namespace tpmtl

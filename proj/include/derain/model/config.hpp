#pragma once

#include <array>
#include <string>

#include "json.hpp"

namespace derain::model {

// Network hyperparameters. The defaults describe the full model; the ablation
// variants "G" (no enhancer, no aggregation), "G+E" (no aggregation) and
// "G+E+A" (everything) toggle the two flags.
struct ModelConfig {
  int input_channels = 3;
  std::array<int, 2> encoder_filters{16, 32};
  int residual_blocks = 9;
  int residual_filters = 64;
  bool use_aggregation = true;
  bool use_enhancer = true;
  int enhancer_width = 32;
  int discriminator_layers = 3;
  int patch_receptive_field = 14;

  void validate() const;  // throws ConfigError
  bool operator==(const ModelConfig&) const = default;
};

// Receptive field of one patch score for the configured discriminator depth
// (stride-2 4x4 layers below a stride-1 2x2 head).
int discriminator_receptive_field(int layers);

// variant is one of "G", "G+E", "G+E+A".
void apply_variant(ModelConfig& config, const std::string& variant);
std::string variant_name(const ModelConfig& config);

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

}  // namespace derain::model

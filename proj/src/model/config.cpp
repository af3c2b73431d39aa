#include "derain/model/config.hpp"

#include "derain/core/errors.hpp"

namespace derain::model {

int discriminator_receptive_field(int layers) {
  int rf = 2;
  for (int i = 0; i < layers - 1; ++i) rf = (rf - 1) * 2 + 4;
  return rf;
}

void ModelConfig::validate() const {
  if (input_channels != 1 && input_channels != 3)
    throw ConfigError("input_channels must be 1 or 3, got " + std::to_string(input_channels));
  if (encoder_filters[0] <= 0 || encoder_filters[1] <= 0)
    throw ConfigError("encoder_filters must be positive");
  if (residual_blocks < 1) throw ConfigError("residual_blocks must be at least 1");
  if (residual_filters <= 0) throw ConfigError("residual_filters must be positive");
  if (enhancer_width <= 0 || enhancer_width % 4 != 0)
    throw ConfigError("enhancer_width must be a positive multiple of 4 (four pyramid scales)");
  if (discriminator_layers < 2) throw ConfigError("discriminator_layers must be at least 2");
  const int rf = discriminator_receptive_field(discriminator_layers);
  if (rf != patch_receptive_field)
    throw ConfigError("patch_receptive_field " + std::to_string(patch_receptive_field) +
                      " does not match the " + std::to_string(discriminator_layers) +
                      "-layer geometry (" + std::to_string(rf) + ")");
}

void apply_variant(ModelConfig& config, const std::string& variant) {
  if (variant == "G") {
    config.use_enhancer = false;
    config.use_aggregation = false;
  } else if (variant == "G+E") {
    config.use_enhancer = true;
    config.use_aggregation = false;
  } else if (variant == "G+E+A") {
    config.use_enhancer = true;
    config.use_aggregation = true;
  } else {
    throw ConfigError("unknown variant '" + variant + "' (expected G, G+E or G+E+A)");
  }
}

std::string variant_name(const ModelConfig& config) {
  if (config.use_aggregation && config.use_enhancer) return "G+E+A";
  if (config.use_enhancer) return "G+E";
  if (config.use_aggregation) return "G+A";
  return "G";
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"input_channels", c.input_channels},
                     {"encoder_filters", c.encoder_filters},
                     {"residual_blocks", c.residual_blocks},
                     {"residual_filters", c.residual_filters},
                     {"use_aggregation", c.use_aggregation},
                     {"use_enhancer", c.use_enhancer},
                     {"enhancer_width", c.enhancer_width},
                     {"discriminator_layers", c.discriminator_layers},
                     {"patch_receptive_field", c.patch_receptive_field}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  c = ModelConfig{};
  if (j.contains("input_channels")) j.at("input_channels").get_to(c.input_channels);
  if (j.contains("encoder_filters")) j.at("encoder_filters").get_to(c.encoder_filters);
  if (j.contains("residual_blocks")) j.at("residual_blocks").get_to(c.residual_blocks);
  if (j.contains("residual_filters")) j.at("residual_filters").get_to(c.residual_filters);
  if (j.contains("use_aggregation")) j.at("use_aggregation").get_to(c.use_aggregation);
  if (j.contains("use_enhancer")) j.at("use_enhancer").get_to(c.use_enhancer);
  if (j.contains("enhancer_width")) j.at("enhancer_width").get_to(c.enhancer_width);
  if (j.contains("discriminator_layers")) j.at("discriminator_layers").get_to(c.discriminator_layers);
  if (j.contains("patch_receptive_field"))
    j.at("patch_receptive_field").get_to(c.patch_receptive_field);
}

}  // namespace derain::model

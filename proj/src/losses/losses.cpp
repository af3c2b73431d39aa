#include "derain/losses/losses.hpp"

#include <cmath>

#include "derain/core/errors.hpp"

namespace derain::losses {

using nn::Tape;
using nn::Var;

void LossConfig::validate(int discriminator_layers) const {
  if (feature_match_layers < 1 || feature_match_layers > discriminator_layers)
    throw ConfigError("feature_match_layers must be in 1.." +
                      std::to_string(discriminator_layers));
  if (perceptual_layers < 1 || perceptual_taps.size() != static_cast<std::size_t>(perceptual_layers))
    throw ConfigError("perceptual_layers must match the number of perceptual taps");
  for (double w : term_weights)
    if (!std::isfinite(w) || w < 0.0)
      throw ConfigError("term weights must be finite and non-negative");
}

void to_json(nlohmann::json& j, const LossConfig& c) {
  j = nlohmann::json{{"feature_match_layers", c.feature_match_layers},
                     {"perceptual_layers", c.perceptual_layers},
                     {"perceptual_taps", c.perceptual_taps},
                     {"term_weights", c.term_weights}};
}

void from_json(const nlohmann::json& j, LossConfig& c) {
  c = LossConfig{};
  if (j.contains("feature_match_layers")) j.at("feature_match_layers").get_to(c.feature_match_layers);
  if (j.contains("perceptual_layers")) j.at("perceptual_layers").get_to(c.perceptual_layers);
  if (j.contains("perceptual_taps")) j.at("perceptual_taps").get_to(c.perceptual_taps);
  if (j.contains("term_weights")) j.at("term_weights").get_to(c.term_weights);
}

namespace {

// sum_n MAE_n / 2^(N - n), n = 1..N, shallow to deep.
template <typename T>
Var depth_weighted_mae(Tape<T>& tape, const std::vector<Var>& a, const std::vector<Var>& b,
                       int layers, const char* what) {
  if (layers < 1) throw ConfigError(std::string(what) + ": layer count must be positive");
  const auto n = static_cast<std::size_t>(layers);
  if (a.size() != n || b.size() != n)
    throw ShapeError(std::string(what) + ": expected " + std::to_string(layers) +
                     " feature maps per side, got " + std::to_string(a.size()) + " and " +
                     std::to_string(b.size()));
  std::vector<Var> maes;
  std::vector<T> weights;
  for (int i = 1; i <= layers; ++i) {
    maes.push_back(tape.mae(a[static_cast<std::size_t>(i - 1)], b[static_cast<std::size_t>(i - 1)]));
    weights.push_back(static_cast<T>(std::ldexp(1.0, i - layers)));
  }
  return tape.weighted_sum(maes, weights);
}

}  // namespace

template <typename T>
Var adversarial_generator_loss(Tape<T>& tape, Var fake_scores) {
  return tape.mean_sq_diff(fake_scores, T(1));
}

template <typename T>
Var discriminator_loss(Tape<T>& tape, Var real_scores, Var fake_scores) {
  core::check_same_shape(tape.value(real_scores), tape.value(fake_scores),
                         "discriminator score grids");
  return tape.weighted_sum(
      {tape.mean_sq_diff(real_scores, T(1)), tape.mean_sq_diff(fake_scores, T(0))},
      {T(0.5), T(0.5)});
}

template <typename T>
Var feature_matching_loss(Tape<T>& tape, const std::vector<Var>& real_feats,
                          const std::vector<Var>& fake_feats, const LossConfig& config) {
  return depth_weighted_mae(tape, real_feats, fake_feats, config.feature_match_layers,
                            "feature matching");
}

template <typename T>
Var perceptual_loss(Tape<T>& tape, Var clean, Var enhanced,
                    const PerceptualExtractor<T>& extractor, const LossConfig& config) {
  core::check_same_shape(tape.value(clean), tape.value(enhanced), "perceptual loss images");
  if (config.perceptual_taps.size() != static_cast<std::size_t>(config.perceptual_layers))
    throw ConfigError("perceptual_layers must match the number of perceptual taps");
  const int c = tape.value(clean).rank() == 3 ? tape.value(clean).channels() : 0;
  if (c == 1) {
    clean = tape.concat({clean, clean, clean});
    enhanced = tape.concat({enhanced, enhanced, enhanced});
  } else if (c != 3) {
    throw ShapeError("perceptual loss needs (1,H,W) or (3,H,W) images, got " +
                     tape.value(clean).shape_str());
  }
  const auto clean_taps = extractor.forward(tape, extractor.normalize(tape, clean),
                                            config.perceptual_taps);
  const auto enhanced_taps = extractor.forward(tape, extractor.normalize(tape, enhanced),
                                               config.perceptual_taps);
  return depth_weighted_mae(tape, clean_taps, enhanced_taps, config.perceptual_layers,
                            "perceptual");
}

template <typename T>
Var fidelity_loss(Tape<T>& tape, Var clean, Var enhanced) {
  return tape.mse(enhanced, clean);
}

template <typename T>
Var total_generator_loss(Tape<T>& tape, Var adversarial, Var feature_match, Var perceptual,
                         Var fidelity, const LossConfig& config) {
  const Var terms[4] = {adversarial, feature_match, perceptual, fidelity};
  const char* names[4] = {"adversarial", "feature matching", "perceptual", "fidelity"};
  std::vector<Var> scalars;
  std::vector<T> weights;
  for (int i = 0; i < 4; ++i) {
    const auto& v = tape.value(terms[i]);
    if (v.rank() != 1 || v.numel() != 1)
      throw ShapeError(std::string(names[i]) + " term must be scalar, got " + v.shape_str());
    if (!std::isfinite(static_cast<double>(v[0])))
      throw NumericError(std::string(names[i]) + " loss term is not finite");
    if (!std::isfinite(config.term_weights[static_cast<std::size_t>(i)]) ||
        config.term_weights[static_cast<std::size_t>(i)] < 0.0)
      throw ConfigError("term weights must be finite and non-negative");
    scalars.push_back(terms[i]);
    weights.push_back(static_cast<T>(config.term_weights[static_cast<std::size_t>(i)]));
  }
  return tape.weighted_sum(scalars, weights);
}

template <typename T>
T adversarial_generator_loss(const Tensor<T>& fake_scores) {
  Tape<T> tape;
  return tape.value(adversarial_generator_loss(tape, tape.constant(fake_scores)))[0];
}

template <typename T>
T discriminator_loss(const Tensor<T>& real_scores, const Tensor<T>& fake_scores) {
  Tape<T> tape;
  return tape.value(
      discriminator_loss(tape, tape.constant(real_scores), tape.constant(fake_scores)))[0];
}

template <typename T>
T feature_matching_loss(const std::vector<Tensor<T>>& real_feats,
                        const std::vector<Tensor<T>>& fake_feats, const LossConfig& config) {
  Tape<T> tape;
  std::vector<Var> r, f;
  for (const auto& t : real_feats) r.push_back(tape.constant(t));
  for (const auto& t : fake_feats) f.push_back(tape.constant(t));
  return tape.value(feature_matching_loss(tape, r, f, config))[0];
}

template <typename T>
T perceptual_loss(const Tensor<T>& clean, const Tensor<T>& enhanced,
                  const PerceptualExtractor<T>& extractor, const LossConfig& config) {
  Tape<T> tape;
  return tape.value(perceptual_loss(tape, tape.constant(clean), tape.constant(enhanced),
                                    extractor, config))[0];
}

template <typename T>
T fidelity_loss(const Tensor<T>& clean, const Tensor<T>& enhanced) {
  Tape<T> tape;
  return tape.value(fidelity_loss(tape, tape.constant(clean), tape.constant(enhanced)))[0];
}

#define DERAIN_INSTANTIATE_LOSSES(T)                                                          \
  template Var adversarial_generator_loss<T>(Tape<T>&, Var);                                  \
  template Var discriminator_loss<T>(Tape<T>&, Var, Var);                                     \
  template Var feature_matching_loss<T>(Tape<T>&, const std::vector<Var>&,                    \
                                        const std::vector<Var>&, const LossConfig&);          \
  template Var perceptual_loss<T>(Tape<T>&, Var, Var, const PerceptualExtractor<T>&,          \
                                  const LossConfig&);                                         \
  template Var fidelity_loss<T>(Tape<T>&, Var, Var);                                          \
  template Var total_generator_loss<T>(Tape<T>&, Var, Var, Var, Var, const LossConfig&);      \
  template T adversarial_generator_loss<T>(const Tensor<T>&);                                 \
  template T discriminator_loss<T>(const Tensor<T>&, const Tensor<T>&);                       \
  template T feature_matching_loss<T>(const std::vector<Tensor<T>>&,                          \
                                      const std::vector<Tensor<T>>&, const LossConfig&);      \
  template T perceptual_loss<T>(const Tensor<T>&, const Tensor<T>&,                           \
                                const PerceptualExtractor<T>&, const LossConfig&);            \
  template T fidelity_loss<T>(const Tensor<T>&, const Tensor<T>&);

DERAIN_INSTANTIATE_LOSSES(float)
DERAIN_INSTANTIATE_LOSSES(double)
#undef DERAIN_INSTANTIATE_LOSSES

}  // namespace derain::losses

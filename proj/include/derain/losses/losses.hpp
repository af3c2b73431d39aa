#pragma once

#include <array>
#include <string>
#include <vector>

#include "json.hpp"

#include "derain/core/tensor.hpp"
#include "derain/losses/extractor.hpp"
#include "derain/nn/tape.hpp"

namespace derain::losses {

// Term order for weights: adversarial, feature matching, perceptual, fidelity.
struct LossConfig {
  int feature_match_layers = 3;  // discriminator taps, shallow to deep
  int perceptual_layers = 3;     // extractor taps, shallow to deep
  std::vector<std::string> perceptual_taps{"stage1", "stage2", "stage3"};
  std::array<double, 4> term_weights{1.0, 1.0, 1.0, 1.0};

  // discriminator_layers bounds feature_match_layers. Throws ConfigError.
  void validate(int discriminator_layers) const;
};

void to_json(nlohmann::json& j, const LossConfig& c);
void from_json(const nlohmann::json& j, LossConfig& c);

// mean over patch cells of (1 - score)^2; drives the generator toward scores
// the discriminator rates as real.
template <typename T>
nn::Var adversarial_generator_loss(nn::Tape<T>& tape, nn::Var fake_scores);

// 1/2 mean[(real - 1)^2] + 1/2 mean[fake^2], the least-squares objective for
// the discriminator itself.
template <typename T>
nn::Var discriminator_loss(nn::Tape<T>& tape, nn::Var real_scores, nn::Var fake_scores);

// sum_n MAE(real_n, fake_n) / 2^(N - n) over N = feature_match_layers
// discriminator feature maps, ordered shallow to deep (n = 1..N).
template <typename T>
nn::Var feature_matching_loss(nn::Tape<T>& tape, const std::vector<nn::Var>& real_feats,
                              const std::vector<nn::Var>& fake_feats, const LossConfig& config);

// Same layer weighting as feature matching, over extractor taps of both
// images. clean/enhanced: (C,H,W) in [-1,1], C = 1 (replicated) or 3.
template <typename T>
nn::Var perceptual_loss(nn::Tape<T>& tape, nn::Var clean, nn::Var enhanced,
                        const PerceptualExtractor<T>& extractor, const LossConfig& config);

// Mean squared pixel difference.
template <typename T>
nn::Var fidelity_loss(nn::Tape<T>& tape, nn::Var clean, nn::Var enhanced);

// Weighted sum of the four scalar terms (defaults to the plain sum). A
// non-finite term raises NumericError naming the term.
template <typename T>
nn::Var total_generator_loss(nn::Tape<T>& tape, nn::Var adversarial, nn::Var feature_match,
                             nn::Var perceptual, nn::Var fidelity, const LossConfig& config);

// Value-only conveniences; same arithmetic as the tape forms.
template <typename T>
T adversarial_generator_loss(const Tensor<T>& fake_scores);
template <typename T>
T discriminator_loss(const Tensor<T>& real_scores, const Tensor<T>& fake_scores);
template <typename T>
T feature_matching_loss(const std::vector<Tensor<T>>& real_feats,
                        const std::vector<Tensor<T>>& fake_feats, const LossConfig& config);
template <typename T>
T perceptual_loss(const Tensor<T>& clean, const Tensor<T>& enhanced,
                  const PerceptualExtractor<T>& extractor, const LossConfig& config);
template <typename T>
T fidelity_loss(const Tensor<T>& clean, const Tensor<T>& enhanced);

}  // namespace derain::losses

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "derain/core/tensor.hpp"
#include "derain/nn/tape.hpp"

namespace derain::losses {

using core::Tensor;

// Frozen convolutional feature extractor for the perceptual loss: stages of
// 3x3 stride-1 convolutions with ReLU, joined by 2x2 max pooling. One tap per
// stage, named "stage<i>", taken after the stage's last ReLU. Weights are
// loaded from a tensor archive and never receive gradients.
template <typename T>
class PerceptualExtractor {
 public:
  // Archive layout: "stage<i>.conv<j>.weight" (OC,IC,3,3) with matching
  // ".bias" (OC), numbered from 1, plus "input.mean" / "input.std" (3)
  // giving the expected input normalization over [0,1] RGB. A missing or
  // malformed archive raises ResourceError.
  static PerceptualExtractor load(const std::string& path);

  int stages() const { return static_cast<int>(stage_convs_.size()); }
  const std::vector<std::string>& tap_names() const { return names_; }

  // Maps a (3,H,W) image in [-1,1] to the extractor's input normalization.
  nn::Var normalize(nn::Tape<T>& tape, nn::Var image) const;

  // x: (3,H,W), already normalized. Returns one tap per requested name, in
  // the given order; stages below the deepest request are not evaluated.
  // Spatial dims must stay even wherever a pool applies.
  std::vector<nn::Var> forward(nn::Tape<T>& tape, nn::Var x,
                               const std::vector<std::string>& taps) const;

 private:
  struct Conv {
    Tensor<T> weight;
    Tensor<T> bias;
  };

  std::vector<std::vector<Conv>> stage_convs_;
  std::vector<std::string> names_;
  std::vector<T> mean_;
  std::vector<T> stdev_;
};

// Writes an extractor archive with path-keyed He-scaled random weights, zero
// biases and standard RGB normalization constants: a deterministic stand-in
// with the same layout as classifier weights trained elsewhere.
void write_random_extractor(const std::string& path, std::uint64_t seed,
                            const std::vector<int>& stage_widths = {16, 32, 64},
                            int convs_per_stage = 2);

}  // namespace derain::losses

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "derain/model/config.hpp"
#include "derain/nn/params.hpp"
#include "derain/nn/tape.hpp"

namespace derain::model {

enum class Init {
  kConvWeight,  // Normal(0, 0.02)
  kNormGain,    // Normal(1, 0.02)
  kZero,        // biases, norm shifts
};

struct ParamSpec {
  std::string path;
  std::vector<int> dims;
  Init init = Init::kZero;
};

// Full parameter listing (generator, optional enhancer, discriminator) in a
// fixed order. Forward passes consume exactly these paths.
std::vector<ParamSpec> parameter_schema(const ModelConfig& config);

// Fresh weights: convolution kernels ~ Normal(0, 0.02), biases zero,
// normalization gains ~ Normal(1, 0.02) and shifts zero. Each tensor draws
// from its own path-keyed stream, so shared layers initialize identically
// across ablation variants given the same seed.
nn::ParamStore<float> init_weights(const ModelConfig& config, std::uint64_t seed);

std::int64_t count_parameters(const nn::ParamStore<float>& weights);

// Maps a parameter path to a tape Var (trainable, frozen, or recorded).
using ParamLookup = std::function<nn::Var(const std::string&)>;

// Binds every path of `store` into `tape`; trainable controls whether
// gradients accumulate into the store.
template <typename T>
ParamLookup bind_params(nn::Tape<T>& tape, nn::ParamStore<T>& store, bool trainable);

// One aggregation block: resamples stage_input to conv_output's resolution
// (pool when larger, nearest upsample when smaller), concatenates
// [conv_output, skip?, resampled], then conv 3x3 + norm + ReLU under `base`.
template <typename T>
nn::Var aggregation_forward(nn::Tape<T>& tape, const ParamLookup& p, const std::string& base,
                            nn::Var stage_input, nn::Var conv_output,
                            std::optional<nn::Var> skip);

struct GenTrace {
  std::vector<int> bottleneck;  // dims entering the residual stack
};

struct EnhTrace {
  std::vector<std::vector<int>> pyramid;  // dims of each pooled scale
};

// image: (C,H,W) in [-1,1], H and W divisible by 4. Returns same shape.
template <typename T>
nn::Var generator_forward(nn::Tape<T>& tape, const ModelConfig& config, const ParamLookup& p,
                          nn::Var image, GenTrace* trace = nullptr);

// generated/original: same shape, H and W divisible by 32.
template <typename T>
nn::Var enhancer_forward(nn::Tape<T>& tape, const ModelConfig& config, const ParamLookup& p,
                         nn::Var generated, nn::Var original, EnhTrace* trace = nullptr);

struct DiscOutput {
  nn::Var scores;                  // raw patch scores, (1, H', W')
  std::vector<nn::Var> features;   // per-stage outputs, shallow to deep
};

template <typename T>
DiscOutput discriminator_forward(nn::Tape<T>& tape, const ModelConfig& config,
                                 const ParamLookup& p, nn::Var image);

// Generator followed by the enhancer when enabled.
template <typename T>
nn::Var restore_forward(nn::Tape<T>& tape, const ModelConfig& config, const ParamLookup& p,
                        nn::Var image);

}  // namespace derain::model

#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "derain/core/tensor.hpp"
#include "derain/nn/params.hpp"

namespace derain::train {

struct AdamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;  // throws ConfigError
  bool operator==(const AdamConfig&) const = default;
};

// Adam over a fixed subset of a parameter store's paths. Moment buffers and
// the step counter round-trip through tensor archives bit-exactly, so a
// reloaded optimizer continues the update sequence unchanged.
class Adam {
 public:
  Adam() = default;
  Adam(const AdamConfig& config, const nn::ParamStore<float>& store,
       std::vector<std::string> paths);

  // One update from the gradients currently held by `store`.
  void step(nn::ParamStore<float>& store);

  std::int64_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<std::string>& paths() const { return paths_; }

  void save(const std::string& path) const;
  static Adam load(const std::string& path);

 private:
  AdamConfig config_;
  std::vector<std::string> paths_;
  std::vector<core::Tensor<float>> moment1_, moment2_;
  std::int64_t steps_ = 0;
};

// Tracks the best validation metric (strictly-greater improvement) and
// signals a stop once `patience` epochs pass without a new best. Epochs are
// 1-indexed; the stop epoch equals best_epoch + patience.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience);  // patience >= 1, else ConfigError

  bool report(double metric);  // true when the metric sets a new best
  bool should_stop() const;

  int epoch() const { return epoch_; }
  int best_epoch() const { return best_epoch_; }
  double best_metric() const { return best_metric_; }

 private:
  int patience_ = 0;
  int epoch_ = 0;
  int best_epoch_ = 0;
  double best_metric_ = std::numeric_limits<double>::lowest();
};

}  // namespace derain::train

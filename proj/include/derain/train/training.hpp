#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

#include "derain/data/dataio.hpp"
#include "derain/losses/extractor.hpp"
#include "derain/losses/losses.hpp"
#include "derain/model/config.hpp"
#include "derain/nn/params.hpp"
#include "derain/synth/synth.hpp"
#include "derain/train/optim.hpp"

namespace derain::train {

struct TrainConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int batch_size = 8;
  int max_epochs = 200;
  int patience = 10;
  int crop_size = 256;  // clamped per image, then floored to the model's size granularity
  bool augment_flip = true;
  std::uint64_t seed = 1;

  void validate() const;  // throws ConfigError
  AdamConfig adam() const { return {learning_rate, beta1, beta2, adam_epsilon}; }
  bool operator==(const TrainConfig&) const = default;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct EpochRecord {
  int epoch = 0;
  double disc_loss = 0.0;
  double adversarial = 0.0;
  double feature_match = 0.0;
  double perceptual = 0.0;
  double fidelity = 0.0;
  double val_psnr = 0.0;
  double val_ssim = 0.0;
  double seconds = 0.0;
};

void to_json(nlohmann::json& j, const EpochRecord& r);
void from_json(const nlohmann::json& j, EpochRecord& r);

// Everything needed to resume or deploy a run: weights for all networks, both
// optimizer states, progress counters, and the per-epoch metric history.
struct Checkpoint {
  model::ModelConfig model;
  nn::ParamStore<float> weights;
  Adam optimizer_g;  // generator + enhancer parameters
  Adam optimizer_d;  // discriminator parameters
  int epoch = 0;     // last completed epoch, 0 = untrained
  int best_epoch = 0;
  double best_metric = std::numeric_limits<double>::lowest();
  std::vector<EpochRecord> history;
};

Checkpoint fresh_checkpoint(const model::ModelConfig& mconfig, const TrainConfig& tconfig);

// Directory layout: weights.st, optim_g.st, optim_d.st, state.json. A
// reloaded checkpoint reproduces forward outputs bit-exactly and continues
// training as if never interrupted.
void save_checkpoint(const std::string& dir, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& dir);

// Weights for fine-tuning from a pre-trained checkpoint. The architectures
// must match exactly; any differing config field raises IncompatibleError
// naming it.
nn::ParamStore<float> transfer_init(const Checkpoint& source,
                                    const model::ModelConfig& target);

// One discriminator update on a batch of model-space [-1,1] pairs: scores
// the clean images as real and the detached generator outputs as fake,
// averages gradients over the batch, and steps `optimizer` (discriminator
// parameters only; generator and enhancer weights stay bitwise untouched).
// Returns the mean discriminator loss. Non-finite losses raise NumericError
// naming the batch.
double train_discriminator_step(const std::vector<data::ImagePair>& batch,
                                const model::ModelConfig& mconfig,
                                const losses::LossConfig& lconfig,
                                nn::ParamStore<float>& weights, Adam& optimizer);

struct GenStepLosses {
  double adversarial = 0.0;
  double feature_match = 0.0;
  double perceptual = 0.0;
  double fidelity = 0.0;
  double total = 0.0;
};

// One joint generator+enhancer update minimizing the weighted total loss:
// adversarial and feature-matching terms on G(A), perceptual and fidelity
// terms on the restored output (E(G(A)), or G(A) without the enhancer).
// Discriminator weights stay bitwise untouched. Returns batch-mean loss
// components.
GenStepLosses train_generator_step(const std::vector<data::ImagePair>& batch,
                                   const model::ModelConfig& mconfig,
                                   const losses::LossConfig& lconfig,
                                   const losses::PerceptualExtractor<float>& extractor,
                                   nn::ParamStore<float>& weights, Adam& optimizer);

// Full restoration of a [0,1] image of any size: reflect-pad to the model's
// granularity, normalize, run the frozen networks, denormalize, crop back.
data::Image restore_image(const data::Image& affected, const model::ModelConfig& mconfig,
                          nn::ParamStore<float>& weights);

struct ValScore {
  double psnr = 0.0;  // mean over pairs with finite PSNR; +infinity when all are infinite
  double ssim = 0.0;
};

ValScore validation_score(const std::vector<data::ImagePair>& val_set,
                          const model::ModelConfig& mconfig, nn::ParamStore<float>& weights);

// Training pairs for a given 1-indexed epoch. Constant for real-data runs;
// synthetic pre-training regenerates corruption each epoch.
using EpochSource = std::function<const std::vector<data::ImagePair>&(int epoch)>;

// Alternating per-batch discriminator/generator updates with per-epoch
// validation PSNR, early stopping, and best/last checkpointing. Resumes from
// `start.epoch + 1`. When `out_dir` is non-empty, writes best/ and last/
// checkpoints plus an epochs.jsonl log there. Returns the best checkpoint
// carrying the full run history.
Checkpoint train(const std::vector<data::ImagePair>& train_set,
                 const std::vector<data::ImagePair>& val_set,
                 const model::ModelConfig& mconfig, const TrainConfig& tconfig,
                 const losses::LossConfig& lconfig,
                 const losses::PerceptualExtractor<float>& extractor, Checkpoint start,
                 const std::string& out_dir = "");

Checkpoint train_from_source(const EpochSource& train_source,
                             const std::vector<data::ImagePair>& val_set,
                             const model::ModelConfig& mconfig, const TrainConfig& tconfig,
                             const losses::LossConfig& lconfig,
                             const losses::PerceptualExtractor<float>& extractor,
                             Checkpoint start, const std::string& out_dir = "");

// Pre-training on synthetic corruption: holds out ~10% of the clean corpus as
// a fixed synthetic validation set and re-corrupts the rest with fresh seeds
// every epoch. Images are [0,1], at least 2 required.
Checkpoint pretrain_synthetic(const std::vector<data::Image>& clean_images,
                              const synth::RainConfig& rain,
                              const model::ModelConfig& mconfig, const TrainConfig& tconfig,
                              const losses::LossConfig& lconfig,
                              const losses::PerceptualExtractor<float>& extractor,
                              const std::string& out_dir = "");

}  // namespace derain::train

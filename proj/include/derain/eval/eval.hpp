#pragma once

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "derain/data/dataio.hpp"
#include "derain/losses/extractor.hpp"
#include "derain/losses/losses.hpp"
#include "derain/model/config.hpp"
#include "derain/nn/params.hpp"
#include "derain/train/training.hpp"

namespace derain::eval {

// Stable 16-hex-digit digest of a canonicalized JSON document, used to stamp
// reports with the exact configuration that produced them.
std::string config_fingerprint(const nlohmann::json& j);

struct ImageScore {
  std::string id;
  double ssim = 0.0;
  double psnr = 0.0;  // +infinity when the pair is identical
};

struct MetricsReport {
  std::vector<ImageScore> restored;  // model output vs clean, one row per pair
  std::vector<ImageScore> baseline;  // affected input vs clean
  double mean_ssim = 0.0;
  double mean_psnr = 0.0;  // over finite rows; +infinity when all rows are infinite
  double baseline_mean_ssim = 0.0;
  double baseline_mean_psnr = 0.0;
  int count = 0;
  int psnr_excluded = 0;  // infinite restored PSNR rows left out of mean_psnr
  int baseline_psnr_excluded = 0;
  std::string fingerprint;
};

void to_json(nlohmann::json& j, const ImageScore& s);
void to_json(nlohmann::json& j, const MetricsReport& r);

// Maps a [0,1] affected image to its [0,1] restoration.
using Restorer = std::function<data::Image(const data::Image&)>;

// Full-pipeline restorer over frozen weights: reflect-pad, normalize, run the
// generator (and enhancer when configured), denormalize, crop back.
Restorer make_restorer(const model::ModelConfig& mconfig, nn::ParamStore<float>& weights);

// Scores every pair with SSIM/PSNR against the clean reference and reports
// the raw-input baseline alongside. Failures name the offending item. Pure:
// identical inputs yield identical reports.
MetricsReport evaluate(const Restorer& restore, const std::vector<data::ImagePair>& dataset,
                       const std::string& fingerprint = "");
MetricsReport evaluate(const model::ModelConfig& mconfig, nn::ParamStore<float>& weights,
                       const std::vector<data::ImagePair>& dataset);

struct LatencyStats {
  std::vector<double> seconds;  // post-warmup samples, in recorded order
  double median = 0.0;
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
  int warmup = 0;
  std::vector<int> dims;  // {channels, height, width}
  std::string device;
};

void to_json(nlohmann::json& j, const LatencyStats& s);

// Times `runs` single-image restorations of a synthetic input of the given
// dims after `warmup` discarded passes. Timing covers the whole pipeline
// (padding, normalization, forward, crop). Run without concurrent load.
LatencyStats benchmark_latency(const Restorer& restore, const std::vector<int>& dims,
                               int runs = 100, int warmup = 10,
                               const std::string& device = "cpu");

struct AblationRow {
  std::string variant;  // "G", "G+E", "G+E+A"
  double ssim = 0.0;
  double psnr = 0.0;
  double baseline_ssim = 0.0;
  double baseline_psnr = 0.0;
  std::string fingerprint;
};

void to_json(nlohmann::json& j, const AblationRow& r);

// Trains and evaluates the three architecture variants on identical data and
// seeds, scoring each on the test split.
std::vector<AblationRow> run_ablation(const data::DatasetSplit& data,
                                      const model::ModelConfig& base,
                                      const train::TrainConfig& tconfig,
                                      const losses::LossConfig& lconfig,
                                      const losses::PerceptualExtractor<float>& extractor);

}  // namespace derain::eval

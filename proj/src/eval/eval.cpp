#include "derain/eval/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "derain/core/errors.hpp"
#include "derain/core/hash.hpp"
#include "derain/core/rng.hpp"
#include "derain/eval/metrics.hpp"

namespace derain::eval {

namespace {

struct MeanAccumulator {
  double sum = 0.0;
  int finite = 0;

  void add(double v) {
    if (std::isfinite(v)) {
      sum += v;
      ++finite;
    }
  }
  double mean(int total) const {
    if (finite > 0) return sum / finite;
    return total > 0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
};

nlohmann::json metric_to_json(double v) {
  if (std::isfinite(v)) return v;
  std::ostringstream out;
  out << v;
  return out.str();
}

}  // namespace

std::string config_fingerprint(const nlohmann::json& j) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << core::fnv1a64(j.dump());
  return out.str();
}

void to_json(nlohmann::json& j, const ImageScore& s) {
  j = nlohmann::json{{"id", s.id}, {"ssim", s.ssim}, {"psnr", metric_to_json(s.psnr)}};
}

void to_json(nlohmann::json& j, const MetricsReport& r) {
  j = nlohmann::json{{"restored", r.restored},
                     {"baseline", r.baseline},
                     {"mean_ssim", r.mean_ssim},
                     {"mean_psnr", metric_to_json(r.mean_psnr)},
                     {"baseline_mean_ssim", r.baseline_mean_ssim},
                     {"baseline_mean_psnr", metric_to_json(r.baseline_mean_psnr)},
                     {"count", r.count},
                     {"psnr_excluded", r.psnr_excluded},
                     {"baseline_psnr_excluded", r.baseline_psnr_excluded},
                     {"fingerprint", r.fingerprint}};
}

Restorer make_restorer(const model::ModelConfig& mconfig, nn::ParamStore<float>& weights) {
  return [mconfig, &weights](const data::Image& affected) {
    return train::restore_image(affected, mconfig, weights);
  };
}

MetricsReport evaluate(const Restorer& restore, const std::vector<data::ImagePair>& dataset,
                       const std::string& fingerprint) {
  if (dataset.empty()) throw ConfigError("evaluate: empty dataset");

  MetricsReport report;
  report.fingerprint = fingerprint;
  report.count = static_cast<int>(dataset.size());
  MeanAccumulator r_ssim, r_psnr, b_ssim, b_psnr;
  for (const data::ImagePair& pair : dataset) {
    try {
      const data::Image restored = restore(pair.affected);
      ImageScore rs{pair.id, ssim(restored, pair.clean), psnr(restored, pair.clean)};
      ImageScore bs{pair.id, ssim(pair.affected, pair.clean), psnr(pair.affected, pair.clean)};
      report.restored.push_back(rs);
      report.baseline.push_back(bs);
      r_ssim.add(rs.ssim);
      r_psnr.add(rs.psnr);
      b_ssim.add(bs.ssim);
      b_psnr.add(bs.psnr);
    } catch (const std::exception& e) {
      throw Error("evaluate: failed on item '" + pair.id + "': " + e.what());
    }
  }
  report.mean_ssim = r_ssim.mean(report.count);
  report.mean_psnr = r_psnr.mean(report.count);
  report.baseline_mean_ssim = b_ssim.mean(report.count);
  report.baseline_mean_psnr = b_psnr.mean(report.count);
  report.psnr_excluded = report.count - r_psnr.finite;
  report.baseline_psnr_excluded = report.count - b_psnr.finite;
  return report;
}

MetricsReport evaluate(const model::ModelConfig& mconfig, nn::ParamStore<float>& weights,
                       const std::vector<data::ImagePair>& dataset) {
  return evaluate(make_restorer(mconfig, weights), dataset,
                  config_fingerprint(nlohmann::json{{"model", mconfig}}));
}

void to_json(nlohmann::json& j, const LatencyStats& s) {
  j = nlohmann::json{{"seconds", s.seconds}, {"median", s.median},
                     {"mean", s.mean},       {"stddev", s.stddev},
                     {"warmup", s.warmup},   {"dims", s.dims},
                     {"device", s.device}};
}

LatencyStats benchmark_latency(const Restorer& restore, const std::vector<int>& dims, int runs,
                               int warmup, const std::string& device) {
  if (runs < 1) throw ConfigError("benchmark: runs must be at least 1");
  if (warmup < 0) throw ConfigError("benchmark: warmup must be non-negative");
  if (dims.size() != 3) throw ShapeError("benchmark: dims must be {channels, height, width}");

  data::Image input(dims);
  core::Rng rng(7);
  for (std::int64_t i = 0; i < input.numel(); ++i)
    input[i] = static_cast<float>(rng.uniform());

  LatencyStats stats;
  stats.warmup = warmup;
  stats.dims = dims;
  stats.device = device;
  for (int i = 0; i < warmup; ++i) restore(input);
  stats.seconds.reserve(static_cast<std::size_t>(runs));
  for (int i = 0; i < runs; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    restore(input);
    const auto t1 = std::chrono::steady_clock::now();
    stats.seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
  }

  std::vector<double> sorted = stats.seconds;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  stats.median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  double sum = 0.0;
  for (double v : sorted) sum += v;
  stats.mean = sum / static_cast<double>(n);
  double sq = 0.0;
  for (double v : sorted) sq += (v - stats.mean) * (v - stats.mean);
  stats.stddev = std::sqrt(sq / static_cast<double>(n));
  return stats;
}

void to_json(nlohmann::json& j, const AblationRow& r) {
  j = nlohmann::json{{"variant", r.variant},
                     {"ssim", r.ssim},
                     {"psnr", metric_to_json(r.psnr)},
                     {"baseline_ssim", r.baseline_ssim},
                     {"baseline_psnr", metric_to_json(r.baseline_psnr)},
                     {"fingerprint", r.fingerprint}};
}

std::vector<AblationRow> run_ablation(const data::DatasetSplit& data,
                                      const model::ModelConfig& base,
                                      const train::TrainConfig& tconfig,
                                      const losses::LossConfig& lconfig,
                                      const losses::PerceptualExtractor<float>& extractor) {
  if (data.train.empty() || data.val.empty() || data.test.empty())
    throw ConfigError("ablation: train, val, and test splits must all be non-empty");

  std::vector<AblationRow> rows;
  for (const std::string variant : {"G", "G+E", "G+E+A"}) {
    model::ModelConfig mconfig = base;
    model::apply_variant(mconfig, variant);
    train::Checkpoint best =
        train::train(data.train, data.val, mconfig, tconfig, lconfig, extractor,
                     train::fresh_checkpoint(mconfig, tconfig));
    const std::string fingerprint = config_fingerprint(
        nlohmann::json{{"model", mconfig}, {"train", tconfig}, {"loss", lconfig}});
    const MetricsReport report =
        evaluate(make_restorer(mconfig, best.weights), data.test, fingerprint);
    rows.push_back({variant, report.mean_ssim, report.mean_psnr, report.baseline_mean_ssim,
                    report.baseline_mean_psnr, fingerprint});
  }
  return rows;
}

}  // namespace derain::eval

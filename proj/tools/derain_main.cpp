#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "derain/core/errors.hpp"
#include "derain/core/rng.hpp"
#include "derain/data/dataio.hpp"
#include "derain/eval/eval.hpp"
#include "derain/losses/extractor.hpp"
#include "derain/losses/losses.hpp"
#include "derain/model/config.hpp"
#include "derain/model/model.hpp"
#include "derain/synth/synth.hpp"
#include "derain/train/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace derain;

namespace {

constexpr int kOk = 0;
constexpr int kValidationFailure = 1;
constexpr int kRuntimeFailure = 2;
constexpr int kPartialFailure = 3;

// One run per output directory; a second concurrent invocation fails fast.
class OutDirLock {
 public:
  explicit OutDirLock(const std::string& dir) : path_(dir + "/.lock") {
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0)
      throw IoError("output directory '" + dir +
                    "' is locked by another run (remove .lock if stale)");
  }
  ~OutDirLock() {
    if (fd_ >= 0) {
      ::close(fd_);
      ::unlink(path_.c_str());
    }
  }
  OutDirLock(const OutDirLock&) = delete;
  OutDirLock& operator=(const OutDirLock&) = delete;

 private:
  std::string path_;
  int fd_ = -1;
};

struct Common {
  std::string config_path;
  std::string out;
  std::string device = "cpu";
  std::uint64_t seed = 0;
  json file = json::object();
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "JSON config file; flags override its values")
      ->check(CLI::ExistingFile);
  sub->add_option("--out", c.out, "output directory (default runs/<command>)");
  sub->add_option("--seed", c.seed, "overrides the training and synthesis seeds");
  sub->add_option("--device", c.device, "device label recorded in reports");
}

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  try {
    json j;
    in >> j;
    if (!j.is_object()) throw ConfigError("config file must hold a JSON object: " + path);
    return j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed config file '" + path + "': " + e.what());
  }
}

template <typename T>
T section(const json& file, const char* key) {
  T value{};
  if (file.contains(key)) file.at(key).get_to(value);
  return value;
}

std::string string_key(const json& file, const char* key, const std::string& fallback = "") {
  if (file.contains(key)) return file.at(key).get<std::string>();
  return fallback;
}

// Flag wins, then config key, then fallback.
std::string resolve_string(const CLI::App* sub, const char* flag, const std::string& flag_value,
                           const json& file, const char* key,
                           const std::string& fallback = "") {
  if (sub->count(flag) > 0) return flag_value;
  return string_key(file, key, fallback);
}

struct Resolved {
  Common common;
  const CLI::App* sub = nullptr;
  std::string out;

  bool has_flag(const char* flag) const { return sub->count(flag) > 0; }
};

Resolved resolve(const CLI::App* sub, Common& c) {
  Resolved r;
  c.file = load_config_file(c.config_path);
  r.common = c;
  r.sub = sub;
  r.out = resolve_string(sub, "--out", c.out, c.file, "out", "runs/" + sub->get_name());
  return r;
}

void persist_config(const std::string& out_dir, const json& resolved) {
  std::ofstream f(out_dir + "/resolved_config.json", std::ios::trunc);
  if (!f) throw IoError("cannot write " + out_dir + "/resolved_config.json");
  f << resolved.dump(2) << "\n";
}

void prepare_out(const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir + "': " + ec.message());
}

const std::set<std::string> kImageExts{".png", ".bmp", ".ppm", ".pgm", ".tif", ".tiff"};

std::vector<fs::path> list_images(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (kImageExts.count(ext)) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

// Gathers section-level validation failures so one run reports all of them.
void validate_all(const std::vector<std::pair<const char*, std::function<void()>>>& checks) {
  std::string failures;
  for (const auto& [name, check] : checks) {
    try {
      check();
    } catch (const Error& e) {
      if (!failures.empty()) failures += "; ";
      failures += std::string(name) + ": " + e.what();
    }
  }
  if (!failures.empty()) throw ConfigError(failures);
}

struct DataArgs {
  std::string manifest;
  std::array<double, 3> split{0.8, 0.1, 0.1};
  std::uint64_t split_seed = 17;
};

DataArgs data_args(const Resolved& r, const std::string& manifest_flag) {
  DataArgs d;
  const json data = r.common.file.value("data", json::object());
  d.manifest = manifest_flag;
  if (d.manifest.empty() && data.contains("manifest"))
    d.manifest = data.at("manifest").get<std::string>();
  if (data.contains("split")) data.at("split").get_to(d.split);
  if (data.contains("split_seed")) data.at("split_seed").get_to(d.split_seed);
  return d;
}

json data_json(const DataArgs& d) {
  return json{{"manifest", d.manifest}, {"split", d.split}, {"split_seed", d.split_seed}};
}

data::DatasetSplit load_split(const DataArgs& d) {
  if (d.manifest.empty())
    throw ConfigError("data.manifest: dataset manifest path is required (--data)");
  const data::DatasetManifest manifest = data::load_manifest(d.manifest);
  return data::split_dataset(data::load_paired_dataset(manifest), d.split, d.split_seed);
}

losses::PerceptualExtractor<float> load_extractor(const std::string& path) {
  if (path.empty())
    throw ConfigError(
        "extractor: perceptual extractor weights are required (--extractor or config key "
        "'extractor')");
  return losses::PerceptualExtractor<float>::load(path);
}

int cmd_synthesize(const Resolved& r, const std::string& in_flag, int channels_flag) {
  const json& file = r.common.file;
  synth::RainConfig rain = section<synth::RainConfig>(file, "rain");
  if (r.has_flag("--seed")) rain.seed = r.common.seed;
  const std::string in_dir = resolve_string(r.sub, "--in", in_flag, file, "in");
  int channels = channels_flag;
  if (!r.has_flag("--channels") && file.contains("channels"))
    file.at("channels").get_to(channels);

  validate_all({{"rain", [&] { rain.validate(); }},
                {"in", [&] {
                   if (in_dir.empty()) throw ConfigError("input directory is required (--in)");
                 }}});

  const std::vector<fs::path> inputs = list_images(in_dir);
  if (inputs.empty()) throw ConfigError("no images found in '" + in_dir + "'");

  prepare_out(r.out);
  OutDirLock lock(r.out);
  persist_config(r.out, json{{"command", "synthesize"},
                             {"out", r.out},
                             {"device", r.common.device},
                             {"in", in_dir},
                             {"channels", channels},
                             {"rain", rain}});

  std::ofstream manifest(r.out + "/manifest.jsonl", std::ios::trunc);
  if (!manifest) throw IoError("cannot write " + r.out + "/manifest.jsonl");
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    int depth = 8;
    const data::Image clean = data::load_image(inputs[i].string(), channels, &depth);
    synth::RainConfig rc = rain;
    rc.seed = core::Rng::mix(rain.seed, i);
    const synth::CompositeResult result = synth::composite_raindrops(clean, rc);
    const std::string stem = inputs[i].stem().string();
    const std::string rainy_name = stem + "_rain.png";
    const std::string mask_name = stem + "_mask.png";
    data::save_image(r.out + "/" + rainy_name, result.rainy, depth);
    data::save_image(r.out + "/" + mask_name, result.mask, 8);
    manifest << json{{"id", stem},
                     {"clean", inputs[i].string()},
                     {"rainy", rainy_name},
                     {"mask", mask_name},
                     {"seed", rc.seed}}
                    .dump()
             << "\n";
  }

  data::DatasetManifest out_manifest;
  out_manifest.root = ".";
  out_manifest.affected_dir = fs::absolute(r.out).string();
  out_manifest.clean_dir = fs::absolute(in_dir).string();
  out_manifest.affected_suffix = "_rain";
  out_manifest.clean_suffix = "";
  out_manifest.channels = channels;
  out_manifest.source = data::PairSource::kSynthetic;
  std::ofstream ds(r.out + "/dataset.json", std::ios::trunc);
  ds << json(out_manifest).dump(2) << "\n";

  std::cout << "synthesized " << inputs.size() << " rainy/mask pairs into " << r.out << "\n";
  return kOk;
}

int cmd_pretrain(const Resolved& r, const std::string& in_flag, const std::string& extractor_flag,
                 const std::string& variant_flag) {
  const json& file = r.common.file;
  model::ModelConfig mcfg = section<model::ModelConfig>(file, "model");
  const std::string variant =
      resolve_string(r.sub, "--variant", variant_flag, file, "variant");
  if (!variant.empty()) model::apply_variant(mcfg, variant);
  train::TrainConfig tcfg = section<train::TrainConfig>(file, "train");
  if (r.has_flag("--seed")) tcfg.seed = r.common.seed;
  synth::RainConfig rain = section<synth::RainConfig>(file, "rain");
  if (r.has_flag("--seed")) rain.seed = r.common.seed;
  const losses::LossConfig lcfg = section<losses::LossConfig>(file, "loss");
  const std::string extractor_path =
      resolve_string(r.sub, "--extractor", extractor_flag, file, "extractor");
  const std::string in_dir = resolve_string(r.sub, "--in", in_flag, file, "in");

  validate_all({{"model", [&] { mcfg.validate(); }},
                {"train", [&] { tcfg.validate(); }},
                {"loss", [&] { lcfg.validate(mcfg.discriminator_layers); }},
                {"rain", [&] { rain.validate(); }},
                {"in",
                 [&] {
                   if (in_dir.empty())
                     throw ConfigError("clean image directory is required (--in)");
                 }},
                {"extractor", [&] { load_extractor(extractor_path); }}});

  const std::vector<fs::path> inputs = list_images(in_dir);
  if (inputs.empty()) throw ConfigError("no images found in '" + in_dir + "'");
  std::vector<data::Image> clean;
  clean.reserve(inputs.size());
  for (const fs::path& p : inputs)
    clean.push_back(data::load_image(p.string(), mcfg.input_channels));

  prepare_out(r.out);
  OutDirLock lock(r.out);
  persist_config(r.out, json{{"command", "pretrain"},
                             {"out", r.out},
                             {"device", r.common.device},
                             {"in", in_dir},
                             {"extractor", extractor_path},
                             {"model", mcfg},
                             {"train", tcfg},
                             {"loss", lcfg},
                             {"rain", rain}});

  const auto extractor = load_extractor(extractor_path);
  const train::Checkpoint best =
      train::pretrain_synthetic(clean, rain, mcfg, tcfg, lcfg, extractor, r.out);
  std::cout << "pretrained " << best.epoch << " epochs; best val PSNR " << best.best_metric
            << " dB at epoch " << best.best_epoch << "; checkpoints in " << r.out << "\n";
  return kOk;
}

int cmd_train(const Resolved& r, const std::string& data_flag, const std::string& extractor_flag,
              const std::string& variant_flag, const std::string& init_flag,
              const std::string& resume_flag) {
  const json& file = r.common.file;
  model::ModelConfig mcfg = section<model::ModelConfig>(file, "model");
  const std::string variant =
      resolve_string(r.sub, "--variant", variant_flag, file, "variant");
  if (!variant.empty()) model::apply_variant(mcfg, variant);
  train::TrainConfig tcfg = section<train::TrainConfig>(file, "train");
  if (r.has_flag("--seed")) tcfg.seed = r.common.seed;
  const losses::LossConfig lcfg = section<losses::LossConfig>(file, "loss");
  const std::string extractor_path =
      resolve_string(r.sub, "--extractor", extractor_flag, file, "extractor");
  const std::string init_dir = resolve_string(r.sub, "--init", init_flag, file, "init");
  const std::string resume_dir =
      resolve_string(r.sub, "--resume", resume_flag, file, "resume");
  const DataArgs d = data_args(r, data_flag);

  validate_all(
      {{"model", [&] { mcfg.validate(); }},
       {"train", [&] { tcfg.validate(); }},
       {"loss", [&] { lcfg.validate(mcfg.discriminator_layers); }},
       {"data",
        [&] {
          if (d.manifest.empty())
            throw ConfigError("dataset manifest path is required (--data or data.manifest)");
        }},
       {"init",
        [&] {
          if (!init_dir.empty() && !resume_dir.empty())
            throw ConfigError("--init and --resume are mutually exclusive");
        }},
       {"extractor", [&] { load_extractor(extractor_path); }}});

  const data::DatasetSplit split = load_split(d);

  prepare_out(r.out);
  OutDirLock lock(r.out);
  persist_config(r.out, json{{"command", "train"},
                             {"out", r.out},
                             {"device", r.common.device},
                             {"data", data_json(d)},
                             {"extractor", extractor_path},
                             {"init", init_dir},
                             {"resume", resume_dir},
                             {"model", mcfg},
                             {"train", tcfg},
                             {"loss", lcfg}});

  train::Checkpoint start;
  if (!resume_dir.empty()) {
    start = train::load_checkpoint(resume_dir);
  } else {
    start = train::fresh_checkpoint(mcfg, tcfg);
    if (!init_dir.empty())
      start.weights = train::transfer_init(train::load_checkpoint(init_dir), mcfg);
  }

  const auto extractor = load_extractor(extractor_path);
  const train::Checkpoint best =
      train::train(split.train, split.val, mcfg, tcfg, lcfg, extractor, std::move(start), r.out);
  std::cout << "trained " << best.epoch << " epochs on " << split.train.size()
            << " pairs; best val PSNR " << best.best_metric << " dB at epoch "
            << best.best_epoch << "; checkpoints in " << r.out << "\n";
  return kOk;
}

int cmd_infer(const Resolved& r, const std::string& ckpt_flag, const std::string& in_flag,
              const std::string& suffix_flag) {
  const json& file = r.common.file;
  const std::string ckpt_dir = resolve_string(r.sub, "--ckpt", ckpt_flag, file, "checkpoint");
  const std::string in_path = resolve_string(r.sub, "--in", in_flag, file, "in");
  const std::string suffix =
      resolve_string(r.sub, "--suffix", suffix_flag, file, "suffix", "_restored");

  validate_all({{"ckpt",
                 [&] {
                   if (ckpt_dir.empty())
                     throw ConfigError("checkpoint directory is required (--ckpt)");
                 }},
                {"in", [&] {
                   if (in_path.empty())
                     throw ConfigError("input file or directory is required (--in)");
                 }}});

  train::Checkpoint ck = train::load_checkpoint(ckpt_dir);
  std::vector<fs::path> inputs;
  if (fs::is_directory(in_path))
    inputs = list_images(in_path);
  else if (fs::is_regular_file(in_path))
    inputs.push_back(in_path);
  if (inputs.empty()) throw ConfigError("no images found in '" + in_path + "'");

  prepare_out(r.out);
  OutDirLock lock(r.out);
  persist_config(r.out, json{{"command", "infer"},
                             {"out", r.out},
                             {"device", r.common.device},
                             {"checkpoint", ckpt_dir},
                             {"in", in_path},
                             {"suffix", suffix},
                             {"model", ck.model}});

  std::ofstream timings(r.out + "/timings.jsonl", std::ios::trunc);
  int failed = 0;
  for (const fs::path& input : inputs) {
    try {
      int depth = 8;
      const data::Image affected =
          data::load_image(input.string(), ck.model.input_channels, &depth);
      const auto t0 = std::chrono::steady_clock::now();
      const data::Image restored = train::restore_image(affected, ck.model, ck.weights);
      const double seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const std::string out_name =
          input.stem().string() + suffix + input.extension().string();
      data::save_image(r.out + "/" + out_name, restored, depth);
      timings << json{{"input", input.string()}, {"output", out_name}, {"seconds", seconds}}
                     .dump()
              << "\n";
      std::cout << input.filename().string() << " -> " << out_name << " (" << seconds
                << " s)\n";
    } catch (const std::exception& e) {
      ++failed;
      std::cerr << "skip " << input.string() << ": " << e.what() << "\n";
    }
  }
  if (failed == 0) return kOk;
  if (failed < static_cast<int>(inputs.size())) return kPartialFailure;
  throw IoError("all " + std::to_string(failed) + " inputs failed");
}

int cmd_evaluate(const Resolved& r, const std::string& ckpt_flag, const std::string& data_flag,
                 const std::string& split_flag) {
  const json& file = r.common.file;
  const std::string ckpt_dir = resolve_string(r.sub, "--ckpt", ckpt_flag, file, "checkpoint");
  const DataArgs d = data_args(r, data_flag);
  std::string which = split_flag;
  if (!r.has_flag("--split") && file.contains("data") &&
      file.at("data").contains("eval_split"))
    file.at("data").at("eval_split").get_to(which);

  validate_all({{"ckpt",
                 [&] {
                   if (ckpt_dir.empty())
                     throw ConfigError("checkpoint directory is required (--ckpt)");
                 }},
                {"data",
                 [&] {
                   if (d.manifest.empty())
                     throw ConfigError("dataset manifest path is required (--data)");
                 }},
                {"split", [&] {
                   if (which != "all" && which != "train" && which != "val" && which != "test")
                     throw ConfigError("split must be one of: all, train, val, test");
                 }}});

  train::Checkpoint ck = train::load_checkpoint(ckpt_dir);
  std::vector<data::ImagePair> pairs;
  if (which == "all") {
    pairs = data::load_paired_dataset(data::load_manifest(d.manifest));
  } else {
    data::DatasetSplit split = load_split(d);
    pairs = which == "train" ? std::move(split.train)
            : which == "val" ? std::move(split.val)
                             : std::move(split.test);
  }
  if (pairs.empty()) throw ConfigError("selected split '" + which + "' is empty");

  prepare_out(r.out);
  OutDirLock lock(r.out);
  persist_config(r.out, json{{"command", "evaluate"},
                             {"out", r.out},
                             {"device", r.common.device},
                             {"checkpoint", ckpt_dir},
                             {"data", data_json(d)},
                             {"split", which},
                             {"model", ck.model}});

  const eval::MetricsReport report = eval::evaluate(ck.model, ck.weights, pairs);
  std::ofstream out(r.out + "/report.json", std::ios::trunc);
  out << json(report).dump(2) << "\n";
  std::cout << "evaluated " << report.count << " pairs\n"
            << "restored: SSIM " << report.mean_ssim << ", PSNR " << report.mean_psnr
            << " dB\n"
            << "baseline: SSIM " << report.baseline_mean_ssim << ", PSNR "
            << report.baseline_mean_psnr << " dB\n";
  return kOk;
}

int cmd_benchmark(const Resolved& r, const std::string& ckpt_flag,
                  const std::string& variant_flag, int height, int width, int runs,
                  int warmup) {
  const json& file = r.common.file;
  const std::string ckpt_dir = resolve_string(r.sub, "--ckpt", ckpt_flag, file, "checkpoint");
  model::ModelConfig mcfg = section<model::ModelConfig>(file, "model");
  const std::string variant =
      resolve_string(r.sub, "--variant", variant_flag, file, "variant");
  train::TrainConfig tcfg = section<train::TrainConfig>(file, "train");
  if (r.has_flag("--seed")) tcfg.seed = r.common.seed;
  if (!r.has_flag("--height") && file.contains("height")) file.at("height").get_to(height);
  if (!r.has_flag("--width") && file.contains("width")) file.at("width").get_to(width);
  if (!r.has_flag("--runs") && file.contains("runs")) file.at("runs").get_to(runs);
  if (!r.has_flag("--warmup") && file.contains("warmup")) file.at("warmup").get_to(warmup);

  train::Checkpoint ck;
  if (!ckpt_dir.empty()) {
    ck = train::load_checkpoint(ckpt_dir);
  } else {
    if (!variant.empty()) model::apply_variant(mcfg, variant);
    validate_all({{"model", [&] { mcfg.validate(); }}, {"train", [&] { tcfg.validate(); }}});
    ck = train::fresh_checkpoint(mcfg, tcfg);
  }

  prepare_out(r.out);
  OutDirLock lock(r.out);
  persist_config(r.out, json{{"command", "benchmark"},
                             {"out", r.out},
                             {"device", r.common.device},
                             {"checkpoint", ckpt_dir},
                             {"model", ck.model},
                             {"height", height},
                             {"width", width},
                             {"runs", runs},
                             {"warmup", warmup}});

  const eval::Restorer restore = eval::make_restorer(ck.model, ck.weights);
  const eval::LatencyStats stats = eval::benchmark_latency(
      restore, {ck.model.input_channels, height, width}, runs, warmup, r.common.device);
  std::ofstream out(r.out + "/latency.json", std::ios::trunc);
  out << json(stats).dump(2) << "\n";
  std::cout << "latency at " << width << "x" << height << " over " << runs << " runs ("
            << warmup << " warmup, " << stats.device << "): median " << stats.median
            << " s, mean " << stats.mean << " s, std " << stats.stddev << " s\n";
  return kOk;
}

int cmd_ablate(const Resolved& r, const std::string& data_flag,
               const std::string& extractor_flag) {
  const json& file = r.common.file;
  model::ModelConfig mcfg = section<model::ModelConfig>(file, "model");
  train::TrainConfig tcfg = section<train::TrainConfig>(file, "train");
  if (r.has_flag("--seed")) tcfg.seed = r.common.seed;
  const losses::LossConfig lcfg = section<losses::LossConfig>(file, "loss");
  const std::string extractor_path =
      resolve_string(r.sub, "--extractor", extractor_flag, file, "extractor");
  const DataArgs d = data_args(r, data_flag);

  validate_all({{"model", [&] { mcfg.validate(); }},
                {"train", [&] { tcfg.validate(); }},
                {"loss", [&] { lcfg.validate(mcfg.discriminator_layers); }},
                {"data",
                 [&] {
                   if (d.manifest.empty())
                     throw ConfigError("dataset manifest path is required (--data)");
                 }},
                {"extractor", [&] { load_extractor(extractor_path); }}});

  const data::DatasetSplit split = load_split(d);

  prepare_out(r.out);
  OutDirLock lock(r.out);
  persist_config(r.out, json{{"command", "ablate"},
                             {"out", r.out},
                             {"device", r.common.device},
                             {"data", data_json(d)},
                             {"extractor", extractor_path},
                             {"model", mcfg},
                             {"train", tcfg},
                             {"loss", lcfg}});

  const auto extractor = load_extractor(extractor_path);
  const std::vector<eval::AblationRow> rows =
      eval::run_ablation(split, mcfg, tcfg, lcfg, extractor);
  std::ofstream out(r.out + "/ablation.json", std::ios::trunc);
  out << json(rows).dump(2) << "\n";
  std::cout << "variant   SSIM      PSNR (dB)\n";
  for (const eval::AblationRow& row : rows)
    std::cout << row.variant << (row.variant.size() < 5 ? std::string(5 - row.variant.size(), ' ')
                                                        : "")
              << "  " << row.ssim << "  " << row.psnr << "\n";
  std::cout << "input  " << rows.front().baseline_ssim << "  " << rows.front().baseline_psnr
            << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Raindrop-removal pipeline: synthesis, training, inference, evaluation"};
  app.require_subcommand(1);

  Common common;

  auto* synthesize = app.add_subcommand("synthesize", "corrupt a clean corpus with raindrops");
  add_common(synthesize, common);
  std::string syn_in;
  int syn_channels = 3;
  synthesize->add_option("--in", syn_in, "directory of clean images");
  synthesize->add_option("--channels", syn_channels, "image channel count");

  auto* pretrain = app.add_subcommand("pretrain", "train on synthetically corrupted images");
  add_common(pretrain, common);
  std::string pre_in, pre_extractor, pre_variant;
  pretrain->add_option("--in", pre_in, "directory of clean images");
  pretrain->add_option("--extractor", pre_extractor, "perceptual extractor weights");
  pretrain->add_option("--variant", pre_variant, "architecture variant")
      ->check(CLI::IsMember({"G", "G+E", "G+E+A"}));

  auto* train_cmd = app.add_subcommand("train", "adversarial training on paired data");
  add_common(train_cmd, common);
  std::string tr_data, tr_extractor, tr_variant, tr_init, tr_resume;
  train_cmd->add_option("--data", tr_data, "dataset manifest JSON");
  train_cmd->add_option("--extractor", tr_extractor, "perceptual extractor weights");
  train_cmd->add_option("--variant", tr_variant, "architecture variant")
      ->check(CLI::IsMember({"G", "G+E", "G+E+A"}));
  train_cmd->add_option("--init", tr_init, "checkpoint directory for transfer initialization");
  train_cmd->add_option("--resume", tr_resume, "checkpoint directory to resume from");

  auto* infer = app.add_subcommand("infer", "restore images with a trained checkpoint");
  add_common(infer, common);
  std::string in_ckpt, in_in, in_suffix = "_restored";
  infer->add_option("--ckpt", in_ckpt, "checkpoint directory");
  infer->add_option("--in", in_in, "input image file or directory");
  infer->add_option("--suffix", in_suffix, "output filename suffix");

  auto* evaluate = app.add_subcommand("evaluate", "score a checkpoint with SSIM/PSNR");
  add_common(evaluate, common);
  std::string ev_ckpt, ev_data, ev_split = "all";
  evaluate->add_option("--ckpt", ev_ckpt, "checkpoint directory");
  evaluate->add_option("--data", ev_data, "dataset manifest JSON");
  evaluate->add_option("--split", ev_split, "all, train, val, or test");

  auto* benchmark = app.add_subcommand("benchmark", "measure single-image latency");
  add_common(benchmark, common);
  std::string be_ckpt, be_variant;
  int be_height = 360, be_width = 540, be_runs = 100, be_warmup = 10;
  benchmark->add_option("--ckpt", be_ckpt, "checkpoint directory (fresh weights if omitted)");
  benchmark->add_option("--variant", be_variant, "architecture variant for fresh weights")
      ->check(CLI::IsMember({"G", "G+E", "G+E+A"}));
  benchmark->add_option("--height", be_height, "input height");
  benchmark->add_option("--width", be_width, "input width");
  benchmark->add_option("--runs", be_runs, "timed runs");
  benchmark->add_option("--warmup", be_warmup, "discarded warmup runs");

  auto* ablate = app.add_subcommand("ablate", "train and score G, G+E, G+E+A");
  add_common(ablate, common);
  std::string ab_data, ab_extractor;
  ablate->add_option("--data", ab_data, "dataset manifest JSON");
  ablate->add_option("--extractor", ab_extractor, "perceptual extractor weights");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kOk : kValidationFailure;
  }

  try {
    if (synthesize->parsed())
      return cmd_synthesize(resolve(synthesize, common), syn_in, syn_channels);
    if (pretrain->parsed())
      return cmd_pretrain(resolve(pretrain, common), pre_in, pre_extractor, pre_variant);
    if (train_cmd->parsed())
      return cmd_train(resolve(train_cmd, common), tr_data, tr_extractor, tr_variant, tr_init,
                       tr_resume);
    if (infer->parsed()) return cmd_infer(resolve(infer, common), in_ckpt, in_in, in_suffix);
    if (evaluate->parsed())
      return cmd_evaluate(resolve(evaluate, common), ev_ckpt, ev_data, ev_split);
    if (benchmark->parsed())
      return cmd_benchmark(resolve(benchmark, common), be_ckpt, be_variant, be_height, be_width,
                           be_runs, be_warmup);
    if (ablate->parsed()) return cmd_ablate(resolve(ablate, common), ab_data, ab_extractor);
    std::cerr << "no subcommand selected\n";
    return kValidationFailure;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kValidationFailure;
  } catch (const IncompatibleError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kValidationFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
}

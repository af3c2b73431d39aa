#include "derain/train/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>
#include <utility>

#include "derain/core/errors.hpp"
#include "derain/core/rng.hpp"
#include "derain/eval/metrics.hpp"
#include "derain/model/model.hpp"
#include "derain/nn/serialize.hpp"
#include "derain/nn/tape.hpp"

namespace fs = std::filesystem;

namespace derain::train {

namespace {

constexpr const char* kGenPrefix = "generator.";
constexpr const char* kEnhPrefix = "enhancer.";
constexpr const char* kDiscPrefix = "discriminator.";

bool has_prefix(const std::string& s, const std::string& prefix) {
  return s.rfind(prefix, 0) == 0;
}

// Binds store paths on demand; gradients accumulate only for paths under one
// of the trainable prefixes.
model::ParamLookup bind_trainable(nn::Tape<float>& tape, nn::ParamStore<float>& store,
                                  std::vector<std::string> prefixes) {
  auto memo = std::make_shared<std::unordered_map<std::string, nn::Var>>();
  return [&tape, &store, prefixes = std::move(prefixes), memo](const std::string& path) {
    auto it = memo->find(path);
    if (it != memo->end()) return it->second;
    const bool trainable = std::any_of(prefixes.begin(), prefixes.end(),
                                       [&](const std::string& p) { return has_prefix(path, p); });
    nn::Var v = tape.param(store.value(path), trainable ? &store.grad(path) : nullptr);
    memo->emplace(path, v);
    return v;
  };
}

std::string join_ids(const std::vector<data::ImagePair>& batch) {
  std::string out;
  for (const data::ImagePair& p : batch) {
    if (!out.empty()) out += ", ";
    out += p.id;
  }
  return out;
}

void check_batch(const std::vector<data::ImagePair>& batch, const model::ModelConfig& mconfig,
                 const char* step) {
  if (batch.empty()) throw ConfigError(std::string(step) + ": empty batch");
  for (const data::ImagePair& p : batch) {
    if (!p.affected.same_shape(p.clean))
      throw ShapeError(std::string(step) + ": pair '" + p.id + "' shapes differ, affected " +
                       p.affected.shape_str() + " vs clean " + p.clean.shape_str());
    if (p.affected.dim(0) != mconfig.input_channels)
      throw ShapeError(std::string(step) + ": pair '" + p.id + "' has " +
                       std::to_string(p.affected.dim(0)) + " channels, model expects " +
                       std::to_string(mconfig.input_channels));
  }
}

void check_optimizer_scope(const Adam& optimizer, const std::vector<std::string>& prefixes,
                           const char* step) {
  for (const std::string& path : optimizer.paths()) {
    const bool owned = std::any_of(prefixes.begin(), prefixes.end(),
                                   [&](const std::string& p) { return has_prefix(path, p); });
    if (!owned)
      throw ConfigError(std::string(step) + ": optimizer owns unrelated parameter '" + path +
                        "'");
  }
}

std::vector<nn::Var> head(const std::vector<nn::Var>& v, int n) {
  return {v.begin(), v.begin() + n};
}

// JSON-safe encoding for metrics that may legitimately be infinite.
nlohmann::json metric_to_json(double v) {
  if (std::isfinite(v)) return v;
  std::ostringstream out;
  out << v;
  return out.str();
}

double metric_from_json(const nlohmann::json& j) {
  if (j.is_string()) return std::stod(j.get<std::string>());
  return j.get<double>();
}

std::vector<std::string> mismatched_fields(const model::ModelConfig& a,
                                           const model::ModelConfig& b) {
  std::vector<std::string> out;
  if (a.input_channels != b.input_channels) out.push_back("input_channels");
  if (a.encoder_filters != b.encoder_filters) out.push_back("encoder_filters");
  if (a.residual_blocks != b.residual_blocks) out.push_back("residual_blocks");
  if (a.residual_filters != b.residual_filters) out.push_back("residual_filters");
  if (a.use_aggregation != b.use_aggregation) out.push_back("use_aggregation");
  if (a.use_enhancer != b.use_enhancer) out.push_back("use_enhancer");
  if (a.enhancer_width != b.enhancer_width) out.push_back("enhancer_width");
  if (a.discriminator_layers != b.discriminator_layers) out.push_back("discriminator_layers");
  if (a.patch_receptive_field != b.patch_receptive_field)
    out.push_back("patch_receptive_field");
  return out;
}

int size_granularity(const model::ModelConfig& mconfig) {
  return mconfig.use_enhancer ? 32 : 4;
}

data::ImagePair crop_to_model_space(const data::ImagePair& pair, const TrainConfig& tconfig,
                                    int granularity, core::Rng& rng) {
  const int h = static_cast<int>(pair.affected.dim(1));
  const int w = static_cast<int>(pair.affected.dim(2));
  int crop = std::min({tconfig.crop_size, h, w});
  crop -= crop % granularity;
  if (crop < granularity)
    throw ConfigError("training crop: image '" + pair.id + "' (" + std::to_string(w) + "x" +
                      std::to_string(h) + ") is smaller than the model granularity " +
                      std::to_string(granularity));
  data::ImagePair cropped = data::augment(pair, crop, rng, tconfig.augment_flip);
  cropped.affected = data::normalize(cropped.affected);
  cropped.clean = data::normalize(cropped.clean);
  return cropped;
}

}  // namespace

void TrainConfig::validate() const {
  adam().validate();
  if (batch_size < 1) throw ConfigError("train: batch_size must be at least 1");
  if (max_epochs < 1) throw ConfigError("train: max_epochs must be at least 1");
  if (patience < 1) throw ConfigError("train: patience must be at least 1");
  if (patience > max_epochs) throw ConfigError("train: patience must not exceed max_epochs");
  if (crop_size < 1) throw ConfigError("train: crop_size must be at least 1");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"learning_rate", c.learning_rate},
                     {"beta1", c.beta1},
                     {"beta2", c.beta2},
                     {"adam_epsilon", c.adam_epsilon},
                     {"batch_size", c.batch_size},
                     {"max_epochs", c.max_epochs},
                     {"patience", c.patience},
                     {"crop_size", c.crop_size},
                     {"augment_flip", c.augment_flip},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c = TrainConfig{};
  if (j.contains("learning_rate")) j.at("learning_rate").get_to(c.learning_rate);
  if (j.contains("beta1")) j.at("beta1").get_to(c.beta1);
  if (j.contains("beta2")) j.at("beta2").get_to(c.beta2);
  if (j.contains("adam_epsilon")) j.at("adam_epsilon").get_to(c.adam_epsilon);
  if (j.contains("batch_size")) j.at("batch_size").get_to(c.batch_size);
  if (j.contains("max_epochs")) j.at("max_epochs").get_to(c.max_epochs);
  if (j.contains("patience")) j.at("patience").get_to(c.patience);
  if (j.contains("crop_size")) j.at("crop_size").get_to(c.crop_size);
  if (j.contains("augment_flip")) j.at("augment_flip").get_to(c.augment_flip);
  if (j.contains("seed")) j.at("seed").get_to(c.seed);
}

void to_json(nlohmann::json& j, const EpochRecord& r) {
  j = nlohmann::json{{"epoch", r.epoch},
                     {"disc_loss", r.disc_loss},
                     {"adversarial", r.adversarial},
                     {"feature_match", r.feature_match},
                     {"perceptual", r.perceptual},
                     {"fidelity", r.fidelity},
                     {"val_psnr", metric_to_json(r.val_psnr)},
                     {"val_ssim", r.val_ssim},
                     {"seconds", r.seconds}};
}

void from_json(const nlohmann::json& j, EpochRecord& r) {
  r = EpochRecord{};
  j.at("epoch").get_to(r.epoch);
  j.at("disc_loss").get_to(r.disc_loss);
  j.at("adversarial").get_to(r.adversarial);
  j.at("feature_match").get_to(r.feature_match);
  j.at("perceptual").get_to(r.perceptual);
  j.at("fidelity").get_to(r.fidelity);
  r.val_psnr = metric_from_json(j.at("val_psnr"));
  j.at("val_ssim").get_to(r.val_ssim);
  j.at("seconds").get_to(r.seconds);
}

Checkpoint fresh_checkpoint(const model::ModelConfig& mconfig, const TrainConfig& tconfig) {
  mconfig.validate();
  tconfig.validate();
  Checkpoint ck;
  ck.model = mconfig;
  ck.weights = model::init_weights(mconfig, tconfig.seed);
  std::vector<std::string> gen_paths, disc_paths;
  for (const std::string& path : ck.weights.paths()) {
    if (has_prefix(path, kDiscPrefix))
      disc_paths.push_back(path);
    else
      gen_paths.push_back(path);
  }
  ck.optimizer_g = Adam(tconfig.adam(), ck.weights, std::move(gen_paths));
  ck.optimizer_d = Adam(tconfig.adam(), ck.weights, std::move(disc_paths));
  return ck;
}

void save_checkpoint(const std::string& dir, const Checkpoint& ck) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("checkpoint: cannot create directory '" + dir + "': " + ec.message());
  nn::save_param_store(dir + "/weights.st", ck.weights, {{"format", "restoration-weights"}});
  ck.optimizer_g.save(dir + "/optim_g.st");
  ck.optimizer_d.save(dir + "/optim_d.st");

  nlohmann::json state{{"model", ck.model},
                       {"epoch", ck.epoch},
                       {"best_epoch", ck.best_epoch},
                       {"best_metric", metric_to_json(ck.best_metric)},
                       {"history", ck.history}};
  std::ofstream out(dir + "/state.json", std::ios::trunc);
  if (!out) throw IoError("checkpoint: cannot write '" + dir + "/state.json'");
  out << state.dump(2) << "\n";
  if (!out.flush()) throw IoError("checkpoint: failed writing '" + dir + "/state.json'");
}

Checkpoint load_checkpoint(const std::string& dir) {
  std::ifstream in(dir + "/state.json");
  if (!in) throw IoError("checkpoint: cannot open '" + dir + "/state.json'");
  nlohmann::json state;
  try {
    in >> state;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("checkpoint: malformed state.json in '" + dir + "': " + e.what());
  }

  Checkpoint ck;
  try {
    ck.model = state.at("model").get<model::ModelConfig>();
    ck.epoch = state.at("epoch").get<int>();
    ck.best_epoch = state.at("best_epoch").get<int>();
    ck.best_metric = metric_from_json(state.at("best_metric"));
    ck.history = state.at("history").get<std::vector<EpochRecord>>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("checkpoint: bad state.json in '" + dir + "': " + e.what());
  }
  ck.model.validate();

  for (const model::ParamSpec& spec : model::parameter_schema(ck.model))
    ck.weights.add(spec.path, core::Tensor<float>(spec.dims));
  nn::load_param_store(dir + "/weights.st", ck.weights);
  ck.optimizer_g = Adam::load(dir + "/optim_g.st");
  ck.optimizer_d = Adam::load(dir + "/optim_d.st");
  return ck;
}

nn::ParamStore<float> transfer_init(const Checkpoint& source, const model::ModelConfig& target) {
  const std::vector<std::string> bad = mismatched_fields(source.model, target);
  if (!bad.empty()) {
    std::string names;
    for (const std::string& f : bad) {
      if (!names.empty()) names += ", ";
      names += f;
    }
    throw IncompatibleError("transfer init: model config differs in: " + names);
  }
  return source.weights;
}

double train_discriminator_step(const std::vector<data::ImagePair>& batch,
                                const model::ModelConfig& mconfig,
                                const losses::LossConfig& lconfig,
                                nn::ParamStore<float>& weights, Adam& optimizer) {
  check_batch(batch, mconfig, "discriminator step");
  lconfig.validate(mconfig.discriminator_layers);
  check_optimizer_scope(optimizer, {kDiscPrefix}, "discriminator step");

  weights.zero_grad();
  double loss_sum = 0.0;
  for (const data::ImagePair& pair : batch) {
    nn::Tape<float> tape;
    model::ParamLookup p = bind_trainable(tape, weights, {kDiscPrefix});
    nn::Var affected = tape.constant(pair.affected);
    nn::Var clean = tape.constant(pair.clean);
    nn::Var fake_image = model::generator_forward(tape, mconfig, p, affected);
    model::DiscOutput real = model::discriminator_forward(tape, mconfig, p, clean);
    model::DiscOutput fake = model::discriminator_forward(tape, mconfig, p, fake_image);
    nn::Var loss = losses::discriminator_loss(tape, real.scores, fake.scores);
    tape.backward(loss);
    loss_sum += static_cast<double>(tape.value(loss)[0]);
  }
  const double mean_loss = loss_sum / static_cast<double>(batch.size());
  if (!std::isfinite(mean_loss))
    throw NumericError("discriminator step: non-finite loss " + std::to_string(mean_loss) +
                       " on batch [" + join_ids(batch) + "]");
  weights.scale_grad(1.0f / static_cast<float>(batch.size()));
  optimizer.step(weights);
  return mean_loss;
}

GenStepLosses train_generator_step(const std::vector<data::ImagePair>& batch,
                                   const model::ModelConfig& mconfig,
                                   const losses::LossConfig& lconfig,
                                   const losses::PerceptualExtractor<float>& extractor,
                                   nn::ParamStore<float>& weights, Adam& optimizer) {
  check_batch(batch, mconfig, "generator step");
  lconfig.validate(mconfig.discriminator_layers);
  check_optimizer_scope(optimizer, {kGenPrefix, kEnhPrefix}, "generator step");

  weights.zero_grad();
  GenStepLosses sums;
  for (const data::ImagePair& pair : batch) {
    nn::Tape<float> tape;
    model::ParamLookup p = bind_trainable(tape, weights, {kGenPrefix, kEnhPrefix});
    nn::Var affected = tape.constant(pair.affected);
    nn::Var clean = tape.constant(pair.clean);
    nn::Var generated = model::generator_forward(tape, mconfig, p, affected);
    nn::Var restored = mconfig.use_enhancer
                           ? model::enhancer_forward(tape, mconfig, p, generated, affected)
                           : generated;
    model::DiscOutput real = model::discriminator_forward(tape, mconfig, p, clean);
    model::DiscOutput fake = model::discriminator_forward(tape, mconfig, p, generated);

    try {
      nn::Var adversarial = losses::adversarial_generator_loss(tape, fake.scores);
      nn::Var feature_match =
          losses::feature_matching_loss(tape, head(real.features, lconfig.feature_match_layers),
                                        head(fake.features, lconfig.feature_match_layers),
                                        lconfig);
      nn::Var perceptual = losses::perceptual_loss(tape, clean, restored, extractor, lconfig);
      nn::Var fidelity = losses::fidelity_loss(tape, clean, restored);
      nn::Var total =
          losses::total_generator_loss(tape, adversarial, feature_match, perceptual, fidelity,
                                       lconfig);
      tape.backward(total);
      sums.adversarial += static_cast<double>(tape.value(adversarial)[0]);
      sums.feature_match += static_cast<double>(tape.value(feature_match)[0]);
      sums.perceptual += static_cast<double>(tape.value(perceptual)[0]);
      sums.fidelity += static_cast<double>(tape.value(fidelity)[0]);
      sums.total += static_cast<double>(tape.value(total)[0]);
    } catch (const NumericError& e) {
      throw NumericError(std::string(e.what()) + "; batch [" + join_ids(batch) + "], pair '" +
                         pair.id + "'");
    }
  }
  const double n = static_cast<double>(batch.size());
  GenStepLosses means{sums.adversarial / n, sums.feature_match / n, sums.perceptual / n,
                      sums.fidelity / n, sums.total / n};
  if (!std::isfinite(means.total))
    throw NumericError("generator step: non-finite total loss " + std::to_string(means.total) +
                       " on batch [" + join_ids(batch) + "]");
  weights.scale_grad(1.0f / static_cast<float>(batch.size()));
  optimizer.step(weights);
  return means;
}

data::Image restore_image(const data::Image& affected, const model::ModelConfig& mconfig,
                          nn::ParamStore<float>& weights) {
  auto [padded, record] = data::pad_to_multiple(affected, size_granularity(mconfig));
  nn::Tape<float> tape;
  model::ParamLookup p = bind_trainable(tape, weights, {});
  nn::Var input = tape.constant(data::normalize(padded));
  nn::Var restored = model::restore_forward(tape, mconfig, p, input);
  return data::crop_back(data::denormalize(tape.value(restored)), record);
}

ValScore validation_score(const std::vector<data::ImagePair>& val_set,
                          const model::ModelConfig& mconfig, nn::ParamStore<float>& weights) {
  if (val_set.empty()) throw ConfigError("validation: empty validation set");
  double psnr_sum = 0.0, ssim_sum = 0.0;
  int finite = 0;
  for (const data::ImagePair& pair : val_set) {
    const data::Image restored = restore_image(pair.affected, mconfig, weights);
    const double p = eval::psnr(restored, pair.clean);
    ssim_sum += eval::ssim(restored, pair.clean);
    if (std::isfinite(p)) {
      psnr_sum += p;
      ++finite;
    }
  }
  ValScore score;
  score.psnr = finite > 0 ? psnr_sum / finite : std::numeric_limits<double>::infinity();
  score.ssim = ssim_sum / static_cast<double>(val_set.size());
  return score;
}

Checkpoint train_from_source(const EpochSource& train_source,
                             const std::vector<data::ImagePair>& val_set,
                             const model::ModelConfig& mconfig, const TrainConfig& tconfig,
                             const losses::LossConfig& lconfig,
                             const losses::PerceptualExtractor<float>& extractor,
                             Checkpoint start, const std::string& out_dir) {
  mconfig.validate();
  tconfig.validate();
  lconfig.validate(mconfig.discriminator_layers);
  if (val_set.empty()) throw ConfigError("train: empty validation set");

  const std::vector<std::string> bad = mismatched_fields(start.model, mconfig);
  if (!bad.empty()) {
    std::string names;
    for (const std::string& f : bad) {
      if (!names.empty()) names += ", ";
      names += f;
    }
    throw IncompatibleError("train: checkpoint model config differs in: " + names);
  }
  if (start.optimizer_g.config() != tconfig.adam() || start.optimizer_d.config() != tconfig.adam())
    throw IncompatibleError("train: checkpoint optimizer hyperparameters differ from config");
  if (static_cast<int>(start.history.size()) != start.epoch)
    throw IncompatibleError("train: checkpoint history length " +
                            std::to_string(start.history.size()) + " does not match epoch " +
                            std::to_string(start.epoch));

  EarlyStopper stopper(tconfig.patience);
  for (const EpochRecord& r : start.history) stopper.report(r.val_psnr);

  Checkpoint ck = std::move(start);
  Checkpoint best = ck;
  bool improved_this_run = false;

  std::ofstream log;
  if (!out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("train: cannot create '" + out_dir + "': " + ec.message());
    log.open(out_dir + "/epochs.jsonl", ck.epoch == 0 ? std::ios::trunc : std::ios::app);
    if (!log) throw IoError("train: cannot open '" + out_dir + "/epochs.jsonl'");
  }

  const int granularity = size_granularity(mconfig);
  for (int epoch = ck.epoch + 1; epoch <= tconfig.max_epochs && !stopper.should_stop();
       ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<data::ImagePair>& pool = train_source(epoch);
    if (pool.empty()) throw ConfigError("train: empty training set for epoch " +
                                        std::to_string(epoch));

    core::Rng rng(core::Rng::mix(tconfig.seed, static_cast<std::uint64_t>(epoch)));
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size() - 1; i > 0; --i)
      std::swap(order[i], order[rng.uniform_int(0, static_cast<int>(i))]);

    EpochRecord record;
    record.epoch = epoch;
    std::size_t done = 0;
    while (done < order.size()) {
      const std::size_t take =
          std::min<std::size_t>(static_cast<std::size_t>(tconfig.batch_size),
                                order.size() - done);
      std::vector<data::ImagePair> batch;
      batch.reserve(take);
      for (std::size_t k = 0; k < take; ++k)
        batch.push_back(crop_to_model_space(pool[order[done + k]], tconfig, granularity, rng));
      done += take;

      const double w = static_cast<double>(take) / static_cast<double>(order.size());
      record.disc_loss +=
          w * train_discriminator_step(batch, mconfig, lconfig, ck.weights, ck.optimizer_d);
      const GenStepLosses g =
          train_generator_step(batch, mconfig, lconfig, extractor, ck.weights, ck.optimizer_g);
      record.adversarial += w * g.adversarial;
      record.feature_match += w * g.feature_match;
      record.perceptual += w * g.perceptual;
      record.fidelity += w * g.fidelity;
    }

    const ValScore val = validation_score(val_set, mconfig, ck.weights);
    record.val_psnr = val.psnr;
    record.val_ssim = val.ssim;
    record.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const bool is_best = stopper.report(val.psnr);
    ck.epoch = epoch;
    ck.best_epoch = stopper.best_epoch();
    ck.best_metric = stopper.best_metric();
    ck.history.push_back(record);
    if (is_best) {
      best = ck;
      improved_this_run = true;
    }

    if (!out_dir.empty()) {
      save_checkpoint(out_dir + "/last", ck);
      if (is_best) save_checkpoint(out_dir + "/best", ck);
      log << nlohmann::json(record).dump() << "\n";
      log.flush();
    }
  }

  if (!improved_this_run) return ck;
  best.epoch = ck.epoch;
  best.best_epoch = ck.best_epoch;
  best.best_metric = ck.best_metric;
  best.history = ck.history;
  return best;
}

Checkpoint train(const std::vector<data::ImagePair>& train_set,
                 const std::vector<data::ImagePair>& val_set,
                 const model::ModelConfig& mconfig, const TrainConfig& tconfig,
                 const losses::LossConfig& lconfig,
                 const losses::PerceptualExtractor<float>& extractor, Checkpoint start,
                 const std::string& out_dir) {
  if (train_set.empty()) throw ConfigError("train: empty training set");
  const auto source = [&train_set](int) -> const std::vector<data::ImagePair>& {
    return train_set;
  };
  return train_from_source(source, val_set, mconfig, tconfig, lconfig, extractor,
                           std::move(start), out_dir);
}

Checkpoint pretrain_synthetic(const std::vector<data::Image>& clean_images,
                              const synth::RainConfig& rain,
                              const model::ModelConfig& mconfig, const TrainConfig& tconfig,
                              const losses::LossConfig& lconfig,
                              const losses::PerceptualExtractor<float>& extractor,
                              const std::string& out_dir) {
  rain.validate();
  tconfig.validate();
  const std::size_t n = clean_images.size();
  if (n < 2) throw ConfigError("pretrain: need at least 2 clean images, got " +
                               std::to_string(n));
  const std::size_t val_count = std::max<std::size_t>(1, n / 10);
  const std::size_t train_count = n - val_count;

  const auto corrupt = [&rain](const data::Image& clean, std::uint64_t seed) {
    synth::RainConfig rc = rain;
    rc.seed = seed;
    return synth::composite_raindrops(clean, rc).rainy;
  };

  std::vector<data::ImagePair> val_set;
  val_set.reserve(val_count);
  for (std::size_t i = 0; i < val_count; ++i) {
    const data::Image& clean = clean_images[train_count + i];
    const std::uint64_t seed =
        core::Rng::mix(core::Rng::mix(tconfig.seed, 0), train_count + i);
    val_set.push_back({corrupt(clean, seed), clean, "synth_val_" + std::to_string(i),
                       data::PairSource::kSynthetic});
  }

  auto buffer = std::make_shared<std::vector<data::ImagePair>>();
  const auto source = [&clean_images, &corrupt, &tconfig, train_count,
                       buffer](int epoch) -> const std::vector<data::ImagePair>& {
    buffer->clear();
    buffer->reserve(train_count);
    for (std::size_t i = 0; i < train_count; ++i) {
      const std::uint64_t seed =
          core::Rng::mix(core::Rng::mix(tconfig.seed, static_cast<std::uint64_t>(epoch)), i);
      buffer->push_back({corrupt(clean_images[i], seed), clean_images[i],
                         "synth_" + std::to_string(i), data::PairSource::kSynthetic});
    }
    return *buffer;
  };

  return train_from_source(source, val_set, mconfig, tconfig, lconfig, extractor,
                           fresh_checkpoint(mconfig, tconfig), out_dir);
}

}  // namespace derain::train

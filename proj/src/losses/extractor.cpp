#include "derain/losses/extractor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <utility>

#include "derain/core/errors.hpp"
#include "derain/core/hash.hpp"
#include "derain/core/rng.hpp"
#include "derain/nn/serialize.hpp"

namespace derain::losses {

using core::Rng;
using nn::Var;

namespace {

template <typename T>
Tensor<T> widen(const Tensor<float>& t) {
  Tensor<T> out(t.dims());
  for (std::int64_t i = 0; i < t.numel(); ++i) out[i] = static_cast<T>(t[i]);
  return out;
}

[[noreturn]] void bad_archive(const std::string& path, const std::string& why) {
  throw ResourceError("perceptual extractor '" + path + "': " + why);
}

}  // namespace

template <typename T>
PerceptualExtractor<T> PerceptualExtractor<T>::load(const std::string& path) {
  std::vector<nn::NamedTensor> raw;
  try {
    raw = nn::load_tensor_archive(path);
  } catch (const Error& e) {
    throw ResourceError("perceptual extractor '" + path + "': " + e.what());
  }

  struct Slot {
    std::optional<Tensor<float>> weight, bias;
  };
  std::map<int, std::map<int, Slot>> stages;
  std::optional<Tensor<float>> mean, stdev;
  const std::regex conv_re(R"(stage([1-9][0-9]*)\.conv([1-9][0-9]*)\.(weight|bias))");
  for (auto& nt : raw) {
    std::smatch m;
    if (nt.name == "input.mean") {
      mean = std::move(nt.value);
    } else if (nt.name == "input.std") {
      stdev = std::move(nt.value);
    } else if (std::regex_match(nt.name, m, conv_re)) {
      Slot& slot = stages[std::stoi(m[1].str())][std::stoi(m[2].str())];
      (m[3] == "weight" ? slot.weight : slot.bias) = std::move(nt.value);
    } else {
      bad_archive(path, "unexpected tensor '" + nt.name + "'");
    }
  }

  if (!mean || !stdev) bad_archive(path, "missing input.mean or input.std");
  if (mean->rank() != 1 || mean->numel() != 3 || stdev->rank() != 1 || stdev->numel() != 3)
    bad_archive(path, "input.mean and input.std must have shape (3)");
  if (stages.empty()) bad_archive(path, "no convolution stages");

  PerceptualExtractor<T> ex;
  for (int c = 0; c < 3; ++c) {
    if (!((*stdev)[c] > 0.0f)) bad_archive(path, "input.std must be positive");
    ex.mean_.push_back(static_cast<T>((*mean)[c]));
    ex.stdev_.push_back(static_cast<T>((*stdev)[c]));
  }

  int in_c = 3;
  for (const auto& [si, convs] : stages) {
    const int want_stage = static_cast<int>(ex.stage_convs_.size()) + 1;
    if (si != want_stage) bad_archive(path, "stage numbers must be contiguous from 1");
    std::vector<Conv> built;
    for (const auto& [ci, slot] : convs) {
      if (ci != static_cast<int>(built.size()) + 1)
        bad_archive(path, "conv numbers must be contiguous from 1");
      const std::string where = "stage" + std::to_string(si) + ".conv" + std::to_string(ci);
      if (!slot.weight || !slot.bias) bad_archive(path, where + " needs weight and bias");
      const Tensor<float>& w = *slot.weight;
      if (w.rank() != 4 || w.dims()[2] != 3 || w.dims()[3] != 3 || w.dims()[1] != in_c)
        bad_archive(path, where + ".weight must be (OC," + std::to_string(in_c) + ",3,3)");
      if (slot.bias->rank() != 1 || slot.bias->numel() != w.dims()[0])
        bad_archive(path, where + ".bias must match the output channels");
      in_c = w.dims()[0];
      built.push_back({widen<T>(w), widen<T>(*slot.bias)});
    }
    ex.stage_convs_.push_back(std::move(built));
    ex.names_.push_back("stage" + std::to_string(si));
  }
  return ex;
}

template <typename T>
Var PerceptualExtractor<T>::normalize(nn::Tape<T>& tape, Var image) const {
  if (tape.value(image).rank() != 3 || tape.value(image).channels() != 3)
    throw ShapeError("extractor input must be (3,H,W), got " + tape.value(image).shape_str());
  // (x+1)/2 in [0,1], then (. - mean) / std, folded into one affine map.
  std::vector<T> scale(3), shift(3);
  for (int c = 0; c < 3; ++c) {
    scale[c] = T(1) / (T(2) * stdev_[c]);
    shift[c] = (T(0.5) - mean_[c]) / stdev_[c];
  }
  return tape.channel_scale_shift(image, scale, shift);
}

template <typename T>
std::vector<Var> PerceptualExtractor<T>::forward(nn::Tape<T>& tape, Var x,
                                                 const std::vector<std::string>& taps) const {
  if (taps.empty()) throw ConfigError("no extractor taps requested");
  int deepest = 0;
  for (const std::string& name : taps) {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end())
      throw ConfigError("extractor has no tap '" + name + "' (stages: 1.." +
                        std::to_string(stages()) + ")");
    deepest = std::max(deepest, static_cast<int>(it - names_.begin()) + 1);
  }

  std::map<std::string, Var> by_name;
  for (int s = 0; s < deepest; ++s) {
    if (s > 0) x = tape.max_pool2(x);
    for (const Conv& c : stage_convs_[static_cast<std::size_t>(s)]) {
      x = tape.relu(tape.conv2d(x, tape.param(c.weight, nullptr),
                                tape.param(c.bias, nullptr), 1, 1));
    }
    by_name[names_[static_cast<std::size_t>(s)]] = x;
  }

  std::vector<Var> out;
  for (const std::string& name : taps) out.push_back(by_name.at(name));
  return out;
}

void write_random_extractor(const std::string& path, std::uint64_t seed,
                            const std::vector<int>& stage_widths, int convs_per_stage) {
  if (stage_widths.empty() || convs_per_stage < 1)
    throw ConfigError("extractor needs at least one stage and one conv per stage");
  for (int w : stage_widths)
    if (w < 1) throw ConfigError("extractor stage widths must be positive");

  std::vector<nn::NamedTensor> owned;
  int in_c = 3;
  for (std::size_t s = 0; s < stage_widths.size(); ++s) {
    const int out_c = stage_widths[s];
    for (int c = 1; c <= convs_per_stage; ++c) {
      const std::string base =
          "stage" + std::to_string(s + 1) + ".conv" + std::to_string(c);
      Tensor<float> w({out_c, in_c, 3, 3});
      Rng rng(Rng::mix(seed, core::fnv1a64(base)));
      const double stddev = std::sqrt(2.0 / (9.0 * in_c));
      for (std::int64_t i = 0; i < w.numel(); ++i)
        w[i] = static_cast<float>(rng.normal(0.0, stddev));
      owned.push_back({base + ".weight", std::move(w)});
      owned.push_back({base + ".bias", Tensor<float>::zeros({out_c})});
      in_c = out_c;
    }
  }
  Tensor<float> mean({3}), stdev({3});
  const float kMean[3] = {0.485f, 0.456f, 0.406f};
  const float kStd[3] = {0.229f, 0.224f, 0.225f};
  for (int c = 0; c < 3; ++c) {
    mean[c] = kMean[c];
    stdev[c] = kStd[c];
  }
  owned.push_back({"input.mean", std::move(mean)});
  owned.push_back({"input.std", std::move(stdev)});

  std::vector<std::pair<std::string, const Tensor<float>*>> refs;
  refs.reserve(owned.size());
  for (const auto& nt : owned) refs.emplace_back(nt.name, &nt.value);
  nn::save_tensor_archive(path, refs,
                          {{"format", "relu-tap-extractor"},
                           {"stages", std::to_string(stage_widths.size())}});
}

template class PerceptualExtractor<float>;
template class PerceptualExtractor<double>;

}  // namespace derain::losses

#include "derain/train/optim.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <utility>

#include "derain/core/errors.hpp"
#include "derain/nn/serialize.hpp"

namespace derain::train {

namespace {

std::string format_double(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

double parse_double(const std::map<std::string, std::string>& meta, const std::string& key) {
  auto it = meta.find(key);
  if (it == meta.end()) throw IoError("optimizer archive: missing metadata key '" + key + "'");
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw IoError("optimizer archive: bad value for '" + key + "': " + it->second);
  }
}

}  // namespace

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("adam: learning_rate must be positive and finite");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("adam: beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("adam: beta2 must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("adam: epsilon must be positive");
}

Adam::Adam(const AdamConfig& config, const nn::ParamStore<float>& store,
           std::vector<std::string> paths)
    : config_(config), paths_(std::move(paths)) {
  config_.validate();
  moment1_.reserve(paths_.size());
  moment2_.reserve(paths_.size());
  for (const std::string& path : paths_) {
    const auto& dims = store.value(path).dims();
    moment1_.emplace_back(dims);
    moment2_.emplace_back(dims);
  }
}

void Adam::step(nn::ParamStore<float>& store) {
  if (paths_.empty()) throw ConfigError("adam: optimizer has no parameters");
  ++steps_;
  const double correction1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double correction2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < paths_.size(); ++i) {
    core::Tensor<float>& value = store.value(paths_[i]);
    const core::Tensor<float>& grad = store.grad(paths_[i]);
    core::Tensor<float>& m = moment1_[i];
    core::Tensor<float>& v = moment2_[i];
    if (!value.same_shape(m))
      throw ShapeError("adam: parameter '" + paths_[i] + "' shape " + value.shape_str() +
                       " does not match optimizer state " + m.shape_str());
    for (std::int64_t j = 0; j < value.numel(); ++j) {
      const double g = static_cast<double>(grad[j]);
      const double m_next = config_.beta1 * static_cast<double>(m[j]) + (1.0 - config_.beta1) * g;
      const double v_next =
          config_.beta2 * static_cast<double>(v[j]) + (1.0 - config_.beta2) * g * g;
      m[j] = static_cast<float>(m_next);
      v[j] = static_cast<float>(v_next);
      const double m_hat = m_next / correction1;
      const double v_hat = v_next / correction2;
      value[j] = static_cast<float>(static_cast<double>(value[j]) -
                                    config_.learning_rate * m_hat /
                                        (std::sqrt(v_hat) + config_.epsilon));
    }
  }
}

void Adam::save(const std::string& path) const {
  std::vector<std::pair<std::string, const core::Tensor<float>*>> tensors;
  tensors.reserve(paths_.size() * 2);
  for (std::size_t i = 0; i < paths_.size(); ++i) {
    tensors.emplace_back(paths_[i] + ".m", &moment1_[i]);
    tensors.emplace_back(paths_[i] + ".v", &moment2_[i]);
  }
  std::map<std::string, std::string> meta{
      {"format", "adam-state"},
      {"steps", std::to_string(steps_)},
      {"learning_rate", format_double(config_.learning_rate)},
      {"beta1", format_double(config_.beta1)},
      {"beta2", format_double(config_.beta2)},
      {"epsilon", format_double(config_.epsilon)},
  };
  nn::save_tensor_archive(path, tensors, meta);
}

Adam Adam::load(const std::string& path) {
  std::map<std::string, std::string> meta;
  std::vector<nn::NamedTensor> tensors = nn::load_tensor_archive(path, &meta);
  Adam out;
  out.config_.learning_rate = parse_double(meta, "learning_rate");
  out.config_.beta1 = parse_double(meta, "beta1");
  out.config_.beta2 = parse_double(meta, "beta2");
  out.config_.epsilon = parse_double(meta, "epsilon");
  out.config_.validate();
  out.steps_ = static_cast<std::int64_t>(parse_double(meta, "steps"));

  std::map<std::string, core::Tensor<float>> m_slots, v_slots;
  std::vector<std::string> order;
  for (nn::NamedTensor& t : tensors) {
    const std::string& name = t.name;
    if (name.size() > 2 && name.compare(name.size() - 2, 2, ".m") == 0) {
      order.push_back(name.substr(0, name.size() - 2));
      m_slots.emplace(order.back(), std::move(t.value));
    } else if (name.size() > 2 && name.compare(name.size() - 2, 2, ".v") == 0) {
      v_slots.emplace(name.substr(0, name.size() - 2), std::move(t.value));
    } else {
      throw IoError("optimizer archive: unexpected tensor '" + name + "'");
    }
  }
  for (const std::string& p : order) {
    auto it = v_slots.find(p);
    if (it == v_slots.end())
      throw IoError("optimizer archive: missing second moment for '" + p + "'");
    if (!it->second.same_shape(m_slots.at(p)))
      throw IoError("optimizer archive: moment shape mismatch for '" + p + "'");
    out.paths_.push_back(p);
    out.moment1_.push_back(std::move(m_slots.at(p)));
    out.moment2_.push_back(std::move(it->second));
    v_slots.erase(it);
  }
  if (!v_slots.empty())
    throw IoError("optimizer archive: second moment without first for '" +
                  v_slots.begin()->first + "'");
  return out;
}

EarlyStopper::EarlyStopper(int patience) : patience_(patience) {
  if (patience < 1) throw ConfigError("early stopping: patience must be at least 1");
}

bool EarlyStopper::report(double metric) {
  ++epoch_;
  if (metric > best_metric_) {
    best_metric_ = metric;
    best_epoch_ = epoch_;
    return true;
  }
  return false;
}

bool EarlyStopper::should_stop() const {
  return best_epoch_ > 0 && epoch_ - best_epoch_ >= patience_;
}

}  // namespace derain::train

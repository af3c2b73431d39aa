#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "derain/core/errors.hpp"
#include "derain/core/tensor.hpp"

namespace derain::nn {

// Named trainable tensors with paired gradient buffers. Entries keep their
// insertion order for serialization and iteration; references stay valid for
// the lifetime of the store (tapes bind pointers to them).
template <typename T>
class ParamStore {
 public:
  core::Tensor<T>& add(const std::string& path, core::Tensor<T> value) {
    if (map_.count(path)) throw ConfigError("duplicate parameter path: " + path);
    order_.push_back(path);
    Entry& e = map_[path];
    e.grad = core::Tensor<T>(value.dims());
    e.value = std::move(value);
    return e.value;
  }

  bool has(const std::string& path) const { return map_.count(path) != 0; }
  core::Tensor<T>& value(const std::string& path) { return entry(path).value; }
  const core::Tensor<T>& value(const std::string& path) const { return entry(path).value; }
  core::Tensor<T>& grad(const std::string& path) { return entry(path).grad; }
  const core::Tensor<T>& grad(const std::string& path) const { return entry(path).grad; }

  const std::vector<std::string>& paths() const { return order_; }
  std::size_t size() const { return order_.size(); }

  void zero_grad() {
    for (auto& [path, e] : map_) e.grad.fill(T(0));
  }

  void scale_grad(T factor) {
    for (auto& [path, e] : map_)
      for (std::int64_t i = 0; i < e.grad.numel(); ++i) e.grad[i] *= factor;
  }

  std::int64_t count() const {
    std::int64_t n = 0;
    for (const auto& p : order_) n += map_.at(p).value.numel();
    return n;
  }

 private:
  struct Entry {
    core::Tensor<T> value, grad;
  };

  Entry& entry(const std::string& path) {
    auto it = map_.find(path);
    if (it == map_.end()) throw ConfigError("unknown parameter path: " + path);
    return it->second;
  }
  const Entry& entry(const std::string& path) const {
    auto it = map_.find(path);
    if (it == map_.end()) throw ConfigError("unknown parameter path: " + path);
    return it->second;
  }

  std::vector<std::string> order_;
  std::unordered_map<std::string, Entry> map_;
};

}  // namespace derain::nn

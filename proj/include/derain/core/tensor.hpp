#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "derain/core/errors.hpp"

namespace derain::core {

// Dense row-major tensor of rank 1..4. Activations and images use CHW order;
// convolution filters use (out_c, in_c, k_h, k_w).
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> dims) : dims_(std::move(dims)) {
    std::int64_t n = 1;
    for (int d : dims_) {
      if (d <= 0) throw ShapeError("tensor dimension must be positive, got " + shape_str());
      n *= d;
    }
    data_.assign(static_cast<std::size_t>(n), T(0));
  }

  Tensor(std::initializer_list<int> dims) : Tensor(std::vector<int>(dims)) {}

  static Tensor zeros(std::vector<int> dims) { return Tensor(std::move(dims)); }

  static Tensor full(std::vector<int> dims, T value) {
    Tensor t(std::move(dims));
    t.fill(value);
    return t;
  }

  int rank() const { return static_cast<int>(dims_.size()); }
  int dim(int i) const { return dims_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& dims() const { return dims_; }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  // CHW accessors for image-like tensors.
  int channels() const { return dims_.at(0); }
  int height() const { return dims_.at(1); }
  int width() const { return dims_.at(2); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  const T& operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  T& operator()(int c, int y, int x) {
    return data_[(static_cast<std::size_t>(c) * dims_[1] + y) * dims_[2] + x];
  }
  const T& operator()(int c, int y, int x) const {
    return data_[(static_cast<std::size_t>(c) * dims_[1] + y) * dims_[2] + x];
  }
  T& operator()(int a, int b, int c, int d) {
    return data_[((static_cast<std::size_t>(a) * dims_[1] + b) * dims_[2] + c) * dims_[3] + d];
  }
  const T& operator()(int a, int b, int c, int d) const {
    return data_[((static_cast<std::size_t>(a) * dims_[1] + b) * dims_[2] + c) * dims_[3] + d];
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  bool same_shape(const Tensor& other) const { return dims_ == other.dims_; }

  std::string shape_str() const {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < dims_.size(); ++i) os << (i ? "x" : "") << dims_[i];
    os << ")";
    return os.str();
  }

  bool operator==(const Tensor& other) const {
    return dims_ == other.dims_ && data_ == other.data_;
  }

 private:
  std::vector<int> dims_;
  std::vector<T> data_;
};

using Image = Tensor<float>;  // metric space [0,1] or model space [-1,1]; callers convert explicitly

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(what) + ": shape mismatch " + a.shape_str() + " vs " +
                     b.shape_str());
}

}  // namespace derain::core

#pragma once

#include <functional>
#include <vector>

#include "derain/core/tensor.hpp"

namespace derain::nn {

using core::Tensor;

// Handle to a node on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode autodiff over a linear tape of tensor ops.
//
// Leaves are either constants (no gradient) or parameters bound to external
// value/grad storage; backward() accumulates parameter gradients into the
// bound grad tensors, so one optimiser step can sum gradients from several
// tapes (e.g. averaging over a batch). All reductions accumulate serially in
// double, so results are bit-reproducible at any thread count.
//
// A tape is built forward once and differentiated at most once.
template <typename T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor<T> v);
  // grad == nullptr binds the value as frozen (no gradient accumulation).
  Var param(const Tensor<T>& value, Tensor<T>* grad);

  const Tensor<T>& value(Var v) const;
  const Tensor<T>& grad(Var v) const;  // valid after backward()
  bool needs_grad(Var v) const;
  int size() const { return static_cast<int>(nodes_.size()); }

  // x: (C,H,W), w: (OC,C,kh,kw), b: (OC) or invalid Var for no bias.
  Var conv2d(Var x, Var w, Var b, int stride, int pad);
  Var instance_norm(Var x, Var gain, Var bias, T eps = T(1e-5));
  Var relu(Var x);
  Var leaky_relu(Var x, T slope);
  Var tanh_sat(Var x);
  Var avg_pool(Var x, int k);
  Var max_pool2(Var x);
  Var upsample_nearest(Var x, int f);
  Var upsample_bilinear(Var x, int f);
  Var concat(const std::vector<Var>& xs);
  Var add(Var a, Var b);
  // y[c,...] = x[c,...] * scale[c] + shift[c], scale/shift fixed.
  Var channel_scale_shift(Var x, std::vector<T> scale, std::vector<T> shift);

  // Scalar losses (rank-1, single element).
  Var mse(Var a, Var b);                // mean (a-b)^2
  Var mae(Var a, Var b);                // mean |a-b|
  Var mean_sq_diff(Var a, T target);    // mean (a-target)^2
  Var weighted_sum(const std::vector<Var>& scalars, const std::vector<T>& weights);

  void backward(Var scalar_loss);

 private:
  struct Node {
    Tensor<T> value;                 // owned value (unused when ext_value set)
    const Tensor<T>* ext_value = nullptr;
    Tensor<T>* ext_grad = nullptr;   // parameter leaves accumulate here
    Tensor<T> grad;
    bool needs_grad = false;
    std::function<void()> back;      // distributes this->grad to inputs
  };

  const Tensor<T>& val(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.ext_value ? *n.ext_value : n.value;
  }
  Tensor<T>& grad_of(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }
  bool wants(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }
  Var push(Node n);
  const Node& node(Var v) const;

  std::vector<Node> nodes_;
  bool ran_backward_ = false;
};

}  // namespace derain::nn

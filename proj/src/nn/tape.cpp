#include "derain/nn/tape.hpp"

#include <cmath>
#include <cstring>
#include <utility>

#include "derain/core/errors.hpp"
#include "derain/core/kernels.hpp"

namespace derain::nn {

namespace {

template <typename T>
void add_into(Tensor<T>& dst, const Tensor<T>& src) {
  core::add_forward(static_cast<std::size_t>(dst.numel()), dst.data(), src.data(), dst.data());
}

template <typename T>
void add_into_range(Tensor<T>& dst, std::int64_t dst_off, const Tensor<T>& src,
                    std::int64_t src_off, std::int64_t n) {
  core::add_forward(static_cast<std::size_t>(n), dst.data() + dst_off, src.data() + src_off,
                    dst.data() + dst_off);
}

}  // namespace

template <typename T>
Var Tape<T>::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
const typename Tape<T>::Node& Tape<T>::node(Var v) const {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
    throw Error("tape: Var does not belong to this tape");
  return nodes_[static_cast<std::size_t>(v.id)];
}

template <typename T>
Var Tape<T>::constant(Tensor<T> v) {
  Node n;
  n.value = std::move(v);
  return push(std::move(n));
}

template <typename T>
Var Tape<T>::param(const Tensor<T>& value, Tensor<T>* grad) {
  if (grad && !grad->same_shape(value))
    throw ShapeError("tape: parameter grad shape " + grad->shape_str() + " != value shape " +
                     value.shape_str());
  Node n;
  n.ext_value = &value;
  n.ext_grad = grad;
  n.needs_grad = grad != nullptr;
  Var v = push(std::move(n));
  if (grad) {
    Node& self = nodes_.back();
    Tensor<T>* g = grad;
    self.back = [this, id = v.id, g] { add_into(*g, grad_of(id)); };
  }
  return v;
}

template <typename T>
const Tensor<T>& Tape<T>::value(Var v) const {
  node(v);
  return val(v.id);
}

template <typename T>
const Tensor<T>& Tape<T>::grad(Var v) const {
  const Node& n = node(v);
  if (!ran_backward_) throw Error("tape: grad requested before backward()");
  if (!n.needs_grad) throw Error("tape: node does not require gradients");
  return n.grad;
}

template <typename T>
bool Tape<T>::needs_grad(Var v) const {
  return node(v).needs_grad;
}

template <typename T>
Var Tape<T>::conv2d(Var x, Var w, Var b, int stride, int pad) {
  const Tensor<T>& xv = value(x);
  const Tensor<T>& wv = value(w);
  if (xv.rank() != 3) throw ShapeError("conv2d: input must be rank 3, got " + xv.shape_str());
  if (wv.rank() != 4) throw ShapeError("conv2d: filter must be rank 4, got " + wv.shape_str());
  if (wv.dim(1) != xv.dim(0))
    throw ShapeError("conv2d: filter expects " + std::to_string(wv.dim(1)) +
                     " input channels, image has " + std::to_string(xv.dim(0)));
  if (b.valid()) {
    const Tensor<T>& bv = value(b);
    if (bv.rank() != 1 || bv.dim(0) != wv.dim(0))
      throw ShapeError("conv2d: bias must be rank 1 with one entry per filter");
  }
  const core::Conv2dShape s{xv.dim(0), xv.dim(1), xv.dim(2), wv.dim(0),
                            wv.dim(2), wv.dim(3), stride,    pad};
  if (!s.valid())
    throw ShapeError("conv2d: invalid geometry for input " + xv.shape_str() + ", filter " +
                     wv.shape_str());

  Node n;
  n.value = Tensor<T>({s.out_c, s.out_h(), s.out_w()});
  core::conv2d_forward(s, xv.data(), wv.data(), b.valid() ? value(b).data() : nullptr,
                       n.value.data());
  n.needs_grad = wants(x.id) || wants(w.id) || (b.valid() && wants(b.id));
  Var out = push(std::move(n));
  if (nodes_.back().needs_grad) {
    nodes_.back().back = [this, s, xid = x.id, wid = w.id, bid = b.id, oid = out.id] {
      const Tensor<T>& g = grad_of(oid);
      if (wants(xid)) {
        Tensor<T> gx(val(xid).dims());
        core::conv2d_backward_input(s, g.data(), val(wid).data(), gx.data());
        add_into(grad_of(xid), gx);
      }
      const bool want_b = bid >= 0 && wants(bid);
      if (wants(wid) || want_b) {
        Tensor<T> gw(val(wid).dims());
        Tensor<T> gb({s.out_c});
        core::conv2d_backward_filter(s, g.data(), val(xid).data(), gw.data(),
                                     want_b ? gb.data() : nullptr);
        if (wants(wid)) add_into(grad_of(wid), gw);
        if (want_b) add_into(grad_of(bid), gb);
      }
    };
  }
  return out;
}

template <typename T>
Var Tape<T>::instance_norm(Var x, Var gain, Var bias, T eps) {
  const Tensor<T>& xv = value(x);
  if (xv.rank() != 3) throw ShapeError("instance_norm: input must be rank 3");
  const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
  const Tensor<T>& gv = value(gain);
  const Tensor<T>& bv = value(bias);
  if (gv.rank() != 1 || gv.dim(0) != c || bv.rank() != 1 || bv.dim(0) != c)
    throw ShapeError("instance_norm: gain/bias must have one entry per channel");

  Node n;
  n.value = Tensor<T>(xv.dims());
  std::vector<double> mean(static_cast<std::size_t>(c)), invstd(static_cast<std::size_t>(c));
  core::instance_norm_forward(c, h, w, xv.data(), gv.data(), bv.data(), eps, n.value.data(),
                              mean.data(), invstd.data());
  n.needs_grad = wants(x.id) || wants(gain.id) || wants(bias.id);
  Var out = push(std::move(n));
  if (nodes_.back().needs_grad) {
    nodes_.back().back = [this, c, h, w, xid = x.id, gid = gain.id, bid = bias.id, oid = out.id,
                          mean = std::move(mean), invstd = std::move(invstd)] {
      Tensor<T> gx(val(xid).dims());
      Tensor<T> gg({c}), gb({c});
      core::instance_norm_backward(c, h, w, val(xid).data(), val(gid).data(), mean.data(),
                                   invstd.data(), grad_of(oid).data(), gx.data(), gg.data(),
                                   gb.data());
      if (wants(xid)) add_into(grad_of(xid), gx);
      if (wants(gid)) add_into(grad_of(gid), gg);
      if (wants(bid)) add_into(grad_of(bid), gb);
    };
  }
  return out;
}

template <typename T>
Var Tape<T>::relu(Var x) {
  const Tensor<T>& xv = value(x);
  Node n;
  n.value = Tensor<T>(xv.dims());
  core::relu_forward(static_cast<std::size_t>(xv.numel()), xv.data(), n.value.data());
  n.needs_grad = wants(x.id);
  Var out = push(std::move(n));
  if (nodes_.back().needs_grad) {
    nodes_.back().back = [this, xid = x.id, oid = out.id] {
      Tensor<T> gx(val(xid).dims());
      core::relu_backward(static_cast<std::size_t>(gx.numel()), val(xid).data(),
                          grad_of(oid).data(), gx.data());
      add_into(grad_of(xid), gx);
    };
  }
  return out;
}

template <typename T>
Var Tape<T>::leaky_relu(Var x, T slope) {
  const Tensor<T>& xv = value(x);
  Node n;
  n.value = Tensor<T>(xv.dims());
  core::leaky_relu_forward(static_cast<std::size_t>(xv.numel()), slope, xv.data(), n.value.data());
  n.needs_grad = wants(x.id);
  Var out = push(std::move(n));
  if (nodes_.back().needs_grad) {
    nodes_.back().back = [this, slope, xid = x.id, oid = out.id] {
      Tensor<T> gx(val(xid).dims());
      core::leaky_relu_backward(static_cast<std::size_t>(gx.numel()), slope, val(xid).data(),
                                grad_of(oid).data(), gx.data());
      add_into(grad_of(xid), gx);
    };
  }
  return out;
}

template <typename T>
Var Tape<T>::tanh_sat(Var x) {
  const Tensor<T>& xv = value(x);
  Node n;
  n.value = Tensor<T>(xv.dims());
  core::tanh_forward(static_cast<std::size_t>(xv.numel()), xv.data(), n.value.data());
  n.needs_grad = wants(x.id);
  Var out = push(std::move(n));
  if (nodes_.back().needs_grad) {
    nodes_.back().back = [this, xid = x.id, oid = out.id] {
      Tensor<T> gx(val(xid).dims());
      core::tanh_backward(static_cast<std::size_t>(gx.numel()), val(oid).data(),
                          grad_of(oid).data(), gx.data());
      add_into(grad_of(xid), gx);
    };
  }
  return out;
}

template <typename T>
Var Tape<T>::avg_pool(Var x, int k) {
  const Tensor<T>& xv = value(x);
  if (xv.rank() != 3 || k <= 0 || xv.dim(1) % k != 0 || xv.dim(2) % k != 0)
    throw ShapeError("avg_pool: spatial dims " + xv.shape_str() + " not divisible by " +
                     std::to_string(k));
  const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
  Node n;
  n.value = Tensor<T>({c, h / k, w / k});
  core::avg_pool_forward(c, h, w, k, xv.data(), n.value.data());
  n.needs_grad = wants(x.id);
  Var out = push(std::move(n));
  if (nodes_.back().needs_grad) {
    nodes_.back().back = [this, c, h, w, k, xid = x.id, oid = out.id] {
      Tensor<T> gx(val(xid).dims());
      core::avg_pool_backward(c, h, w, k, grad_of(oid).data(), gx.data());
      add_into(grad_of(xid), gx);
    };
  }
  return out;
}

template <typename T>
Var Tape<T>::max_pool2(Var x) {
  const Tensor<T>& xv = value(x);
  if (xv.rank() != 3 || xv.dim(1) % 2 != 0 || xv.dim(2) % 2 != 0)
    throw ShapeError("max_pool2: spatial dims must be even, got " + xv.shape_str());
  const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
  Node n;
  n.value = Tensor<T>({c, h / 2, w / 2});
  std::vector<std::uint8_t> argmax(static_cast<std::size_t>(n.value.numel()));
  core::max_pool2_forward(c, h, w, xv.data(), n.value.data(), argmax.data());
  n.needs_grad = wants(x.id);
  Var out = push(std::move(n));
  if (nodes_.back().needs_grad) {
    nodes_.back().back = [this, c, h, w, xid = x.id, oid = out.id,
                          argmax = std::move(argmax)] {
      Tensor<T> gx(val(xid).dims());
      core::max_pool2_backward(c, h, w, argmax.data(), grad_of(oid).data(), gx.data());
      add_into(grad_of(xid), gx);
    };
  }
  return out;
}

template <typename T>
Var Tape<T>::upsample_nearest(Var x, int f) {
  const Tensor<T>& xv = value(x);
  if (xv.rank() != 3 || f <= 0) throw ShapeError("upsample_nearest: bad input");
  const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
  Node n;
  n.value = Tensor<T>({c, h * f, w * f});
  core::upsample_nearest_forward(c, h, w, f, xv.data(), n.value.data());
  n.needs_grad = wants(x.id);
  Var out = push(std::move(n));
  if (nodes_.back().needs_grad) {
    nodes_.back().back = [this, c, h, w, f, xid = x.id, oid = out.id] {
      Tensor<T> gx(val(xid).dims());
      core::upsample_nearest_backward(c, h, w, f, grad_of(oid).data(), gx.data());
      add_into(grad_of(xid), gx);
    };
  }
  return out;
}

template <typename T>
Var Tape<T>::upsample_bilinear(Var x, int f) {
  const Tensor<T>& xv = value(x);
  if (xv.rank() != 3 || f <= 0) throw ShapeError("upsample_bilinear: bad input");
  const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
  Node n;
  n.value = Tensor<T>({c, h * f, w * f});
  core::upsample_bilinear_forward(c, h, w, f, xv.data(), n.value.data());
  n.needs_grad = wants(x.id);
  Var out = push(std::move(n));
  if (nodes_.back().needs_grad) {
    nodes_.back().back = [this, c, h, w, f, xid = x.id, oid = out.id] {
      Tensor<T> gx(val(xid).dims());
      core::upsample_bilinear_backward(c, h, w, f, grad_of(oid).data(), gx.data());
      add_into(grad_of(xid), gx);
    };
  }
  return out;
}

template <typename T>
Var Tape<T>::concat(const std::vector<Var>& xs) {
  if (xs.empty()) throw ShapeError("concat: no inputs");
  const Tensor<T>& first = value(xs[0]);
  if (first.rank() != 3) throw ShapeError("concat: inputs must be rank 3");
  int total_c = 0;
  bool any_grad = false;
  for (Var v : xs) {
    const Tensor<T>& t = value(v);
    if (t.rank() != 3 || t.dim(1) != first.dim(1) || t.dim(2) != first.dim(2))
      throw ShapeError("concat: spatial mismatch " + t.shape_str() + " vs " + first.shape_str());
    total_c += t.dim(0);
    any_grad = any_grad || wants(v.id);
  }
  Node n;
  n.value = Tensor<T>({total_c, first.dim(1), first.dim(2)});
  std::int64_t off = 0;
  for (Var v : xs) {
    const Tensor<T>& t = value(v);
    std::memcpy(n.value.data() + off, t.data(), sizeof(T) * static_cast<std::size_t>(t.numel()));
    off += t.numel();
  }
  n.needs_grad = any_grad;
  Var out = push(std::move(n));
  if (any_grad) {
    std::vector<int> ids(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) ids[i] = xs[i].id;
    nodes_.back().back = [this, ids = std::move(ids), oid = out.id] {
      const Tensor<T>& g = grad_of(oid);
      std::int64_t off2 = 0;
      for (int id : ids) {
        const std::int64_t n2 = val(id).numel();
        if (wants(id)) add_into_range(grad_of(id), 0, g, off2, n2);
        off2 += n2;
      }
    };
  }
  return out;
}

template <typename T>
Var Tape<T>::add(Var a, Var b) {
  const Tensor<T>& av = value(a);
  const Tensor<T>& bv = value(b);
  check_same_shape(av, bv, "add");
  Node n;
  n.value = Tensor<T>(av.dims());
  core::add_forward(static_cast<std::size_t>(av.numel()), av.data(), bv.data(), n.value.data());
  n.needs_grad = wants(a.id) || wants(b.id);
  Var out = push(std::move(n));
  if (nodes_.back().needs_grad) {
    nodes_.back().back = [this, aid = a.id, bid = b.id, oid = out.id] {
      const Tensor<T>& g = grad_of(oid);
      if (wants(aid)) add_into(grad_of(aid), g);
      if (wants(bid)) add_into(grad_of(bid), g);
    };
  }
  return out;
}

template <typename T>
Var Tape<T>::channel_scale_shift(Var x, std::vector<T> scale, std::vector<T> shift) {
  const Tensor<T>& xv = value(x);
  if (xv.rank() != 3 || scale.size() != static_cast<std::size_t>(xv.dim(0)) ||
      shift.size() != scale.size())
    throw ShapeError("channel_scale_shift: one scale and shift per channel required");
  const int c = xv.dim(0);
  const std::int64_t plane = xv.numel() / c;
  Node n;
  n.value = Tensor<T>(xv.dims());
  for (int ci = 0; ci < c; ++ci) {
    const T* src = xv.data() + ci * plane;
    T* dst = n.value.data() + ci * plane;
    for (std::int64_t i = 0; i < plane; ++i) dst[i] = src[i] * scale[ci] + shift[ci];
  }
  n.needs_grad = wants(x.id);
  Var out = push(std::move(n));
  if (nodes_.back().needs_grad) {
    nodes_.back().back = [this, c, plane, xid = x.id, oid = out.id, scale = std::move(scale)] {
      const Tensor<T>& g = grad_of(oid);
      Tensor<T>& gx = grad_of(xid);
      for (int ci = 0; ci < c; ++ci)
        for (std::int64_t i = 0; i < plane; ++i)
          gx[ci * plane + i] += g[ci * plane + i] * scale[static_cast<std::size_t>(ci)];
    };
  }
  return out;
}

template <typename T>
Var Tape<T>::mse(Var a, Var b) {
  const Tensor<T>& av = value(a);
  const Tensor<T>& bv = value(b);
  check_same_shape(av, bv, "mse");
  const std::int64_t n = av.numel();
  double acc = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(av[i]) - static_cast<double>(bv[i]);
    acc += d * d;
  }
  Node nd;
  nd.value = Tensor<T>({1});
  nd.value[0] = static_cast<T>(acc / static_cast<double>(n));
  nd.needs_grad = wants(a.id) || wants(b.id);
  Var out = push(std::move(nd));
  if (nodes_.back().needs_grad) {
    nodes_.back().back = [this, n, aid = a.id, bid = b.id, oid = out.id] {
      const T coef = static_cast<T>(2.0 * static_cast<double>(grad_of(oid)[0]) / n);
      const Tensor<T>& av2 = val(aid);
      const Tensor<T>& bv2 = val(bid);
      if (wants(aid)) {
        Tensor<T>& ga = grad_of(aid);
        for (std::int64_t i = 0; i < n; ++i) ga[i] += coef * (av2[i] - bv2[i]);
      }
      if (wants(bid)) {
        Tensor<T>& gb = grad_of(bid);
        for (std::int64_t i = 0; i < n; ++i) gb[i] -= coef * (av2[i] - bv2[i]);
      }
    };
  }
  return out;
}

template <typename T>
Var Tape<T>::mae(Var a, Var b) {
  const Tensor<T>& av = value(a);
  const Tensor<T>& bv = value(b);
  check_same_shape(av, bv, "mae");
  const std::int64_t n = av.numel();
  double acc = 0.0;
  for (std::int64_t i = 0; i < n; ++i)
    acc += std::abs(static_cast<double>(av[i]) - static_cast<double>(bv[i]));
  Node nd;
  nd.value = Tensor<T>({1});
  nd.value[0] = static_cast<T>(acc / static_cast<double>(n));
  nd.needs_grad = wants(a.id) || wants(b.id);
  Var out = push(std::move(nd));
  if (nodes_.back().needs_grad) {
    nodes_.back().back = [this, n, aid = a.id, bid = b.id, oid = out.id] {
      const T coef = static_cast<T>(static_cast<double>(grad_of(oid)[0]) / n);
      const Tensor<T>& av2 = val(aid);
      const Tensor<T>& bv2 = val(bid);
      for (std::int64_t i = 0; i < n; ++i) {
        const T s = av2[i] > bv2[i] ? coef : (av2[i] < bv2[i] ? -coef : T(0));
        if (wants(aid)) grad_of(aid)[i] += s;
        if (wants(bid)) grad_of(bid)[i] -= s;
      }
    };
  }
  return out;
}

template <typename T>
Var Tape<T>::mean_sq_diff(Var a, T target) {
  const Tensor<T>& av = value(a);
  const std::int64_t n = av.numel();
  if (n == 0) throw NumericError("mean_sq_diff: empty reduction");
  double acc = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(av[i]) - static_cast<double>(target);
    acc += d * d;
  }
  Node nd;
  nd.value = Tensor<T>({1});
  nd.value[0] = static_cast<T>(acc / static_cast<double>(n));
  nd.needs_grad = wants(a.id);
  Var out = push(std::move(nd));
  if (nodes_.back().needs_grad) {
    nodes_.back().back = [this, n, target, aid = a.id, oid = out.id] {
      const T coef = static_cast<T>(2.0 * static_cast<double>(grad_of(oid)[0]) / n);
      const Tensor<T>& av2 = val(aid);
      Tensor<T>& ga = grad_of(aid);
      for (std::int64_t i = 0; i < n; ++i) ga[i] += coef * (av2[i] - target);
    };
  }
  return out;
}

template <typename T>
Var Tape<T>::weighted_sum(const std::vector<Var>& scalars, const std::vector<T>& weights) {
  if (scalars.size() != weights.size() || scalars.empty())
    throw ShapeError("weighted_sum: need matching, non-empty terms and weights");
  double acc = 0.0;
  bool any_grad = false;
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    const Tensor<T>& t = value(scalars[i]);
    if (t.numel() != 1) throw ShapeError("weighted_sum: all terms must be scalar");
    acc += static_cast<double>(weights[i]) * static_cast<double>(t[0]);
    any_grad = any_grad || wants(scalars[i].id);
  }
  Node nd;
  nd.value = Tensor<T>({1});
  nd.value[0] = static_cast<T>(acc);
  nd.needs_grad = any_grad;
  Var out = push(std::move(nd));
  if (any_grad) {
    std::vector<int> ids(scalars.size());
    for (std::size_t i = 0; i < scalars.size(); ++i) ids[i] = scalars[i].id;
    nodes_.back().back = [this, ids = std::move(ids), ws = weights, oid = out.id] {
      const T g = grad_of(oid)[0];
      for (std::size_t i = 0; i < ids.size(); ++i)
        if (wants(ids[i])) grad_of(ids[i])[0] += ws[i] * g;
    };
  }
  return out;
}

template <typename T>
void Tape<T>::backward(Var scalar_loss) {
  const Node& loss = node(scalar_loss);
  if (ran_backward_) throw Error("tape: backward() may only run once");
  if (val(scalar_loss.id).numel() != 1)
    throw ShapeError("tape: backward() requires a scalar loss");
  if (!loss.needs_grad) throw Error("tape: loss does not depend on any parameter");
  ran_backward_ = true;

  for (int id = 0; id <= scalar_loss.id; ++id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.needs_grad) n.grad = Tensor<T>(val(id).dims());
  }
  grad_of(scalar_loss.id)[0] = T(1);
  for (int id = scalar_loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.needs_grad && n.back) n.back();
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace derain::nn

#pragma once

#include <cstddef>
#include <cstdint>

namespace derain::core {

// Geometry of a 2-D convolution with symmetric zero padding.
struct Conv2dShape {
  int in_c = 0, in_h = 0, in_w = 0;
  int out_c = 0, k_h = 0, k_w = 0;
  int stride = 1, pad = 0;

  int out_h() const { return (in_h + 2 * pad - k_h) / stride + 1; }
  int out_w() const { return (in_w + 2 * pad - k_w) / stride + 1; }
  bool valid() const {
    return in_c > 0 && in_h > 0 && in_w > 0 && out_c > 0 && k_h > 0 && k_w > 0 && stride > 0 &&
           pad >= 0 && in_h + 2 * pad >= k_h && in_w + 2 * pad >= k_w;
  }
};

// Production kernels. Parallelised with OpenMP over independent output
// elements; per-element accumulation order matches the serial reference in
// core::ref bit for bit.
//
// x: (in_c, in_h, in_w)   w: (out_c, in_c, k_h, k_w)   b: (out_c)
template <typename T>
void conv2d_forward(const Conv2dShape& s, const T* x, const T* w, const T* b, T* y);
template <typename T>
void conv2d_backward_input(const Conv2dShape& s, const T* gy, const T* w, T* gx);
template <typename T>
void conv2d_backward_filter(const Conv2dShape& s, const T* gy, const T* x, T* gw, T* gb);

// Per-channel normalisation over the spatial extent of a single sample.
// mean/invstd have length c and are stored in double for the backward pass.
template <typename T>
void instance_norm_forward(int c, int h, int w, const T* x, const T* gain, const T* bias, T eps,
                           T* y, double* mean, double* invstd);
template <typename T>
void instance_norm_backward(int c, int h, int w, const T* x, const T* gain, const double* mean,
                            const double* invstd, const T* gy, T* gx, T* ggain, T* gbias);

template <typename T>
void relu_forward(std::size_t n, const T* x, T* y);
template <typename T>
void relu_backward(std::size_t n, const T* x, const T* gy, T* gx);
template <typename T>
void leaky_relu_forward(std::size_t n, T slope, const T* x, T* y);
template <typename T>
void leaky_relu_backward(std::size_t n, T slope, const T* x, const T* gy, T* gx);
template <typename T>
void tanh_forward(std::size_t n, const T* x, T* y);
// Uses the forward output y rather than x.
template <typename T>
void tanh_backward(std::size_t n, const T* y, const T* gy, T* gx);

// Average pooling with kernel == stride == k; h and w must be divisible by k.
template <typename T>
void avg_pool_forward(int c, int h, int w, int k, const T* x, T* y);
template <typename T>
void avg_pool_backward(int c, int h, int w, int k, const T* gy, T* gx);

// 2x2 max pooling, stride 2; h and w must be even. argmax stores, per output
// cell, the winning position in scan order 0..3 (first maximum wins ties).
template <typename T>
void max_pool2_forward(int c, int h, int w, const T* x, T* y, std::uint8_t* argmax);
template <typename T>
void max_pool2_backward(int c, int h, int w, const std::uint8_t* argmax, const T* gy, T* gx);

template <typename T>
void upsample_nearest_forward(int c, int h, int w, int f, const T* x, T* y);
template <typename T>
void upsample_nearest_backward(int c, int h, int w, int f, const T* gy, T* gx);

// Bilinear upsampling by an integer factor, half-pixel centres, edges clamped.
template <typename T>
void upsample_bilinear_forward(int c, int h, int w, int f, const T* x, T* y);
template <typename T>
void upsample_bilinear_backward(int c, int h, int w, int f, const T* gy, T* gx);

// Reflection padding without edge repetition; requires pad < dim on each axis.
template <typename T>
void reflect_pad_forward(int c, int h, int w, int top, int bottom, int left, int right, const T* x,
                         T* y);

template <typename T>
void add_forward(std::size_t n, const T* a, const T* b, T* y);

// Serial reference implementations, kept for kernel tests and the
// serial-vs-OpenMP benchmark. Same contracts as above.
namespace ref {

template <typename T>
void conv2d_forward(const Conv2dShape& s, const T* x, const T* w, const T* b, T* y);
template <typename T>
void conv2d_backward_input(const Conv2dShape& s, const T* gy, const T* w, T* gx);
template <typename T>
void conv2d_backward_filter(const Conv2dShape& s, const T* gy, const T* x, T* gw, T* gb);
template <typename T>
void instance_norm_forward(int c, int h, int w, const T* x, const T* gain, const T* bias, T eps,
                           T* y, double* mean, double* invstd);
template <typename T>
void instance_norm_backward(int c, int h, int w, const T* x, const T* gain, const double* mean,
                            const double* invstd, const T* gy, T* gx, T* ggain, T* gbias);
template <typename T>
void avg_pool_forward(int c, int h, int w, int k, const T* x, T* y);
template <typename T>
void avg_pool_backward(int c, int h, int w, int k, const T* gy, T* gx);
template <typename T>
void max_pool2_forward(int c, int h, int w, const T* x, T* y, std::uint8_t* argmax);
template <typename T>
void max_pool2_backward(int c, int h, int w, const std::uint8_t* argmax, const T* gy, T* gx);
template <typename T>
void upsample_nearest_forward(int c, int h, int w, int f, const T* x, T* y);
template <typename T>
void upsample_nearest_backward(int c, int h, int w, int f, const T* gy, T* gx);
template <typename T>
void upsample_bilinear_forward(int c, int h, int w, int f, const T* x, T* y);
template <typename T>
void upsample_bilinear_backward(int c, int h, int w, int f, const T* gy, T* gx);

}  // namespace ref

}  // namespace derain::core

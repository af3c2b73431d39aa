#include "derain/core/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <utility>
#include <vector>

#include "derain/core/parallel.hpp"
#include "interp_detail.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace derain::core {

namespace {
int g_threads = 0;  // 0 = OpenMP default

// Valid output-x range [lo, hi] for a given kernel column, so that
// ix = ox*stride + kx - pad stays inside [0, in_w).
inline std::pair<int, int> ox_range(int kx, int stride, int pad, int in_w, int out_w) {
  int lo = 0;
  const int off = kx - pad;
  if (off < 0) lo = (-off + stride - 1) / stride;
  int hi = (in_w - 1 - off) / stride;
  if (hi > out_w - 1) hi = out_w - 1;
  return {lo, hi};
}
}  // namespace

int thread_count() {
#ifdef _OPENMP
  return g_threads > 0 ? g_threads : omp_get_max_threads();
#else
  return 1;
#endif
}

void set_thread_count(int n) {
  g_threads = n;
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#endif
}

// Row-accumulator convolution: each (oc, oy) output row is produced by a
// single thread, accumulating contributions in (ic, ky, kx) order exactly
// like the reference, so results are bit-identical at any thread count.
template <typename T>
void conv2d_forward(const Conv2dShape& s, const T* x, const T* w, const T* b, T* y) {
  const int oh = s.out_h(), ow = s.out_w();
#pragma omp parallel for collapse(2) schedule(static)
  for (int oc = 0; oc < s.out_c; ++oc) {
    for (int oy = 0; oy < oh; ++oy) {
      T* yrow = y + (static_cast<std::size_t>(oc) * oh + oy) * ow;
      const T bias = b ? b[oc] : T(0);
      for (int ox = 0; ox < ow; ++ox) yrow[ox] = bias;
      for (int ic = 0; ic < s.in_c; ++ic) {
        for (int ky = 0; ky < s.k_h; ++ky) {
          const int iy = oy * s.stride + ky - s.pad;
          if (iy < 0 || iy >= s.in_h) continue;
          const T* xrow = x + (static_cast<std::size_t>(ic) * s.in_h + iy) * s.in_w;
          const T* wrow =
              w + ((static_cast<std::size_t>(oc) * s.in_c + ic) * s.k_h + ky) * s.k_w;
          for (int kx = 0; kx < s.k_w; ++kx) {
            const T wv = wrow[kx];
            const auto [lo, hi] = ox_range(kx, s.stride, s.pad, s.in_w, ow);
            const int off = kx - s.pad;
            if (s.stride == 1) {
              const T* xs = xrow + off;
              for (int ox = lo; ox <= hi; ++ox) yrow[ox] += wv * xs[ox];
            } else {
              for (int ox = lo; ox <= hi; ++ox) yrow[ox] += wv * xrow[ox * s.stride + off];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_input(const Conv2dShape& s, const T* gy, const T* w, T* gx) {
  const int oh = s.out_h(), ow = s.out_w();
#pragma omp parallel for collapse(2) schedule(static)
  for (int ic = 0; ic < s.in_c; ++ic) {
    for (int iy = 0; iy < s.in_h; ++iy) {
      T* gxrow = gx + (static_cast<std::size_t>(ic) * s.in_h + iy) * s.in_w;
      std::memset(gxrow, 0, sizeof(T) * static_cast<std::size_t>(s.in_w));
      for (int oc = 0; oc < s.out_c; ++oc) {
        for (int ky = 0; ky < s.k_h; ++ky) {
          const int t = iy + s.pad - ky;
          if (t < 0 || t % s.stride != 0) continue;
          const int oy = t / s.stride;
          if (oy >= oh) continue;
          const T* grow = gy + (static_cast<std::size_t>(oc) * oh + oy) * ow;
          const T* wrow =
              w + ((static_cast<std::size_t>(oc) * s.in_c + ic) * s.k_h + ky) * s.k_w;
          for (int kx = 0; kx < s.k_w; ++kx) {
            const T wv = wrow[kx];
            const auto [lo, hi] = ox_range(kx, s.stride, s.pad, s.in_w, ow);
            const int off = kx - s.pad;
            if (s.stride == 1) {
              T* gxs = gxrow + off;
              for (int ox = lo; ox <= hi; ++ox) gxs[ox] += wv * grow[ox];
            } else {
              for (int ox = lo; ox <= hi; ++ox) gxrow[ox * s.stride + off] += wv * grow[ox];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_filter(const Conv2dShape& s, const T* gy, const T* x, T* gw, T* gb) {
  const int oh = s.out_h(), ow = s.out_w();
#pragma omp parallel for collapse(2) schedule(static)
  for (int oc = 0; oc < s.out_c; ++oc) {
    for (int ic = 0; ic < s.in_c; ++ic) {
      for (int ky = 0; ky < s.k_h; ++ky) {
        for (int kx = 0; kx < s.k_w; ++kx) {
          T acc = T(0);
          const auto [lo, hi] = ox_range(kx, s.stride, s.pad, s.in_w, ow);
          const int off = kx - s.pad;
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * s.stride + ky - s.pad;
            if (iy < 0 || iy >= s.in_h) continue;
            const T* grow = gy + (static_cast<std::size_t>(oc) * oh + oy) * ow;
            const T* xrow = x + (static_cast<std::size_t>(ic) * s.in_h + iy) * s.in_w;
            if (s.stride == 1) {
              const T* xs = xrow + off;
              for (int ox = lo; ox <= hi; ++ox) acc += grow[ox] * xs[ox];
            } else {
              for (int ox = lo; ox <= hi; ++ox) acc += grow[ox] * xrow[ox * s.stride + off];
            }
          }
          gw[((static_cast<std::size_t>(oc) * s.in_c + ic) * s.k_h + ky) * s.k_w + kx] = acc;
        }
      }
    }
  }
  if (gb) {
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < s.out_c; ++oc) {
      T acc = T(0);
      const T* g = gy + static_cast<std::size_t>(oc) * oh * ow;
      for (int i = 0; i < oh * ow; ++i) acc += g[i];
      gb[oc] = acc;
    }
  }
}

template <typename T>
void instance_norm_forward(int c, int h, int w, const T* x, const T* gain, const T* bias, T eps,
                           T* y, double* mean, double* invstd) {
  const int n = h * w;
#pragma omp parallel for schedule(static)
  for (int ci = 0; ci < c; ++ci) {
    const T* xc = x + static_cast<std::size_t>(ci) * n;
    T* yc = y + static_cast<std::size_t>(ci) * n;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += static_cast<double>(xc[i]);
    const double mu = sum / n;
    double var = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = static_cast<double>(xc[i]) - mu;
      var += d * d;
    }
    var /= n;
    const double inv = 1.0 / std::sqrt(var + static_cast<double>(eps));
    mean[ci] = mu;
    invstd[ci] = inv;
    const T g = gain[ci], b = bias[ci];
    for (int i = 0; i < n; ++i)
      yc[i] = g * static_cast<T>((static_cast<double>(xc[i]) - mu) * inv) + b;
  }
}

template <typename T>
void instance_norm_backward(int c, int h, int w, const T* x, const T* gain, const double* mean,
                            const double* invstd, const T* gy, T* gx, T* ggain, T* gbias) {
  const int n = h * w;
#pragma omp parallel for schedule(static)
  for (int ci = 0; ci < c; ++ci) {
    const T* xc = x + static_cast<std::size_t>(ci) * n;
    const T* gc = gy + static_cast<std::size_t>(ci) * n;
    T* gxc = gx + static_cast<std::size_t>(ci) * n;
    const double mu = mean[ci], inv = invstd[ci];
    const double g = static_cast<double>(gain[ci]);
    double sum_gy = 0.0, sum_gy_xhat = 0.0;
    for (int i = 0; i < n; ++i) {
      const double xhat = (static_cast<double>(xc[i]) - mu) * inv;
      const double gyv = static_cast<double>(gc[i]);
      sum_gy += gyv;
      sum_gy_xhat += gyv * xhat;
    }
    ggain[ci] = static_cast<T>(sum_gy_xhat);
    gbias[ci] = static_cast<T>(sum_gy);
    const double m1 = g * sum_gy / n;          // mean of d xhat
    const double m2 = g * sum_gy_xhat / n;     // mean of d xhat * xhat
    for (int i = 0; i < n; ++i) {
      const double xhat = (static_cast<double>(xc[i]) - mu) * inv;
      const double dxhat = g * static_cast<double>(gc[i]);
      gxc[i] = static_cast<T>((dxhat - m1 - xhat * m2) * inv);
    }
  }
}

template <typename T>
void relu_forward(std::size_t n, const T* x, T* y) {
  const std::int64_t sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < sn; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_backward(std::size_t n, const T* x, const T* gy, T* gx) {
  const std::int64_t sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < sn; ++i) gx[i] = x[i] > T(0) ? gy[i] : T(0);
}

template <typename T>
void leaky_relu_forward(std::size_t n, T slope, const T* x, T* y) {
  const std::int64_t sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < sn; ++i) y[i] = x[i] > T(0) ? x[i] : slope * x[i];
}

template <typename T>
void leaky_relu_backward(std::size_t n, T slope, const T* x, const T* gy, T* gx) {
  const std::int64_t sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < sn; ++i) gx[i] = x[i] > T(0) ? gy[i] : slope * gy[i];
}

template <typename T>
void tanh_forward(std::size_t n, const T* x, T* y) {
  const std::int64_t sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < sn; ++i) y[i] = std::tanh(x[i]);
}

template <typename T>
void tanh_backward(std::size_t n, const T* y, const T* gy, T* gx) {
  const std::int64_t sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < sn; ++i) gx[i] = (T(1) - y[i] * y[i]) * gy[i];
}

template <typename T>
void avg_pool_forward(int c, int h, int w, int k, const T* x, T* y) {
  const int oh = h / k, ow = w / k;
  const T inv = T(1) / static_cast<T>(k * k);
#pragma omp parallel for collapse(2) schedule(static)
  for (int ci = 0; ci < c; ++ci) {
    for (int oy = 0; oy < oh; ++oy) {
      const T* xc = x + static_cast<std::size_t>(ci) * h * w;
      T* yrow = y + (static_cast<std::size_t>(ci) * oh + oy) * ow;
      for (int ox = 0; ox < ow; ++ox) {
        T acc = T(0);
        for (int ky = 0; ky < k; ++ky) {
          const T* xrow = xc + static_cast<std::size_t>(oy * k + ky) * w + ox * k;
          for (int kx = 0; kx < k; ++kx) acc += xrow[kx];
        }
        yrow[ox] = acc * inv;
      }
    }
  }
}

template <typename T>
void avg_pool_backward(int c, int h, int w, int k, const T* gy, T* gx) {
  const int oh = h / k, ow = w / k;
  const T inv = T(1) / static_cast<T>(k * k);
#pragma omp parallel for collapse(2) schedule(static)
  for (int ci = 0; ci < c; ++ci) {
    for (int iy = 0; iy < h; ++iy) {
      T* gxrow = gx + (static_cast<std::size_t>(ci) * h + iy) * w;
      const T* grow = gy + (static_cast<std::size_t>(ci) * oh + iy / k) * ow;
      for (int ix = 0; ix < w; ++ix) gxrow[ix] = grow[ix / k] * inv;
    }
  }
}

template <typename T>
void max_pool2_forward(int c, int h, int w, const T* x, T* y, std::uint8_t* argmax) {
  const int oh = h / 2, ow = w / 2;
#pragma omp parallel for collapse(2) schedule(static)
  for (int ci = 0; ci < c; ++ci) {
    for (int oy = 0; oy < oh; ++oy) {
      const T* xc = x + static_cast<std::size_t>(ci) * h * w;
      const std::size_t orow = (static_cast<std::size_t>(ci) * oh + oy) * ow;
      for (int ox = 0; ox < ow; ++ox) {
        const T* p0 = xc + static_cast<std::size_t>(2 * oy) * w + 2 * ox;
        const T* p1 = p0 + w;
        T best = p0[0];
        std::uint8_t bi = 0;
        if (p0[1] > best) { best = p0[1]; bi = 1; }
        if (p1[0] > best) { best = p1[0]; bi = 2; }
        if (p1[1] > best) { best = p1[1]; bi = 3; }
        y[orow + ox] = best;
        argmax[orow + ox] = bi;
      }
    }
  }
}

template <typename T>
void max_pool2_backward(int c, int h, int w, const std::uint8_t* argmax, const T* gy, T* gx) {
  const int oh = h / 2, ow = w / 2;
#pragma omp parallel for collapse(2) schedule(static)
  for (int ci = 0; ci < c; ++ci) {
    for (int oy = 0; oy < oh; ++oy) {
      T* gxc = gx + static_cast<std::size_t>(ci) * h * w;
      const std::size_t orow = (static_cast<std::size_t>(ci) * oh + oy) * ow;
      for (int ox = 0; ox < ow; ++ox) {
        T* q0 = gxc + static_cast<std::size_t>(2 * oy) * w + 2 * ox;
        T* q1 = q0 + w;
        q0[0] = q0[1] = q1[0] = q1[1] = T(0);
        const std::uint8_t bi = argmax[orow + ox];
        const T g = gy[orow + ox];
        (bi == 0 ? q0[0] : bi == 1 ? q0[1] : bi == 2 ? q1[0] : q1[1]) = g;
      }
    }
  }
}

template <typename T>
void upsample_nearest_forward(int c, int h, int w, int f, const T* x, T* y) {
  const int oh = h * f, ow = w * f;
#pragma omp parallel for collapse(2) schedule(static)
  for (int ci = 0; ci < c; ++ci) {
    for (int oy = 0; oy < oh; ++oy) {
      const T* xrow = x + (static_cast<std::size_t>(ci) * h + oy / f) * w;
      T* yrow = y + (static_cast<std::size_t>(ci) * oh + oy) * ow;
      for (int ox = 0; ox < ow; ++ox) yrow[ox] = xrow[ox / f];
    }
  }
}

template <typename T>
void upsample_nearest_backward(int c, int h, int w, int f, const T* gy, T* gx) {
  const int ow = w * f;
#pragma omp parallel for collapse(2) schedule(static)
  for (int ci = 0; ci < c; ++ci) {
    for (int iy = 0; iy < h; ++iy) {
      T* gxrow = gx + (static_cast<std::size_t>(ci) * h + iy) * w;
      for (int ix = 0; ix < w; ++ix) {
        T acc = T(0);
        for (int fy = 0; fy < f; ++fy) {
          const T* grow = gy + (static_cast<std::size_t>(ci) * h * f + iy * f + fy) * ow + ix * f;
          for (int fx = 0; fx < f; ++fx) acc += grow[fx];
        }
        gxrow[ix] = acc;
      }
    }
  }
}

template <typename T>
void upsample_bilinear_forward(int c, int h, int w, int f, const T* x, T* y) {
  const int oh = h * f, ow = w * f;
  std::vector<detail::AxisCoeff> ys(oh), xs(ow);
  for (int oy = 0; oy < oh; ++oy) ys[oy] = detail::bilinear_axis(oy, f, h);
  for (int ox = 0; ox < ow; ++ox) xs[ox] = detail::bilinear_axis(ox, f, w);
#pragma omp parallel for collapse(2) schedule(static)
  for (int ci = 0; ci < c; ++ci) {
    for (int oy = 0; oy < oh; ++oy) {
      const T* xc = x + static_cast<std::size_t>(ci) * h * w;
      T* yrow = y + (static_cast<std::size_t>(ci) * oh + oy) * ow;
      const auto& ay = ys[oy];
      const T* r0 = xc + static_cast<std::size_t>(ay.i0) * w;
      const T* r1 = xc + static_cast<std::size_t>(ay.i1) * w;
      for (int ox = 0; ox < ow; ++ox) {
        const auto& ax = xs[ox];
        const double v = ay.w0 * (ax.w0 * static_cast<double>(r0[ax.i0]) +
                                  ax.w1 * static_cast<double>(r0[ax.i1])) +
                         ay.w1 * (ax.w0 * static_cast<double>(r1[ax.i0]) +
                                  ax.w1 * static_cast<double>(r1[ax.i1]));
        yrow[ox] = static_cast<T>(v);
      }
    }
  }
}

template <typename T>
void upsample_bilinear_backward(int c, int h, int w, int f, const T* gy, T* gx) {
  const int oh = h * f, ow = w * f;
  // Per input index, the (output index, weight) pairs that reference it,
  // ordered by output index with the low neighbour's entry first.
  std::vector<std::vector<std::pair<int, double>>> yc(h), xc(w);
  for (int oy = 0; oy < oh; ++oy) {
    const auto a = detail::bilinear_axis(oy, f, h);
    yc[a.i0].emplace_back(oy, a.w0);
    yc[a.i1].emplace_back(oy, a.w1);
  }
  for (int ox = 0; ox < ow; ++ox) {
    const auto a = detail::bilinear_axis(ox, f, w);
    xc[a.i0].emplace_back(ox, a.w0);
    xc[a.i1].emplace_back(ox, a.w1);
  }
#pragma omp parallel for collapse(2) schedule(static)
  for (int ci = 0; ci < c; ++ci) {
    for (int iy = 0; iy < h; ++iy) {
      const T* gc = gy + static_cast<std::size_t>(ci) * oh * ow;
      T* gxrow = gx + (static_cast<std::size_t>(ci) * h + iy) * w;
      for (int ix = 0; ix < w; ++ix) {
        double acc = 0.0;
        for (const auto& [oy, wy] : yc[iy]) {
          const T* grow = gc + static_cast<std::size_t>(oy) * ow;
          for (const auto& [ox, wx] : xc[ix])
            acc += wy * wx * static_cast<double>(grow[ox]);
        }
        gxrow[ix] = static_cast<T>(acc);
      }
    }
  }
}

template <typename T>
void reflect_pad_forward(int c, int h, int w, int top, int bottom, int left, int right, const T* x,
                         T* y) {
  const int oh = h + top + bottom, ow = w + left + right;
#pragma omp parallel for collapse(2) schedule(static)
  for (int ci = 0; ci < c; ++ci) {
    for (int oy = 0; oy < oh; ++oy) {
      int sy = oy - top;
      if (sy < 0) sy = -sy;
      if (sy >= h) sy = 2 * (h - 1) - sy;
      const T* xrow = x + (static_cast<std::size_t>(ci) * h + sy) * w;
      T* yrow = y + (static_cast<std::size_t>(ci) * oh + oy) * ow;
      for (int ox = 0; ox < ow; ++ox) {
        int sx = ox - left;
        if (sx < 0) sx = -sx;
        if (sx >= w) sx = 2 * (w - 1) - sx;
        yrow[ox] = xrow[sx];
      }
    }
  }
}

template <typename T>
void add_forward(std::size_t n, const T* a, const T* b, T* y) {
  const std::int64_t sn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < sn; ++i) y[i] = a[i] + b[i];
}

#define DERAIN_INSTANTIATE(T)                                                                     \
  template void conv2d_forward<T>(const Conv2dShape&, const T*, const T*, const T*, T*);          \
  template void conv2d_backward_input<T>(const Conv2dShape&, const T*, const T*, T*);             \
  template void conv2d_backward_filter<T>(const Conv2dShape&, const T*, const T*, T*, T*);        \
  template void instance_norm_forward<T>(int, int, int, const T*, const T*, const T*, T, T*,      \
                                         double*, double*);                                       \
  template void instance_norm_backward<T>(int, int, int, const T*, const T*, const double*,       \
                                          const double*, const T*, T*, T*, T*);                   \
  template void relu_forward<T>(std::size_t, const T*, T*);                                       \
  template void relu_backward<T>(std::size_t, const T*, const T*, T*);                            \
  template void leaky_relu_forward<T>(std::size_t, T, const T*, T*);                              \
  template void leaky_relu_backward<T>(std::size_t, T, const T*, const T*, T*);                   \
  template void tanh_forward<T>(std::size_t, const T*, T*);                                       \
  template void tanh_backward<T>(std::size_t, const T*, const T*, T*);                            \
  template void avg_pool_forward<T>(int, int, int, int, const T*, T*);                            \
  template void avg_pool_backward<T>(int, int, int, int, const T*, T*);                           \
  template void max_pool2_forward<T>(int, int, int, const T*, T*, std::uint8_t*);                 \
  template void max_pool2_backward<T>(int, int, int, const std::uint8_t*, const T*, T*);          \
  template void upsample_nearest_forward<T>(int, int, int, int, const T*, T*);                    \
  template void upsample_nearest_backward<T>(int, int, int, int, const T*, T*);                   \
  template void upsample_bilinear_forward<T>(int, int, int, int, const T*, T*);                   \
  template void upsample_bilinear_backward<T>(int, int, int, int, const T*, T*);                  \
  template void reflect_pad_forward<T>(int, int, int, int, int, int, int, const T*, T*);          \
  template void add_forward<T>(std::size_t, const T*, const T*, T*);

DERAIN_INSTANTIATE(float)
DERAIN_INSTANTIATE(double)
#undef DERAIN_INSTANTIATE

}  // namespace derain::core

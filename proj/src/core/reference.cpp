// Naive serial kernels. These are the ground truth the OpenMP kernels are
// tested against; keep them simple and obviously correct.
#include <cmath>
#include <cstring>

#include "derain/core/kernels.hpp"
#include "interp_detail.hpp"

namespace derain::core::ref {

template <typename T>
void conv2d_forward(const Conv2dShape& s, const T* x, const T* w, const T* b, T* y) {
  const int oh = s.out_h(), ow = s.out_w();
  for (int oc = 0; oc < s.out_c; ++oc) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        T acc = b ? b[oc] : T(0);
        for (int ic = 0; ic < s.in_c; ++ic) {
          for (int ky = 0; ky < s.k_h; ++ky) {
            const int iy = oy * s.stride + ky - s.pad;
            if (iy < 0 || iy >= s.in_h) continue;
            for (int kx = 0; kx < s.k_w; ++kx) {
              const int ix = ox * s.stride + kx - s.pad;
              if (ix < 0 || ix >= s.in_w) continue;
              acc += w[((static_cast<std::size_t>(oc) * s.in_c + ic) * s.k_h + ky) * s.k_w + kx] *
                     x[(static_cast<std::size_t>(ic) * s.in_h + iy) * s.in_w + ix];
            }
          }
        }
        y[(static_cast<std::size_t>(oc) * oh + oy) * ow + ox] = acc;
      }
    }
  }
}

template <typename T>
void conv2d_backward_input(const Conv2dShape& s, const T* gy, const T* w, T* gx) {
  const int oh = s.out_h(), ow = s.out_w();
  for (int ic = 0; ic < s.in_c; ++ic) {
    for (int iy = 0; iy < s.in_h; ++iy) {
      for (int ix = 0; ix < s.in_w; ++ix) {
        T acc = T(0);
        for (int oc = 0; oc < s.out_c; ++oc) {
          for (int ky = 0; ky < s.k_h; ++ky) {
            const int ty = iy + s.pad - ky;
            if (ty < 0 || ty % s.stride != 0) continue;
            const int oy = ty / s.stride;
            if (oy >= oh) continue;
            for (int kx = 0; kx < s.k_w; ++kx) {
              const int tx = ix + s.pad - kx;
              if (tx < 0 || tx % s.stride != 0) continue;
              const int ox = tx / s.stride;
              if (ox >= ow) continue;
              acc += w[((static_cast<std::size_t>(oc) * s.in_c + ic) * s.k_h + ky) * s.k_w + kx] *
                     gy[(static_cast<std::size_t>(oc) * oh + oy) * ow + ox];
            }
          }
        }
        gx[(static_cast<std::size_t>(ic) * s.in_h + iy) * s.in_w + ix] = acc;
      }
    }
  }
}

template <typename T>
void conv2d_backward_filter(const Conv2dShape& s, const T* gy, const T* x, T* gw, T* gb) {
  const int oh = s.out_h(), ow = s.out_w();
  for (int oc = 0; oc < s.out_c; ++oc) {
    for (int ic = 0; ic < s.in_c; ++ic) {
      for (int ky = 0; ky < s.k_h; ++ky) {
        for (int kx = 0; kx < s.k_w; ++kx) {
          T acc = T(0);
          for (int oy = 0; oy < oh; ++oy) {
            const int iy = oy * s.stride + ky - s.pad;
            if (iy < 0 || iy >= s.in_h) continue;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * s.stride + kx - s.pad;
              if (ix < 0 || ix >= s.in_w) continue;
              acc += gy[(static_cast<std::size_t>(oc) * oh + oy) * ow + ox] *
                     x[(static_cast<std::size_t>(ic) * s.in_h + iy) * s.in_w + ix];
            }
          }
          gw[((static_cast<std::size_t>(oc) * s.in_c + ic) * s.k_h + ky) * s.k_w + kx] = acc;
        }
      }
    }
  }
  if (gb) {
    for (int oc = 0; oc < s.out_c; ++oc) {
      T acc = T(0);
      for (int i = 0; i < oh * ow; ++i) acc += gy[static_cast<std::size_t>(oc) * oh * ow + i];
      gb[oc] = acc;
    }
  }
}

template <typename T>
void instance_norm_forward(int c, int h, int w, const T* x, const T* gain, const T* bias, T eps,
                           T* y, double* mean, double* invstd) {
  const int n = h * w;
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
    for (int i = 0; i < n; ++i)
      yc[i] = gain[ci] * static_cast<T>((static_cast<double>(xc[i]) - mu) * inv) + bias[ci];
  }
}

template <typename T>
void instance_norm_backward(int c, int h, int w, const T* x, const T* gain, const double* mean,
                            const double* invstd, const T* gy, T* gx, T* ggain, T* gbias) {
  const int n = h * w;
  for (int ci = 0; ci < c; ++ci) {
    const T* xc = x + static_cast<std::size_t>(ci) * n;
    const T* gc = gy + static_cast<std::size_t>(ci) * n;
    T* gxc = gx + static_cast<std::size_t>(ci) * n;
    const double mu = mean[ci], inv = invstd[ci];
    const double g = static_cast<double>(gain[ci]);
    double sum_gy = 0.0, sum_gy_xhat = 0.0;
    for (int i = 0; i < n; ++i) {
      const double xhat = (static_cast<double>(xc[i]) - mu) * inv;
      sum_gy += static_cast<double>(gc[i]);
      sum_gy_xhat += static_cast<double>(gc[i]) * xhat;
    }
    ggain[ci] = static_cast<T>(sum_gy_xhat);
    gbias[ci] = static_cast<T>(sum_gy);
    const double m1 = g * sum_gy / n;
    const double m2 = g * sum_gy_xhat / n;
    for (int i = 0; i < n; ++i) {
      const double xhat = (static_cast<double>(xc[i]) - mu) * inv;
      const double dxhat = g * static_cast<double>(gc[i]);
      gxc[i] = static_cast<T>((dxhat - m1 - xhat * m2) * inv);
    }
  }
}

template <typename T>
void avg_pool_forward(int c, int h, int w, int k, const T* x, T* y) {
  const int oh = h / k, ow = w / k;
  const T inv = T(1) / static_cast<T>(k * k);
  for (int ci = 0; ci < c; ++ci) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        T acc = T(0);
        for (int ky = 0; ky < k; ++ky)
          for (int kx = 0; kx < k; ++kx)
            acc += x[(static_cast<std::size_t>(ci) * h + oy * k + ky) * w + ox * k + kx];
        y[(static_cast<std::size_t>(ci) * oh + oy) * ow + ox] = acc * inv;
      }
    }
  }
}

template <typename T>
void avg_pool_backward(int c, int h, int w, int k, const T* gy, T* gx) {
  const int oh = h / k, ow = w / k;
  const T inv = T(1) / static_cast<T>(k * k);
  for (int ci = 0; ci < c; ++ci)
    for (int iy = 0; iy < h; ++iy)
      for (int ix = 0; ix < w; ++ix)
        gx[(static_cast<std::size_t>(ci) * h + iy) * w + ix] =
            gy[(static_cast<std::size_t>(ci) * oh + iy / k) * ow + ix / k] * inv;
}

template <typename T>
void max_pool2_forward(int c, int h, int w, const T* x, T* y, std::uint8_t* argmax) {
  const int oh = h / 2, ow = w / 2;
  for (int ci = 0; ci < c; ++ci) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        T best{};
        std::uint8_t bi = 0;
        for (std::uint8_t i = 0; i < 4; ++i) {
          const int iy = 2 * oy + i / 2, ix = 2 * ox + i % 2;
          const T v = x[(static_cast<std::size_t>(ci) * h + iy) * w + ix];
          if (i == 0 || v > best) {
            best = v;
            bi = i;
          }
        }
        y[(static_cast<std::size_t>(ci) * oh + oy) * ow + ox] = best;
        argmax[(static_cast<std::size_t>(ci) * oh + oy) * ow + ox] = bi;
      }
    }
  }
}

template <typename T>
void max_pool2_backward(int c, int h, int w, const std::uint8_t* argmax, const T* gy, T* gx) {
  const int oh = h / 2, ow = w / 2;
  std::memset(gx, 0, sizeof(T) * static_cast<std::size_t>(c) * h * w);
  for (int ci = 0; ci < c; ++ci) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const std::uint8_t bi = argmax[(static_cast<std::size_t>(ci) * oh + oy) * ow + ox];
        const int iy = 2 * oy + bi / 2, ix = 2 * ox + bi % 2;
        gx[(static_cast<std::size_t>(ci) * h + iy) * w + ix] =
            gy[(static_cast<std::size_t>(ci) * oh + oy) * ow + ox];
      }
    }
  }
}

template <typename T>
void upsample_nearest_forward(int c, int h, int w, int f, const T* x, T* y) {
  const int oh = h * f, ow = w * f;
  for (int ci = 0; ci < c; ++ci)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox)
        y[(static_cast<std::size_t>(ci) * oh + oy) * ow + ox] =
            x[(static_cast<std::size_t>(ci) * h + oy / f) * w + ox / f];
}

template <typename T>
void upsample_nearest_backward(int c, int h, int w, int f, const T* gy, T* gx) {
  const int ow = w * f;
  for (int ci = 0; ci < c; ++ci) {
    for (int iy = 0; iy < h; ++iy) {
      for (int ix = 0; ix < w; ++ix) {
        T acc = T(0);
        for (int fy = 0; fy < f; ++fy)
          for (int fx = 0; fx < f; ++fx)
            acc += gy[(static_cast<std::size_t>(ci) * h * f + iy * f + fy) * ow + ix * f + fx];
        gx[(static_cast<std::size_t>(ci) * h + iy) * w + ix] = acc;
      }
    }
  }
}

template <typename T>
void upsample_bilinear_forward(int c, int h, int w, int f, const T* x, T* y) {
  const int oh = h * f, ow = w * f;
  for (int ci = 0; ci < c; ++ci) {
    const T* xc = x + static_cast<std::size_t>(ci) * h * w;
    for (int oy = 0; oy < oh; ++oy) {
      const auto ay = detail::bilinear_axis(oy, f, h);
      for (int ox = 0; ox < ow; ++ox) {
        const auto ax = detail::bilinear_axis(ox, f, w);
        const T* r0 = xc + static_cast<std::size_t>(ay.i0) * w;
        const T* r1 = xc + static_cast<std::size_t>(ay.i1) * w;
        const double v = ay.w0 * (ax.w0 * static_cast<double>(r0[ax.i0]) +
                                  ax.w1 * static_cast<double>(r0[ax.i1])) +
                         ay.w1 * (ax.w0 * static_cast<double>(r1[ax.i0]) +
                                  ax.w1 * static_cast<double>(r1[ax.i1]));
        y[(static_cast<std::size_t>(ci) * oh + oy) * ow + ox] = static_cast<T>(v);
      }
    }
  }
}

template <typename T>
void upsample_bilinear_backward(int c, int h, int w, int f, const T* gy, T* gx) {
  const int oh = h * f, ow = w * f;
  for (int ci = 0; ci < c; ++ci) {
    const T* gc = gy + static_cast<std::size_t>(ci) * oh * ow;
    for (int iy = 0; iy < h; ++iy) {
      for (int ix = 0; ix < w; ++ix) {
        double acc = 0.0;
        for (int oy = 0; oy < oh; ++oy) {
          const auto ay = detail::bilinear_axis(oy, f, h);
          for (int pass = 0; pass < 2; ++pass) {
            const int yi = pass == 0 ? ay.i0 : ay.i1;
            const double wy = pass == 0 ? ay.w0 : ay.w1;
            if (yi != iy) continue;
            for (int ox = 0; ox < ow; ++ox) {
              const auto ax = detail::bilinear_axis(ox, f, w);
              if (ax.i0 == ix) acc += wy * ax.w0 * static_cast<double>(gc[oy * ow + ox]);
              if (ax.i1 == ix) acc += wy * ax.w1 * static_cast<double>(gc[oy * ow + ox]);
            }
          }
        }
        gx[(static_cast<std::size_t>(ci) * h + iy) * w + ix] = static_cast<T>(acc);
      }
    }
  }
}

#define DERAIN_INSTANTIATE_REF(T)                                                                 \
  template void conv2d_forward<T>(const Conv2dShape&, const T*, const T*, const T*, T*);          \
  template void conv2d_backward_input<T>(const Conv2dShape&, const T*, const T*, T*);             \
  template void conv2d_backward_filter<T>(const Conv2dShape&, const T*, const T*, T*, T*);        \
  template void instance_norm_forward<T>(int, int, int, const T*, const T*, const T*, T, T*,      \
                                         double*, double*);                                       \
  template void instance_norm_backward<T>(int, int, int, const T*, const T*, const double*,       \
                                          const double*, const T*, T*, T*, T*);                   \
  template void avg_pool_forward<T>(int, int, int, int, const T*, T*);                            \
  template void avg_pool_backward<T>(int, int, int, int, const T*, T*);                           \
  template void max_pool2_forward<T>(int, int, int, const T*, T*, std::uint8_t*);                 \
  template void max_pool2_backward<T>(int, int, int, const std::uint8_t*, const T*, T*);          \
  template void upsample_nearest_forward<T>(int, int, int, int, const T*, T*);                    \
  template void upsample_nearest_backward<T>(int, int, int, int, const T*, T*);                   \
  template void upsample_bilinear_forward<T>(int, int, int, int, const T*, T*);                   \
  template void upsample_bilinear_backward<T>(int, int, int, int, const T*, T*);

DERAIN_INSTANTIATE_REF(float)
DERAIN_INSTANTIATE_REF(double)
#undef DERAIN_INSTANTIATE_REF

}  // namespace derain::core::ref

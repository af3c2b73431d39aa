#pragma once

#include <cmath>

// Shared index math for bilinear resampling. Production and reference kernels
// must use identical coefficient expressions so their outputs compare equal.
namespace derain::core::detail {

struct AxisCoeff {
  int i0 = 0, i1 = 0;
  double w0 = 0.0, w1 = 0.0;
};

// Half-pixel-centre source coordinate for output index o under integer
// upscale factor f, clamped to [0, n-1].
inline AxisCoeff bilinear_axis(int o, int f, int n) {
  const double src = (static_cast<double>(o) + 0.5) / static_cast<double>(f) - 0.5;
  const double fl = std::floor(src);
  AxisCoeff c;
  c.w1 = src - fl;
  c.w0 = 1.0 - c.w1;
  int i0 = static_cast<int>(fl);
  int i1 = i0 + 1;
  if (i0 < 0) i0 = 0;
  if (i0 > n - 1) i0 = n - 1;
  if (i1 < 0) i1 = 0;
  if (i1 > n - 1) i1 = n - 1;
  c.i0 = i0;
  c.i1 = i1;
  return c;
}

}  // namespace derain::core::detail

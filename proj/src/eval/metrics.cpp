#include "derain/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "derain/core/errors.hpp"

namespace derain::eval {

namespace {

std::vector<double> gaussian_window(int window, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(window));
  const double c = (window - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < window; ++i) {
    w[static_cast<std::size_t>(i)] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
    sum += w[static_cast<std::size_t>(i)];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Separable valid-mode filter: in is (h, w) row-major, out is (h, w - k + 1)
// after the horizontal pass and (h - k + 1, w) after the vertical one.
void filter_rows(const std::vector<double>& in, int h, int w, const std::vector<double>& k,
                 std::vector<double>& out) {
  const int kw = static_cast<int>(k.size());
  const int ow = w - kw + 1;
  out.assign(static_cast<std::size_t>(h) * ow, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kw; ++i)
        acc += k[static_cast<std::size_t>(i)] * in[static_cast<std::size_t>(y) * w + x + i];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
}

void filter_cols(const std::vector<double>& in, int h, int w, const std::vector<double>& k,
                 std::vector<double>& out) {
  const int kh = static_cast<int>(k.size());
  const int oh = h - kh + 1;
  out.assign(static_cast<std::size_t>(oh) * w, 0.0);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kh; ++i)
        acc += k[static_cast<std::size_t>(i)] * in[static_cast<std::size_t>(y + i) * w + x];
      out[static_cast<std::size_t>(y) * w + x] = acc;
    }
}

void local_means(const std::vector<double>& field, int h, int w,
                 const std::vector<double>& k, std::vector<double>& tmp,
                 std::vector<double>& out) {
  filter_rows(field, h, w, k, tmp);
  filter_cols(tmp, h, w - static_cast<int>(k.size()) + 1, k, out);
}

}  // namespace

double ssim(const Image& a, const Image& b, double max_value, int window, double sigma,
            double k1, double k2) {
  core::check_same_shape(a, b, "ssim inputs");
  if (a.rank() != 3) throw ShapeError("ssim expects (C,H,W), got " + a.shape_str());
  if (window < 2 || sigma <= 0.0 || max_value <= 0.0)
    throw ConfigError("ssim needs window >= 2, sigma > 0 and a positive dynamic range");
  const int c = a.channels(), h = a.height(), w = a.width();
  if (h < window || w < window)
    throw ShapeError("ssim: image " + a.shape_str() + " is smaller than the " +
                     std::to_string(window) + "x" + std::to_string(window) + " window");

  const auto kern = gaussian_window(window, sigma);
  const double c1 = (k1 * max_value) * (k1 * max_value);
  const double c2 = (k2 * max_value) * (k2 * max_value);
  const auto plane = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);

  std::vector<double> fa(plane), fb(plane), faa(plane), fbb(plane), fab(plane);
  std::vector<double> tmp, mu_a, mu_b, e_aa, e_bb, e_ab;
  double total = 0.0;
  std::int64_t windows = 0;
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        const double va = a(ch, y, x), vb = b(ch, y, x);
        fa[i] = va;
        fb[i] = vb;
        faa[i] = va * va;
        fbb[i] = vb * vb;
        fab[i] = va * vb;
      }
    local_means(fa, h, w, kern, tmp, mu_a);
    local_means(fb, h, w, kern, tmp, mu_b);
    local_means(faa, h, w, kern, tmp, e_aa);
    local_means(fbb, h, w, kern, tmp, e_bb);
    local_means(fab, h, w, kern, tmp, e_ab);

    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double ma = mu_a[i], mb = mu_b[i];
      const double var_a = e_aa[i] - ma * ma;
      const double var_b = e_bb[i] - mb * mb;
      const double cov = e_ab[i] - ma * mb;
      const double v = ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
                       ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
      total += std::clamp(v, -1.0, 1.0);
      ++windows;
    }
  }
  return total / static_cast<double>(windows);
}

double psnr(const Image& a, const Image& b, double max_value) {
  core::check_same_shape(a, b, "psnr inputs");
  if (max_value <= 0.0) throw ConfigError("psnr needs a positive dynamic range");
  double acc = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(a.numel());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(max_value * max_value / mse);
}

}  // namespace derain::eval

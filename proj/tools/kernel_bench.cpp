#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "derain/core/kernels.hpp"
#include "derain/core/rng.hpp"

using namespace derain::core;

namespace {

std::vector<float> random_vec(std::size_t n, Rng& rng) {
  std::vector<float> v(n);
  for (float& x : v) x = float(rng.uniform(-1.0, 1.0));
  return v;
}

double median_seconds(const std::function<void()>& fn, int repeats) {
  std::vector<double> t(repeats);
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    t[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  std::sort(t.begin(), t.end());
  return repeats % 2 ? t[repeats / 2] : 0.5 * (t[repeats / 2 - 1] + t[repeats / 2]);
}

bool bit_equal(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

struct Row {
  std::string name;
  double parallel_s, serial_s;
  bool exact;
};

void print_table(const std::vector<Row>& rows) {
  std::printf("%-28s %12s %12s %9s %7s\n", "kernel", "parallel (s)", "serial (s)", "speedup",
              "exact");
  for (const Row& r : rows)
    std::printf("%-28s %12.6f %12.6f %8.2fx %7s\n", r.name.c_str(), r.parallel_s, r.serial_s,
                r.serial_s / r.parallel_s, r.exact ? "yes" : "NO");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compare OpenMP kernels against the serial reference"};
  int h = 180, w = 270, repeats = 11;
  app.add_option("--height", h, "feature map height");
  app.add_option("--width", w, "feature map width");
  app.add_option("--repeats", repeats, "timed repeats per kernel (median reported)");
  CLI11_PARSE(app, argc, argv);

  Rng rng(42);
  std::vector<Row> rows;

  Conv2dShape s;
  s.in_c = 32;
  s.in_h = h;
  s.in_w = w;
  s.out_c = 64;
  s.k_h = s.k_w = 3;
  s.stride = 1;
  s.pad = 1;
  const std::size_t x_n = std::size_t(s.in_c) * s.in_h * s.in_w;
  const std::size_t y_n = std::size_t(s.out_c) * s.out_h() * s.out_w();
  const std::size_t w_n = std::size_t(s.out_c) * s.in_c * s.k_h * s.k_w;
  const auto x = random_vec(x_n, rng);
  const auto wt = random_vec(w_n, rng);
  const auto b = random_vec(s.out_c, rng);
  const auto gy = random_vec(y_n, rng);

  {
    std::vector<float> yp(y_n), ys(y_n);
    const double tp = median_seconds([&] { conv2d_forward(s, x.data(), wt.data(), b.data(), yp.data()); },
                                     repeats);
    const double ts = median_seconds(
        [&] { ref::conv2d_forward(s, x.data(), wt.data(), b.data(), ys.data()); }, repeats);
    rows.push_back({"conv2d_forward 32->64 k3", tp, ts, bit_equal(yp, ys)});
  }
  {
    std::vector<float> gxp(x_n), gxs(x_n);
    const double tp = median_seconds(
        [&] { conv2d_backward_input(s, gy.data(), wt.data(), gxp.data()); }, repeats);
    const double ts = median_seconds(
        [&] { ref::conv2d_backward_input(s, gy.data(), wt.data(), gxs.data()); }, repeats);
    rows.push_back({"conv2d_backward_input", tp, ts, bit_equal(gxp, gxs)});
  }
  {
    std::vector<float> gwp(w_n), gws(w_n), gbp(s.out_c), gbs(s.out_c);
    const double tp = median_seconds(
        [&] { conv2d_backward_filter(s, gy.data(), x.data(), gwp.data(), gbp.data()); },
        repeats);
    const double ts = median_seconds(
        [&] { ref::conv2d_backward_filter(s, gy.data(), x.data(), gws.data(), gbs.data()); },
        repeats);
    rows.push_back(
        {"conv2d_backward_filter", tp, ts, bit_equal(gwp, gws) && bit_equal(gbp, gbs)});
  }
  {
    const int c = 32;
    const auto gain = random_vec(c, rng);
    const auto bias = random_vec(c, rng);
    std::vector<float> yp(x_n), ys(x_n);
    std::vector<double> mp(c), ms(c), ip(c), is(c);
    const double tp = median_seconds(
        [&] {
          instance_norm_forward(c, h, w, x.data(), gain.data(), bias.data(), 1e-5f, yp.data(),
                                mp.data(), ip.data());
        },
        repeats);
    const double ts = median_seconds(
        [&] {
          ref::instance_norm_forward(c, h, w, x.data(), gain.data(), bias.data(), 1e-5f,
                                     ys.data(), ms.data(), is.data());
        },
        repeats);
    rows.push_back({"instance_norm_forward c32", tp, ts, bit_equal(yp, ys)});
  }
  {
    const int c = 32, f = 2;
    std::vector<float> yp(x_n * f * f), ys(x_n * f * f);
    const double tp = median_seconds(
        [&] { upsample_bilinear_forward(c, h, w, f, x.data(), yp.data()); }, repeats);
    const double ts = median_seconds(
        [&] { ref::upsample_bilinear_forward(c, h, w, f, x.data(), ys.data()); }, repeats);
    rows.push_back({"upsample_bilinear_forward x2", tp, ts, bit_equal(yp, ys)});
  }

  std::printf("input %dx%d, median of %d runs\n\n", w, h, repeats);
  print_table(rows);

  for (const Row& r : rows)
    if (!r.exact) {
      std::fprintf(stderr, "\nmismatch: %s diverged from the serial reference\n",
                   r.name.c_str());
      return 1;
    }
  return 0;
}

#include "derain/synth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "derain/core/errors.hpp"

namespace derain::synth {

using core::Rng;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kEdgeHalfWidth = 0.075;  // smoothstep half-width, fraction of radius

void check_range(double lo, double hi, double min_lo, const char* name) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi || lo < min_lo)
    throw ConfigError(std::string(name) + " range [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "] is invalid");
}

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

// Bilinear sample with coordinates clamped to the image rectangle.
double sample_clamped(const Image& img, int c, double y, double x) {
  const int h = img.height(), w = img.width();
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const int x0 = std::min(static_cast<int>(x), w - 1);
  const int y0 = std::min(static_cast<int>(y), h - 1);
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0, fy = y - y0;
  const double top = static_cast<double>(img(c, y0, x0)) * (1.0 - fx) +
                     static_cast<double>(img(c, y0, x1)) * fx;
  const double bot = static_cast<double>(img(c, y1, x0)) * (1.0 - fx) +
                     static_cast<double>(img(c, y1, x1)) * fx;
  return top * (1.0 - fy) + bot * fy;
}

// Separable [1,4,6,4,1]/16 blur with zero boundary, softening the mask rim.
Image blur_mask(const Image& mask) {
  static const double k[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  const int h = mask.height(), w = mask.width();
  Image tmp({1, h, w}), out({1, h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -2; i <= 2; ++i) {
        const int xi = x + i;
        if (xi >= 0 && xi < w) acc += k[i + 2] * static_cast<double>(mask(0, y, xi));
      }
      tmp(0, y, x) = static_cast<float>(acc);
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -2; i <= 2; ++i) {
        const int yi = y + i;
        if (yi >= 0 && yi < h) acc += k[i + 2] * static_cast<double>(tmp(0, yi, x));
      }
      out(0, y, x) = static_cast<float>(acc);
    }
  return out;
}

}  // namespace

void RainConfig::validate() const {
  if (drops_per_image[0] < 0 || drops_per_image[0] > drops_per_image[1])
    throw ConfigError("drops_per_image range is invalid");
  check_range(radius_range[0], radius_range[1], 1e-6, "radius");
  check_range(elongation_range[0], elongation_range[1], 1.0, "elongation");
  check_range(magnification_range[0], magnification_range[1], 1.0 + 1e-9, "magnification");
  if (shift_count_range[0] < 1 || shift_count_range[0] > shift_count_range[1])
    throw ConfigError("shift_count range is invalid");
  check_range(shift_magnitude_range[0], shift_magnitude_range[1], 0.0, "shift_magnitude");
  if (!(brightness_probability >= 0.0 && brightness_probability <= 1.0))
    throw ConfigError("brightness_probability must be in [0,1]");
  check_range(brightness_range[0], brightness_range[1], 1.0, "brightness");
}

void to_json(nlohmann::json& j, const RainConfig& c) {
  j = nlohmann::json{{"drops_per_image", c.drops_per_image},
                     {"radius_range", c.radius_range},
                     {"elongation_range", c.elongation_range},
                     {"magnification_range", c.magnification_range},
                     {"shift_count_range", c.shift_count_range},
                     {"shift_magnitude_range", c.shift_magnitude_range},
                     {"brightness_probability", c.brightness_probability},
                     {"brightness_range", c.brightness_range},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, RainConfig& c) {
  c = RainConfig{};
  if (j.contains("drops_per_image")) j.at("drops_per_image").get_to(c.drops_per_image);
  if (j.contains("radius_range")) j.at("radius_range").get_to(c.radius_range);
  if (j.contains("elongation_range")) j.at("elongation_range").get_to(c.elongation_range);
  if (j.contains("magnification_range"))
    j.at("magnification_range").get_to(c.magnification_range);
  if (j.contains("shift_count_range")) j.at("shift_count_range").get_to(c.shift_count_range);
  if (j.contains("shift_magnitude_range"))
    j.at("shift_magnitude_range").get_to(c.shift_magnitude_range);
  if (j.contains("brightness_probability"))
    j.at("brightness_probability").get_to(c.brightness_probability);
  if (j.contains("brightness_range")) j.at("brightness_range").get_to(c.brightness_range);
  if (j.contains("seed")) j.at("seed").get_to(c.seed);
}

std::vector<DropSpec> sample_drop_field(const RainConfig& config, int width, int height,
                                        Rng& rng) {
  config.validate();
  if (width < 1 || height < 1) throw ShapeError("drop field needs a positive image size");
  const int count = rng.uniform_int(config.drops_per_image[0], config.drops_per_image[1]);
  std::vector<DropSpec> drops;
  drops.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    DropSpec d;
    d.cx = rng.uniform(0.0, static_cast<double>(width));
    d.cy = rng.uniform(0.0, static_cast<double>(height));
    d.radius = rng.uniform(config.radius_range[0], config.radius_range[1]);
    d.elongation = rng.uniform(config.elongation_range[0], config.elongation_range[1]);
    d.magnification =
        rng.uniform(config.magnification_range[0], config.magnification_range[1]);
    d.shift_count = rng.uniform_int(config.shift_count_range[0], config.shift_count_range[1]);
    d.shift_magnitude =
        rng.uniform(config.shift_magnitude_range[0], config.shift_magnitude_range[1]);
    d.brightness = rng.bernoulli(config.brightness_probability)
                       ? rng.uniform(config.brightness_range[0], config.brightness_range[1])
                       : 1.0;
    drops.push_back(d);
  }
  return drops;
}

Image render_drop_mask(const DropSpec& drop, int width, int height) {
  if (width < 1 || height < 1) throw ShapeError("drop mask needs a positive image size");
  Image mask({1, height, width});
  const double ry = drop.radius * drop.elongation;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double dx = (x - drop.cx) / drop.radius;
      const double dy = (y - drop.cy) / ry;
      const double d = std::sqrt(dx * dx + dy * dy);
      mask(0, y, x) = static_cast<float>(
          1.0 - smoothstep(1.0 - kEdgeHalfWidth, 1.0 + kEdgeHalfWidth, d));
    }
  return mask;
}

Image refract_fill(const Image& background, const DropSpec& drop) {
  const int c = background.channels(), h = background.height(), w = background.width();
  Image fill({c, h, w});
  const double k = drop.magnification;
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double sx = drop.cx + k * (x - drop.cx);
        const double sy = drop.cy - k * (y - drop.cy);
        fill(ch, y, x) = static_cast<float>(sample_clamped(background, ch, sy, sx));
      }
  return fill;
}

Image defocus(const Image& fill, int shift_count, double shift_magnitude, Rng& rng) {
  if (shift_count < 1) throw ConfigError("defocus needs at least one copy");
  const int c = fill.channels(), h = fill.height(), w = fill.width();
  std::vector<double> acc(static_cast<std::size_t>(fill.numel()), 0.0);
  for (int i = 0; i < shift_count; ++i) {
    const double angle = rng.uniform(0.0, 2.0 * kPi);
    const double rho = shift_magnitude * std::sqrt(rng.uniform());
    const double dx = rho * std::cos(angle), dy = rho * std::sin(angle);
    std::size_t idx = 0;
    for (int ch = 0; ch < c; ++ch)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          acc[idx++] += sample_clamped(fill, ch, y - dy, x - dx);
  }
  Image out({c, h, w});
  for (std::int64_t i = 0; i < out.numel(); ++i)
    out[i] = static_cast<float>(acc[static_cast<std::size_t>(i)] / shift_count);
  return out;
}

CompositeResult composite_raindrops(const Image& clean, const RainConfig& config) {
  if (clean.rank() != 3) throw ShapeError("composite expects a (C,H,W) image");
  const int c = clean.channels(), h = clean.height(), w = clean.width();
  Rng rng(config.seed);
  const auto drops = sample_drop_field(config, w, h, rng);

  CompositeResult result{clean, Image::zeros({1, h, w})};
  for (const DropSpec& drop : drops) {
    const Image alpha = blur_mask(render_drop_mask(drop, w, h));
    const Image fill = defocus(refract_fill(result.rainy, drop), drop.shift_count,
                               drop.shift_magnitude, rng);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double a = alpha(0, y, x);
        if (a <= 0.0) continue;
        for (int ch = 0; ch < c; ++ch) {
          const double v =
              std::min(1.0, static_cast<double>(fill(ch, y, x)) * drop.brightness);
          const double blended = (1.0 - a) * static_cast<double>(result.rainy(ch, y, x)) + a * v;
          result.rainy(ch, y, x) = static_cast<float>(std::clamp(blended, 0.0, 1.0));
        }
        result.mask(0, y, x) = std::max(result.mask(0, y, x), alpha(0, y, x));
      }
  }
  return result;
}

}  // namespace derain::synth

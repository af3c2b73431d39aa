#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "json.hpp"

#include "derain/core/rng.hpp"
#include "derain/core/tensor.hpp"

namespace derain::synth {

using core::Image;

// One adherent drop. Geometry is a soft-edged vertical ellipse; the fill is
// a magnified, vertically inverted background sample, averaged over randomly
// shifted copies to mimic defocus.
struct DropSpec {
  double cx = 0.0, cy = 0.0;   // center, pixels
  double radius = 8.0;         // horizontal semi-axis, pixels
  double elongation = 1.0;     // vertical stretch, >= 1
  double magnification = 1.5;  // background-sampling scale k, > 1
  int shift_count = 1;         // defocus copies K, >= 1
  double shift_magnitude = 0.0;  // max shift s, pixels
  double brightness = 1.0;       // fill gain, >= 1
};

// Sampling ranges for drop fields; [lo, hi] inclusive ends.
struct RainConfig {
  std::array<int, 2> drops_per_image{5, 15};
  std::array<double, 2> radius_range{4.0, 24.0};
  std::array<double, 2> elongation_range{1.0, 1.5};
  std::array<double, 2> magnification_range{1.2, 2.0};
  std::array<int, 2> shift_count_range{4, 10};
  std::array<double, 2> shift_magnitude_range{1.0, 4.0};
  double brightness_probability = 0.3;  // q
  std::array<double, 2> brightness_range{1.05, 1.3};
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

void to_json(nlohmann::json& j, const RainConfig& c);
void from_json(const nlohmann::json& j, RainConfig& c);

// Drop count from drops_per_image, then per-drop fields from the configured
// ranges; brightness > 1 with probability q, else exactly 1. Deterministic in
// the rng state.
std::vector<DropSpec> sample_drop_field(const RainConfig& config, int width, int height,
                                        core::Rng& rng);

// (1,H,W) alpha map of the drop's elongated ellipse: 1 inside, smoothstep
// falloff across +-7.5% of the boundary, exactly 0 beyond.
Image render_drop_mask(const DropSpec& drop, int width, int height);

// Per pixel p: bilinear background sample at center + k*(p - center) with the
// vertical offset negated (inverted wide view), coordinates clamped to
// bounds. Same shape as background.
Image refract_fill(const Image& background, const DropSpec& drop);

// Mean of K copies of fill, each translated by an independent uniform random
// vector of magnitude <= s (edge-replicated bilinear). K=1, s=0 is the
// identity, bit-exactly.
Image defocus(const Image& fill, int shift_count, double shift_magnitude, core::Rng& rng);

struct CompositeResult {
  Image rainy;  // (C,H,W), [0,1]
  Image mask;   // (1,H,W) union alpha
};

// Seeds an rng from config.seed, samples a drop field, then per drop in
// sampled order: mask (rim-blurred), refract, defocus, brightness gain, alpha
// blend. Pixels with union alpha exactly 0 keep their input bits.
CompositeResult composite_raindrops(const Image& clean, const RainConfig& config);

}  // namespace derain::synth

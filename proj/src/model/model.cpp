#include "derain/model/model.hpp"

#include <array>

#include "derain/core/errors.hpp"
#include "derain/core/hash.hpp"
#include "derain/core/rng.hpp"

namespace derain::model {

using nn::Tape;
using nn::Var;

namespace {

constexpr std::array<int, 4> kPyramidScales{4, 8, 16, 32};

int disc_width(int layer) { return 64 << (layer - 1); }

struct SchemaBuilder {
  std::vector<ParamSpec> specs;

  void conv(const std::string& base, int in_c, int out_c, int k, bool norm) {
    specs.push_back({base + ".conv.w", {out_c, in_c, k, k}, Init::kConvWeight});
    specs.push_back({base + ".conv.b", {out_c}, Init::kZero});
    if (norm) {
      specs.push_back({base + ".norm.gain", {out_c}, Init::kNormGain});
      specs.push_back({base + ".norm.bias", {out_c}, Init::kZero});
    }
  }
};

}  // namespace

std::vector<ParamSpec> parameter_schema(const ModelConfig& config) {
  config.validate();
  const int in_c = config.input_channels;
  const int f1 = config.encoder_filters[0], f2 = config.encoder_filters[1];
  const int rf = config.residual_filters;
  SchemaBuilder b;

  b.conv("generator.enc1", in_c, f1, 4, true);
  if (config.use_aggregation) b.conv("generator.agg1", f1 + in_c, f1, 3, true);
  b.conv("generator.enc2", f1, f2, 4, true);
  if (config.use_aggregation) b.conv("generator.agg2", f2 + f1, f2, 3, true);
  b.conv("generator.adapt_in", f2, rf, 3, true);
  for (int i = 1; i <= config.residual_blocks; ++i) {
    const std::string base = "generator.res" + std::to_string(i);
    b.conv(base + ".c1", rf, rf, 3, true);
    b.conv(base + ".c2", rf, rf, 3, true);
  }
  b.conv("generator.adapt_out", rf, f2, 3, true);
  b.conv("generator.dec1", f2, f1, 3, true);
  if (config.use_aggregation) b.conv("generator.aggd1", f1 + f1 + f2, f1, 3, true);
  b.conv("generator.dec2", f1, f1, 3, true);
  if (config.use_aggregation) b.conv("generator.aggd2", f1 + f1, f1, 3, true);
  b.conv("generator.out", f1, in_c, 3, false);

  if (config.use_enhancer) {
    const int ew = config.enhancer_width;
    b.conv("enhancer.feat", 2 * in_c, ew, 3, true);
    for (int s : kPyramidScales)
      b.conv("enhancer.scale" + std::to_string(s), ew, ew / 4, 1, true);
    b.conv("enhancer.fuse", 2 * ew, in_c, 3, false);
  }

  const int layers = config.discriminator_layers;
  b.conv("discriminator.l1", in_c, disc_width(1), 4, false);
  for (int i = 2; i < layers; ++i)
    b.conv("discriminator.l" + std::to_string(i), disc_width(i - 1), disc_width(i), 4, true);
  b.conv("discriminator.l" + std::to_string(layers), disc_width(layers - 1), 1, 2, false);

  return b.specs;
}

nn::ParamStore<float> init_weights(const ModelConfig& config, std::uint64_t seed) {
  nn::ParamStore<float> store;
  for (const ParamSpec& spec : parameter_schema(config)) {
    core::Tensor<float> t(spec.dims);
    core::Rng rng(core::Rng::mix(seed, core::fnv1a64(spec.path)));
    switch (spec.init) {
      case Init::kConvWeight:
        for (std::int64_t i = 0; i < t.numel(); ++i)
          t[i] = static_cast<float>(rng.normal(0.0, 0.02));
        break;
      case Init::kNormGain:
        for (std::int64_t i = 0; i < t.numel(); ++i)
          t[i] = static_cast<float>(rng.normal(1.0, 0.02));
        break;
      case Init::kZero:
        break;
    }
    store.add(spec.path, std::move(t));
  }
  return store;
}

std::int64_t count_parameters(const nn::ParamStore<float>& weights) { return weights.count(); }

template <typename T>
ParamLookup bind_params(Tape<T>& tape, nn::ParamStore<T>& store, bool trainable) {
  return [&tape, &store, trainable](const std::string& path) {
    return tape.param(store.value(path), trainable ? &store.grad(path) : nullptr);
  };
}

namespace {

template <typename T>
Var conv_norm_relu(Tape<T>& t, const ParamLookup& p, const std::string& base, Var x, int stride,
                   int pad) {
  Var y = t.conv2d(x, p(base + ".conv.w"), p(base + ".conv.b"), stride, pad);
  y = t.instance_norm(y, p(base + ".norm.gain"), p(base + ".norm.bias"));
  return t.relu(y);
}

template <typename T>
Var residual_block(Tape<T>& t, const ParamLookup& p, const std::string& base, Var x) {
  Var r = conv_norm_relu(t, p, base + ".c1", x, 1, 1);
  r = t.conv2d(r, p(base + ".c2.conv.w"), p(base + ".c2.conv.b"), 1, 1);
  r = t.instance_norm(r, p(base + ".c2.norm.gain"), p(base + ".c2.norm.bias"));
  return t.add(x, r);
}

}  // namespace

template <typename T>
Var aggregation_forward(Tape<T>& tape, const ParamLookup& p, const std::string& base,
                        Var stage_input, Var conv_output, std::optional<Var> skip) {
  const auto& si = tape.value(stage_input);
  const auto& co = tape.value(conv_output);
  if (si.rank() != 3 || co.rank() != 3)
    throw ShapeError("aggregation: inputs must be rank 3 feature maps");
  Var resampled;
  if (si.height() == 2 * co.height() && si.width() == 2 * co.width()) {
    resampled = tape.avg_pool(stage_input, 2);
  } else if (2 * si.height() == co.height() && 2 * si.width() == co.width()) {
    resampled = tape.upsample_nearest(stage_input, 2);
  } else {
    throw ShapeError("aggregation: stage input " + si.shape_str() +
                     " is neither double nor half of conv output " + co.shape_str());
  }
  if (skip) {
    const auto& sk = tape.value(*skip);
    if (sk.height() != co.height() || sk.width() != co.width())
      throw ShapeError("aggregation: skip " + sk.shape_str() + " does not match conv output " +
                       co.shape_str());
  }
  std::vector<Var> parts{conv_output};
  if (skip) parts.push_back(*skip);
  parts.push_back(resampled);
  return conv_norm_relu(tape, p, base, tape.concat(parts), 1, 1);
}

template <typename T>
Var generator_forward(Tape<T>& tape, const ModelConfig& config, const ParamLookup& p, Var image,
                      GenTrace* trace) {
  config.validate();
  const auto& iv = tape.value(image);
  if (iv.rank() != 3 || iv.channels() != config.input_channels)
    throw ShapeError("generator: expected " + std::to_string(config.input_channels) +
                     "-channel rank-3 input, got " + iv.shape_str());
  if (iv.height() % 4 != 0 || iv.width() % 4 != 0)
    throw ShapeError("generator: spatial dims must be divisible by 4, got " + iv.shape_str());

  Var e1 = conv_norm_relu(tape, p, "generator.enc1", image, 2, 1);
  Var a1 = config.use_aggregation
               ? aggregation_forward(tape, p, "generator.agg1", image, e1, std::nullopt)
               : e1;
  Var e2 = conv_norm_relu(tape, p, "generator.enc2", a1, 2, 1);
  Var a2 = config.use_aggregation
               ? aggregation_forward(tape, p, "generator.agg2", a1, e2, std::nullopt)
               : e2;

  Var h = conv_norm_relu(tape, p, "generator.adapt_in", a2, 1, 1);
  if (trace) trace->bottleneck = tape.value(h).dims();
  for (int i = 1; i <= config.residual_blocks; ++i)
    h = residual_block(tape, p, "generator.res" + std::to_string(i), h);
  h = conv_norm_relu(tape, p, "generator.adapt_out", h, 1, 1);

  Var u1 = tape.upsample_nearest(h, 2);
  Var d1 = conv_norm_relu(tape, p, "generator.dec1", u1, 1, 1);
  Var ad1 = config.use_aggregation
                ? aggregation_forward(tape, p, "generator.aggd1", h, d1, std::optional<Var>(a1))
                : d1;
  Var u2 = tape.upsample_nearest(ad1, 2);
  Var d2 = conv_norm_relu(tape, p, "generator.dec2", u2, 1, 1);
  Var ad2 = config.use_aggregation
                ? aggregation_forward(tape, p, "generator.aggd2", ad1, d2, std::nullopt)
                : d2;

  Var out = tape.conv2d(ad2, p("generator.out.conv.w"), p("generator.out.conv.b"), 1, 1);
  return tape.tanh_sat(out);
}

template <typename T>
Var enhancer_forward(Tape<T>& tape, const ModelConfig& config, const ParamLookup& p,
                     Var generated, Var original, EnhTrace* trace) {
  config.validate();
  const auto& gv = tape.value(generated);
  const auto& ov = tape.value(original);
  core::check_same_shape(gv, ov, "enhancer");
  if (gv.height() % 32 != 0 || gv.width() % 32 != 0)
    throw ShapeError("enhancer: spatial dims must be divisible by 32, got " + gv.shape_str());

  Var cat = tape.concat({generated, original});
  Var feat = conv_norm_relu(tape, p, "enhancer.feat", cat, 1, 1);
  std::vector<Var> streams{feat};
  for (int s : kPyramidScales) {
    Var pooled = tape.avg_pool(feat, s);
    if (trace) trace->pyramid.push_back(tape.value(pooled).dims());
    Var squeezed =
        conv_norm_relu(tape, p, "enhancer.scale" + std::to_string(s), pooled, 1, 0);
    streams.push_back(tape.upsample_bilinear(squeezed, s));
  }
  Var fused = tape.conv2d(tape.concat(streams), p("enhancer.fuse.conv.w"),
                          p("enhancer.fuse.conv.b"), 1, 1);
  return tape.tanh_sat(fused);
}

template <typename T>
DiscOutput discriminator_forward(Tape<T>& tape, const ModelConfig& config, const ParamLookup& p,
                                 Var image) {
  config.validate();
  const auto& iv = tape.value(image);
  const int rf = config.patch_receptive_field;
  if (iv.rank() != 3 || iv.channels() != config.input_channels)
    throw ShapeError("discriminator: expected " + std::to_string(config.input_channels) +
                     "-channel rank-3 input, got " + iv.shape_str());
  if (iv.height() < rf || iv.width() < rf)
    throw ShapeError("discriminator: input " + iv.shape_str() +
                     " is smaller than one receptive field (" + std::to_string(rf) + " px)");

  const T slope = static_cast<T>(0.2);
  DiscOutput out;
  Var x = tape.leaky_relu(
      tape.conv2d(image, p("discriminator.l1.conv.w"), p("discriminator.l1.conv.b"), 2, 1),
      slope);
  out.features.push_back(x);
  for (int i = 2; i < config.discriminator_layers; ++i) {
    const std::string base = "discriminator.l" + std::to_string(i);
    Var y = tape.conv2d(x, p(base + ".conv.w"), p(base + ".conv.b"), 2, 1);
    y = tape.instance_norm(y, p(base + ".norm.gain"), p(base + ".norm.bias"));
    x = tape.leaky_relu(y, slope);
    out.features.push_back(x);
  }
  const std::string last = "discriminator.l" + std::to_string(config.discriminator_layers);
  out.scores = tape.conv2d(x, p(last + ".conv.w"), p(last + ".conv.b"), 1, 0);
  out.features.push_back(out.scores);
  return out;
}

template <typename T>
Var restore_forward(Tape<T>& tape, const ModelConfig& config, const ParamLookup& p, Var image) {
  Var g = generator_forward(tape, config, p, image);
  if (!config.use_enhancer) return g;
  return enhancer_forward(tape, config, p, g, image);
}

#define DERAIN_INSTANTIATE_MODEL(T)                                                              \
  template ParamLookup bind_params<T>(Tape<T>&, nn::ParamStore<T>&, bool);                       \
  template Var aggregation_forward<T>(Tape<T>&, const ParamLookup&, const std::string&, Var,     \
                                      Var, std::optional<Var>);                                  \
  template Var generator_forward<T>(Tape<T>&, const ModelConfig&, const ParamLookup&, Var,       \
                                    GenTrace*);                                                  \
  template Var enhancer_forward<T>(Tape<T>&, const ModelConfig&, const ParamLookup&, Var, Var,   \
                                   EnhTrace*);                                                   \
  template DiscOutput discriminator_forward<T>(Tape<T>&, const ModelConfig&, const ParamLookup&, \
                                               Var);                                             \
  template Var restore_forward<T>(Tape<T>&, const ModelConfig&, const ParamLookup&, Var);

DERAIN_INSTANTIATE_MODEL(float)
DERAIN_INSTANTIATE_MODEL(double)
#undef DERAIN_INSTANTIATE_MODEL

}  // namespace derain::model

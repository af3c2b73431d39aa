#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "derain/core/rng.hpp"
#include "derain/core/tensor.hpp"

namespace derain::data {

using core::Image;

enum class PairSource { kReal, kSynthetic };

struct ImagePair {
  Image affected;  // (C,H,W), [0,1]
  Image clean;
  std::string id;
  PairSource source = PairSource::kReal;
};

// Corpus layout: affected_dir and clean_dir (relative to root; "" = root)
// hold files named <id><suffix><ext>. Lossless formats only; 8- or 16-bit.
struct DatasetManifest {
  std::string root;
  std::string affected_dir;
  std::string clean_dir;
  std::string affected_suffix = "_rain";
  std::string clean_suffix = "_clean";
  int channels = 3;        // 1 or 3
  int declared_size = -1;  // -1 = unchecked
  PairSource source = PairSource::kReal;

  void validate() const;  // throws ConfigError
};

void to_json(nlohmann::json& j, const DatasetManifest& m);
void from_json(const nlohmann::json& j, DatasetManifest& m);

// Reads a manifest JSON file; a relative root is resolved against the
// manifest's directory.
DatasetManifest load_manifest(const std::string& path);

// Decodes to (C,H,W) float in [0,1]; 16-bit inputs rescale by 65535. A file
// whose channel count differs from `channels` raises ShapeError; decode
// failures raise IoError. When given, `bit_depth` receives 8 or 16.
Image load_image(const std::string& path, int channels, int* bit_depth = nullptr);

// Writes 8-bit (default) or 16-bit lossless images; values clamped to [0,1].
void save_image(const std::string& path, const Image& image, int bit_depth = 8);

// Scans both directories, pairs files by id, loads and shape-checks every
// pair. Files matching neither suffix are ignored; a file with no partner
// raises PairingError naming all offenders. Pairs come back sorted by id.
std::vector<ImagePair> load_paired_dataset(const DatasetManifest& manifest);

struct DatasetSplit {
  std::vector<ImagePair> train, val, test;
};

// Deterministic shuffled partition; ratios must sum to 1. Train and val take
// floor(n*ratio); the remainder goes to test.
DatasetSplit split_dataset(std::vector<ImagePair> pairs, const std::array<double, 3>& ratios,
                           std::uint64_t seed);

// [0,1] -> [-1,1] (inputs clamped to [0,1] first) and its inverse (clamped
// back to [0,1]).
Image normalize(const Image& image);
Image denormalize(const Image& image);

// Identical random square crop and (optionally) identical horizontal flip for
// both images of the pair.
ImagePair augment(const ImagePair& pair, int crop_size, core::Rng& rng,
                  bool allow_flip = true);

struct PadRecord {
  int top = 0, left = 0;
  int height = 0, width = 0;  // original size
};

// Reflection-pads bottom/right to the next multiple of m.
std::pair<Image, PadRecord> pad_to_multiple(const Image& image, int m = 32);
Image crop_back(const Image& padded, const PadRecord& record);

}  // namespace derain::data

#include "derain/data/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <utility>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "derain/core/errors.hpp"

namespace derain::data {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kLosslessExt{".png", ".bmp", ".ppm", ".pgm", ".tif", ".tiff"};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

float clamp01(float v) { return std::clamp(v, 0.0f, 1.0f); }

// Mirror without edge repeat; folds until in range.
int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * n - 2 - i;
  return i;
}

std::string join(const std::set<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ", ") + n;
  return out;
}

std::map<std::string, fs::path> scan_corpus(const fs::path& dir, const std::string& suffix) {
  if (!fs::is_directory(dir)) throw IoError("dataset directory not found: " + dir.string());
  std::map<std::string, fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (!kLosslessExt.count(lower(entry.path().extension().string()))) continue;
    std::string stem = entry.path().stem().string();
    if (!suffix.empty()) {
      if (stem.size() <= suffix.size() || stem.substr(stem.size() - suffix.size()) != suffix)
        continue;
      stem = stem.substr(0, stem.size() - suffix.size());
    }
    if (out.count(stem))
      throw PairingError("duplicate id '" + stem + "' in " + dir.string());
    out.emplace(std::move(stem), entry.path());
  }
  return out;
}

}  // namespace

void DatasetManifest::validate() const {
  if (root.empty()) throw ConfigError("dataset manifest needs a root directory");
  if (channels != 1 && channels != 3) throw ConfigError("channel mode must be 1 or 3");
  if (affected_dir == clean_dir && affected_suffix == clean_suffix)
    throw ConfigError("affected and clean files are indistinguishable (same dir and suffix)");
  if (declared_size < -1) throw ConfigError("declared_size must be -1 or non-negative");
}

void to_json(nlohmann::json& j, const DatasetManifest& m) {
  j = nlohmann::json{{"root", m.root},
                     {"affected_dir", m.affected_dir},
                     {"clean_dir", m.clean_dir},
                     {"affected_suffix", m.affected_suffix},
                     {"clean_suffix", m.clean_suffix},
                     {"channels", m.channels},
                     {"declared_size", m.declared_size},
                     {"source", m.source == PairSource::kSynthetic ? "synthetic" : "real"}};
}

void from_json(const nlohmann::json& j, DatasetManifest& m) {
  m = DatasetManifest{};
  if (j.contains("root")) j.at("root").get_to(m.root);
  if (j.contains("affected_dir")) j.at("affected_dir").get_to(m.affected_dir);
  if (j.contains("clean_dir")) j.at("clean_dir").get_to(m.clean_dir);
  if (j.contains("affected_suffix")) j.at("affected_suffix").get_to(m.affected_suffix);
  if (j.contains("clean_suffix")) j.at("clean_suffix").get_to(m.clean_suffix);
  if (j.contains("channels")) j.at("channels").get_to(m.channels);
  if (j.contains("declared_size")) j.at("declared_size").get_to(m.declared_size);
  if (j.contains("source")) {
    const std::string s = j.at("source").get<std::string>();
    if (s == "real") {
      m.source = PairSource::kReal;
    } else if (s == "synthetic") {
      m.source = PairSource::kSynthetic;
    } else {
      throw ConfigError("manifest source must be 'real' or 'synthetic', got '" + s + "'");
    }
  }
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("manifest " + path + ": " + e.what());
  }
  DatasetManifest m = j.get<DatasetManifest>();
  const fs::path root(m.root);
  if (root.is_relative()) m.root = (fs::path(path).parent_path() / root).string();
  return m;
}

Image load_image(const std::string& path, int channels, int* bit_depth) {
  const cv::Mat mat = cv::imread(path, cv::IMREAD_UNCHANGED);
  if (mat.empty()) throw IoError("cannot decode image: " + path);
  if (mat.channels() != channels)
    throw ShapeError(path + " has " + std::to_string(mat.channels()) +
                     " channels, expected " + std::to_string(channels));
  double scale;
  if (mat.depth() == CV_8U) {
    scale = 1.0 / 255.0;
    if (bit_depth) *bit_depth = 8;
  } else if (mat.depth() == CV_16U) {
    scale = 1.0 / 65535.0;
    if (bit_depth) *bit_depth = 16;
  } else {
    throw IoError(path + ": unsupported bit depth (need 8- or 16-bit)");
  }

  Image out({channels, mat.rows, mat.cols});
  for (int y = 0; y < mat.rows; ++y)
    for (int x = 0; x < mat.cols; ++x)
      for (int c = 0; c < channels; ++c) {
        const int src = channels == 3 ? 2 - c : c;  // BGR on disk, RGB in memory
        const double v = mat.depth() == CV_8U
                             ? mat.ptr<std::uint8_t>(y)[x * channels + src]
                             : mat.ptr<std::uint16_t>(y)[x * channels + src];
        out(c, y, x) = static_cast<float>(v * scale);
      }
  return out;
}

void save_image(const std::string& path, const Image& image, int bit_depth) {
  if (image.rank() != 3 || (image.channels() != 1 && image.channels() != 3))
    throw ShapeError("save_image expects (1|3,H,W), got " + image.shape_str());
  if (bit_depth != 8 && bit_depth != 16) throw ConfigError("bit depth must be 8 or 16");
  const int c = image.channels(), h = image.height(), w = image.width();
  const int type = bit_depth == 8 ? CV_MAKETYPE(CV_8U, c) : CV_MAKETYPE(CV_16U, c);
  const double scale = bit_depth == 8 ? 255.0 : 65535.0;
  cv::Mat mat(h, w, type);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch) {
        const int dst = c == 3 ? 2 - ch : ch;
        const double v = std::lround(clamp01(image(ch, y, x)) * scale);
        if (bit_depth == 8)
          mat.ptr<std::uint8_t>(y)[x * c + dst] = static_cast<std::uint8_t>(v);
        else
          mat.ptr<std::uint16_t>(y)[x * c + dst] = static_cast<std::uint16_t>(v);
      }
  if (!cv::imwrite(path, mat)) throw IoError("cannot write image: " + path);
}

std::vector<ImagePair> load_paired_dataset(const DatasetManifest& manifest) {
  manifest.validate();
  const fs::path root(manifest.root);
  const auto affected =
      scan_corpus(manifest.affected_dir.empty() ? root : root / manifest.affected_dir,
                  manifest.affected_suffix);
  const auto clean = scan_corpus(manifest.clean_dir.empty() ? root : root / manifest.clean_dir,
                                 manifest.clean_suffix);

  std::set<std::string> missing_clean, missing_affected;
  for (const auto& [id, p] : affected)
    if (!clean.count(id)) missing_clean.insert(id);
  for (const auto& [id, p] : clean)
    if (!affected.count(id)) missing_affected.insert(id);
  if (!missing_clean.empty() || !missing_affected.empty()) {
    std::string msg = "unpaired files";
    if (!missing_clean.empty()) msg += "; affected without clean: " + join(missing_clean);
    if (!missing_affected.empty()) msg += "; clean without affected: " + join(missing_affected);
    throw PairingError(msg);
  }

  std::vector<ImagePair> pairs;
  pairs.reserve(affected.size());
  for (const auto& [id, path] : affected) {
    ImagePair pair;
    pair.id = id;
    pair.source = manifest.source;
    pair.affected = load_image(path.string(), manifest.channels);
    pair.clean = load_image(clean.at(id).string(), manifest.channels);
    if (!pair.affected.same_shape(pair.clean))
      throw ShapeError("pair '" + id + "': affected " + pair.affected.shape_str() +
                       " vs clean " + pair.clean.shape_str());
    pairs.push_back(std::move(pair));
  }
  if (manifest.declared_size >= 0 &&
      static_cast<int>(pairs.size()) != manifest.declared_size)
    throw IncompatibleError("manifest declares " + std::to_string(manifest.declared_size) +
                            " pairs, found " + std::to_string(pairs.size()));
  return pairs;
}

DatasetSplit split_dataset(std::vector<ImagePair> pairs, const std::array<double, 3>& ratios,
                           std::uint64_t seed) {
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r >= 0.0)) throw ConfigError("split ratios must be non-negative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");

  const std::size_t n = pairs.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  core::Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1));
    std::swap(order[i - 1], order[j]);
  }

  const auto n_train = static_cast<std::size_t>(static_cast<double>(n) * ratios[0]);
  const auto n_val = static_cast<std::size_t>(static_cast<double>(n) * ratios[1]);
  DatasetSplit split;
  for (std::size_t i = 0; i < n; ++i) {
    ImagePair& p = pairs[order[i]];
    if (i < n_train)
      split.train.push_back(std::move(p));
    else if (i < n_train + n_val)
      split.val.push_back(std::move(p));
    else
      split.test.push_back(std::move(p));
  }
  return split;
}

Image normalize(const Image& image) {
  Image out(image.dims());
  for (std::int64_t i = 0; i < image.numel(); ++i) out[i] = 2.0f * clamp01(image[i]) - 1.0f;
  return out;
}

Image denormalize(const Image& image) {
  Image out(image.dims());
  for (std::int64_t i = 0; i < image.numel(); ++i)
    out[i] = clamp01((image[i] + 1.0f) * 0.5f);
  return out;
}

ImagePair augment(const ImagePair& pair, int crop_size, core::Rng& rng, bool allow_flip) {
  if (!pair.affected.same_shape(pair.clean))
    throw ShapeError("augment: pair shapes differ, " + pair.affected.shape_str() + " vs " +
                     pair.clean.shape_str());
  const int c = pair.affected.channels(), h = pair.affected.height(),
            w = pair.affected.width();
  if (crop_size < 1 || crop_size > h || crop_size > w)
    throw ConfigError("crop size " + std::to_string(crop_size) + " does not fit " +
                      pair.affected.shape_str());
  const int y0 = rng.uniform_int(0, h - crop_size);
  const int x0 = rng.uniform_int(0, w - crop_size);
  const bool flip = allow_flip && rng.bernoulli(0.5);

  auto window = [&](const Image& src) {
    Image out({c, crop_size, crop_size});
    for (int ch = 0; ch < c; ++ch)
      for (int y = 0; y < crop_size; ++y)
        for (int x = 0; x < crop_size; ++x)
          out(ch, y, x) = src(ch, y0 + y, flip ? x0 + crop_size - 1 - x : x0 + x);
    return out;
  };
  return {window(pair.affected), window(pair.clean), pair.id, pair.source};
}

std::pair<Image, PadRecord> pad_to_multiple(const Image& image, int m) {
  if (m < 1) throw ConfigError("padding multiple must be positive");
  const int c = image.channels(), h = image.height(), w = image.width();
  const int ph = (h + m - 1) / m * m;
  const int pw = (w + m - 1) / m * m;
  PadRecord record{0, 0, h, w};
  if (ph == h && pw == w) return {image, record};
  Image out({c, ph, pw});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < ph; ++y)
      for (int x = 0; x < pw; ++x) out(ch, y, x) = image(ch, reflect(y, h), reflect(x, w));
  return {out, record};
}

Image crop_back(const Image& padded, const PadRecord& record) {
  const int c = padded.channels();
  if (record.top < 0 || record.left < 0 || record.height < 1 || record.width < 1 ||
      record.top + record.height > padded.height() ||
      record.left + record.width > padded.width())
    throw ShapeError("crop record does not fit " + padded.shape_str());
  Image out({c, record.height, record.width});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < record.height; ++y)
      for (int x = 0; x < record.width; ++x)
        out(ch, y, x) = padded(ch, record.top + y, record.left + x);
  return out;
}

}  // namespace derain::data

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "derain/core/errors.hpp"
#include "derain/core/rng.hpp"
#include "derain/data/dataio.hpp"
#include "doctest.h"

using derain::core::Image;
using derain::core::Rng;
using derain::data::DatasetManifest;
using derain::data::ImagePair;
namespace data = derain::data;
namespace fs = std::filesystem;

namespace {

Image random_image(std::vector<int> dims, Rng& rng) {
  Image img(std::move(dims));
  for (std::int64_t i = 0; i < img.numel(); ++i)
    img[i] = static_cast<float>(rng.uniform());
  return img;
}

bool bit_equal(const Image& a, const Image& b) {
  return a.dims() == b.dims() &&
         std::memcmp(a.data(), b.data(), sizeof(float) * static_cast<std::size_t>(a.numel())) ==
             0;
}

// Scoped corpus directory that cleans up after itself.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Image quantized(const Image& img, double levels) {
  Image out(img.dims());
  for (std::int64_t i = 0; i < img.numel(); ++i)
    out[i] = static_cast<float>(std::lround(std::clamp(img[i], 0.0f, 1.0f) * levels) / levels);
  return out;
}

}  // namespace

TEST_CASE("image files round trip at both bit depths") {
  TempDir dir("test_dataio_img");
  Rng rng(5);
  const Image color = random_image({3, 9, 14}, rng);
  const Image gray = random_image({1, 7, 5}, rng);

  const std::string c8 = (dir.path / "c8.png").string();
  data::save_image(c8, color);
  CHECK(bit_equal(data::load_image(c8, 3), quantized(color, 255.0)));

  const std::string c16 = (dir.path / "c16.png").string();
  data::save_image(c16, color, 16);
  CHECK(bit_equal(data::load_image(c16, 3), quantized(color, 65535.0)));

  const std::string g8 = (dir.path / "g8.png").string();
  data::save_image(g8, gray);
  CHECK(bit_equal(data::load_image(g8, 1), quantized(gray, 255.0)));

  CHECK_THROWS_AS(data::load_image(c8, 1), derain::ShapeError);
  CHECK_THROWS_AS(data::load_image((dir.path / "nope.png").string(), 3), derain::IoError);
  CHECK_THROWS_AS(data::save_image(c8, color, 12), derain::ConfigError);

  // Out-of-range values clamp on save.
  Image wild({1, 2, 2});
  wild[0] = -0.5f;
  wild[1] = 1.5f;
  wild[2] = 0.25f;
  wild[3] = 1.0f;
  const std::string wp = (dir.path / "wild.png").string();
  data::save_image(wp, wild);
  const Image back = data::load_image(wp, 1);
  CHECK(back[0] == 0.0f);
  CHECK(back[1] == 1.0f);
  CHECK(back[3] == 1.0f);
}

TEST_CASE("paired loading applies the suffix rule and reports orphans") {
  TempDir dir("test_dataio_pairs");
  Rng rng(9);
  DatasetManifest m;
  m.root = dir.path.string();
  m.channels = 3;

  const Image a1 = random_image({3, 6, 8}, rng);
  const Image c1 = random_image({3, 6, 8}, rng);
  data::save_image((dir.path / "x_rain.png").string(), a1);
  data::save_image((dir.path / "x_clean.png").string(), c1);

  SUBCASE("single pair with id from the stem") {
    const auto pairs = data::load_paired_dataset(m);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].id == "x");
    CHECK(pairs[0].source == data::PairSource::kReal);
    CHECK(bit_equal(pairs[0].affected, quantized(a1, 255.0)));
    CHECK(bit_equal(pairs[0].clean, quantized(c1, 255.0)));
  }

  SUBCASE("ids come back sorted and non-matching files are ignored") {
    data::save_image((dir.path / "a_rain.png").string(), a1);
    data::save_image((dir.path / "a_clean.png").string(), c1);
    std::ofstream(dir.path / "notes.txt") << "not an image";
    data::save_image((dir.path / "preview.png").string(), a1);  // no suffix, skipped
    const auto pairs = data::load_paired_dataset(m);
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0].id == "a");
    CHECK(pairs[1].id == "x");
  }

  SUBCASE("orphans on either side are named") {
    data::save_image((dir.path / "lonely_rain.png").string(), a1);
    data::save_image((dir.path / "ghost_clean.png").string(), c1);
    try {
      data::load_paired_dataset(m);
      FAIL("expected PairingError");
    } catch (const derain::PairingError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("lonely") != std::string::npos);
      CHECK(msg.find("ghost") != std::string::npos);
    }
  }

  SUBCASE("channel mode mismatches fail loudly") {
    m.channels = 1;
    CHECK_THROWS_AS(data::load_paired_dataset(m), derain::ShapeError);
  }

  SUBCASE("pairwise shape mismatch is rejected") {
    data::save_image((dir.path / "y_rain.png").string(), a1);
    data::save_image((dir.path / "y_clean.png").string(), random_image({3, 5, 8}, rng));
    CHECK_THROWS_AS(data::load_paired_dataset(m), derain::ShapeError);
  }

  SUBCASE("declared size is enforced") {
    m.declared_size = 1;
    CHECK(data::load_paired_dataset(m).size() == 1);
    m.declared_size = 4;
    CHECK_THROWS_AS(data::load_paired_dataset(m), derain::IncompatibleError);
  }

  SUBCASE("split directories with empty suffixes") {
    fs::create_directories(dir.path / "in");
    fs::create_directories(dir.path / "gt");
    data::save_image((dir.path / "in" / "7.png").string(), a1);
    data::save_image((dir.path / "gt" / "7.png").string(), c1);
    DatasetManifest q;
    q.root = dir.path.string();
    q.affected_dir = "in";
    q.clean_dir = "gt";
    q.affected_suffix = "";
    q.clean_suffix = "";
    q.source = data::PairSource::kSynthetic;
    const auto pairs = data::load_paired_dataset(q);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].id == "7");
    CHECK(pairs[0].source == data::PairSource::kSynthetic);
  }

  SUBCASE("manifest validation") {
    DatasetManifest bad;
    bad.root = dir.path.string();
    bad.affected_suffix = "_x";
    bad.clean_suffix = "_x";
    CHECK_THROWS_AS(data::load_paired_dataset(bad), derain::ConfigError);
    bad = m;
    bad.channels = 2;
    CHECK_THROWS_AS(bad.validate(), derain::ConfigError);
    bad = m;
    bad.root = (dir.path / "absent").string();
    CHECK_THROWS_AS(data::load_paired_dataset(bad), derain::IoError);
  }
}

TEST_CASE("manifest json and file loading resolve relative roots") {
  TempDir dir("test_dataio_manifest");
  DatasetManifest m;
  m.root = "corpus";
  m.channels = 1;
  m.declared_size = 12;
  m.source = data::PairSource::kSynthetic;
  nlohmann::json j = m;
  {
    std::ofstream out(dir.path / "manifest.json");
    out << j.dump(2);
  }
  const DatasetManifest back = data::load_manifest((dir.path / "manifest.json").string());
  CHECK(back.root == (dir.path / "corpus").string());
  CHECK(back.channels == 1);
  CHECK(back.declared_size == 12);
  CHECK(back.source == data::PairSource::kSynthetic);
  CHECK(back.affected_suffix == "_rain");

  CHECK_THROWS_AS(data::load_manifest((dir.path / "missing.json").string()), derain::IoError);
  {
    std::ofstream out(dir.path / "broken.json");
    out << "{ nope";
  }
  CHECK_THROWS_AS(data::load_manifest((dir.path / "broken.json").string()), derain::IoError);
  {
    std::ofstream out(dir.path / "badsource.json");
    out << R"({"root": "r", "source": "imaginary"})";
  }
  CHECK_THROWS_AS(data::load_manifest((dir.path / "badsource.json").string()),
                  derain::ConfigError);
}

TEST_CASE("dataset splitting is a deterministic partition") {
  auto make_pairs = [](int n) {
    std::vector<ImagePair> pairs;
    for (int i = 0; i < n; ++i) {
      ImagePair p;
      p.id = "p" + std::to_string(i);
      p.affected = Image::full({1, 2, 2}, static_cast<float>(i) / 16.0f);
      p.clean = p.affected;
      pairs.push_back(std::move(p));
    }
    return pairs;
  };

  const auto split = data::split_dataset(make_pairs(10), {0.8, 0.1, 0.1}, 7);
  CHECK(split.train.size() == 8);
  CHECK(split.val.size() == 1);
  CHECK(split.test.size() == 1);

  const auto again = data::split_dataset(make_pairs(10), {0.8, 0.1, 0.1}, 7);
  for (std::size_t i = 0; i < split.train.size(); ++i)
    CHECK(split.train[i].id == again.train[i].id);
  CHECK(split.val[0].id == again.val[0].id);
  CHECK(split.test[0].id == again.test[0].id);

  std::vector<std::string> ids;
  for (const auto& p : split.train) ids.push_back(p.id);
  for (const auto& p : split.val) ids.push_back(p.id);
  for (const auto& p : split.test) ids.push_back(p.id);
  std::sort(ids.begin(), ids.end());
  std::vector<std::string> expect;
  for (int i = 0; i < 10; ++i) expect.push_back("p" + std::to_string(i));
  std::sort(expect.begin(), expect.end());
  CHECK(ids == expect);

  const auto moved = data::split_dataset(make_pairs(10), {0.8, 0.1, 0.1}, 8);
  bool differs = false;
  for (std::size_t i = 0; i < moved.train.size(); ++i)
    differs = differs || moved.train[i].id != split.train[i].id;
  CHECK(differs);

  CHECK_THROWS_AS(data::split_dataset(make_pairs(4), {0.5, 0.2, 0.2}, 1), derain::ConfigError);
  CHECK_THROWS_AS(data::split_dataset(make_pairs(4), {1.2, -0.1, -0.1}, 1),
                  derain::ConfigError);
}

TEST_CASE("normalization maps endpoints, clamps and inverts") {
  Image img({1, 1, 5});
  img[0] = 0.0f;
  img[1] = 1.0f;
  img[2] = 0.5f;
  img[3] = 1.5f;
  img[4] = -0.2f;
  const Image n = data::normalize(img);
  CHECK(n[0] == -1.0f);
  CHECK(n[1] == 1.0f);
  CHECK(n[2] == 0.0f);
  CHECK(n[3] == 1.0f);
  CHECK(n[4] == -1.0f);

  Rng rng(31);
  const Image x = random_image({3, 6, 6}, rng);
  const Image round = data::denormalize(data::normalize(x));
  for (std::int64_t i = 0; i < x.numel(); ++i)
    CHECK(round[i] == doctest::Approx(x[i]).epsilon(1e-7));

  Image model({1, 1, 3});
  model[0] = -1.0f;
  model[1] = 1.0f;
  model[2] = 3.0f;
  const Image d = data::denormalize(model);
  CHECK(d[0] == 0.0f);
  CHECK(d[1] == 1.0f);
  CHECK(d[2] == 1.0f);
}

TEST_CASE("augmentation crops and flips both images identically") {
  Rng rng(12);
  ImagePair pair;
  pair.id = "p";
  pair.affected = random_image({3, 12, 16}, rng);
  pair.clean = pair.affected;

  for (int trial = 0; trial < 20; ++trial) {
    const ImagePair out = data::augment(pair, 8, rng);
    CHECK(out.affected.dims() == std::vector<int>{3, 8, 8});
    CHECK(bit_equal(out.affected, out.clean));
  }

  Rng r1(4), r2(4);
  const ImagePair a = data::augment(pair, 8, r1);
  const ImagePair b = data::augment(pair, 8, r2);
  CHECK(bit_equal(a.affected, b.affected));

  ImagePair square;
  square.affected = random_image({1, 9, 9}, rng);
  square.clean = square.affected;
  Rng r3(1);
  const ImagePair same = data::augment(square, 9, r3, false);
  CHECK(bit_equal(same.affected, square.affected));

  // A flip must actually mirror content when it fires.
  Image grad({1, 4, 4});
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) grad(0, y, x) = static_cast<float>(x);
  ImagePair gp;
  gp.affected = grad;
  gp.clean = grad;
  bool flipped = false;
  Rng r4(77);
  for (int trial = 0; trial < 20 && !flipped; ++trial) {
    const ImagePair out = data::augment(gp, 4, r4);
    flipped = out.affected(0, 0, 0) == 3.0f;
  }
  CHECK(flipped);

  CHECK_THROWS_AS(data::augment(pair, 20, rng), derain::ConfigError);
  ImagePair odd = pair;
  odd.clean = random_image({3, 12, 15}, rng);
  CHECK_THROWS_AS(data::augment(odd, 8, rng), derain::ShapeError);
}

TEST_CASE("padding reaches the next multiple and crops back bit-exactly") {
  Rng rng(3);
  const Image img = random_image({3, 360, 540}, rng);
  const auto [padded, record] = data::pad_to_multiple(img, 32);
  CHECK(padded.dims() == std::vector<int>{3, 384, 544});
  CHECK(record.top == 0);
  CHECK(record.left == 0);
  CHECK(record.height == 360);
  CHECK(record.width == 540);
  CHECK(bit_equal(data::crop_back(padded, record), img));

  // Reflection: first padded column mirrors the second-to-last source column.
  CHECK(padded(1, 10, 540) == img(1, 10, 538));
  CHECK(padded(2, 360, 20) == img(2, 358, 20));

  const Image exact = random_image({1, 64, 32}, rng);
  const auto [same, rec2] = data::pad_to_multiple(exact, 32);
  CHECK(bit_equal(same, exact));
  CHECK(rec2.height == 64);
  CHECK(rec2.width == 32);

  const Image tiny = random_image({1, 2, 3}, rng);
  const auto [tp, tr] = data::pad_to_multiple(tiny, 8);
  CHECK(tp.dims() == std::vector<int>{1, 8, 8});
  CHECK(bit_equal(data::crop_back(tp, tr), tiny));

  CHECK_THROWS_AS(data::pad_to_multiple(img, 0), derain::ConfigError);
  CHECK_THROWS_AS(data::crop_back(tp, derain::data::PadRecord{0, 0, 9, 9}),
                  derain::ShapeError);
}

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "rgan/data.hpp"
#include "rgan/image_io.hpp"
#include "rgan/metrics.hpp"

using namespace rgan;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* name) {
  fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("synthetic pair: counts, shapes, attributes, determinism") {
  data::SyntheticSpec spec;
  spec.n_per_domain = 50;
  spec.image_size = 32;
  spec.seed = 7;
  auto [x, y] = data::generate_synthetic_pair(spec);

  CHECK(x.size() == 50);
  CHECK(y.size() == 50);
  CHECK(x.channels() == 3);
  CHECK(x.height() == 32);
  CHECK(x.width() == 32);
  CHECK(x.attributes().size() == 50);
  CHECK(y.attributes().size() == 50);
  x.validate();
  y.validate();

  // same seed -> bit identical
  auto [x2, y2] = data::generate_synthetic_pair(spec);
  CHECK(x.checksum() == x2.checksum());
  CHECK(y.checksum() == y2.checksum());

  // different domains draw independent attributes
  CHECK(x.attributes()[0].hue != y.attributes()[0].hue);

  spec.seed = 8;
  auto [x3, y3] = data::generate_synthetic_pair(spec);
  CHECK(x.checksum() != x3.checksum());
  (void)y3;
}

TEST_CASE("renderer/extractor attribute round trip within 0.05") {
  // The extractor lives in the metrics module and reads pixels only, so it
  // is an independent check on the renderer.
  data::AttributeRecord a;
  a.hue = 0.0;
  a.center_x = 0.5;
  a.center_y = 0.5;
  a.size = 0.5;
  a.shape_class = data::ShapeClass::circle;
  Tensor img = data::render_shape(a, 32);
  auto got = metrics::extract_attributes(img, data::ShapeClass::circle);
  REQUIRE(got.valid);
  CHECK(std::abs(got.hue - a.hue) < 0.05);
  CHECK(std::abs(got.center_x - a.center_x) < 0.05);
  CHECK(std::abs(got.center_y - a.center_y) < 0.05);
  CHECK(std::abs(got.size - a.size) < 0.05);

  // sweep over both families and varied attributes
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    data::AttributeRecord b;
    b.hue = rng.uniform();
    b.center_x = rng.uniform(0.35, 0.65);
    b.center_y = rng.uniform(0.35, 0.65);
    b.size = rng.uniform(0.3, 0.55);
    b.shape_class = i % 2 == 0 ? data::ShapeClass::circle : data::ShapeClass::square;
    Tensor im = data::render_shape(b, 32);
    auto e = metrics::extract_attributes(im, b.shape_class);
    REQUIRE(e.valid);
    const double dh = std::abs(e.hue - b.hue);
    CHECK(std::min(dh, 1.0 - dh) < 0.05);  // circular distance
    CHECK(std::abs(e.center_x - b.center_x) < 0.05);
    CHECK(std::abs(e.center_y - b.center_y) < 0.05);
    CHECK(std::abs(e.size - b.size) < 0.05);
  }
}

TEST_CASE("pixel map: mid-gray is exactly zero") {
  CHECK(io::pixel_to_unit(127.5) == 0.0);
  CHECK(io::pixel_to_unit(255.0) == 1.0);
  CHECK(io::pixel_to_unit(0.0) == -1.0);
}

TEST_CASE("load_image_domain: decoding, grayscale replication, errors") {
  const fs::path dir = temp_dir("rgan_test_domain");

  // one RGB image, one grayscale-ish (uniform gray written as RGB)
  Tensor rgb({3, 16, 20});
  for (Index i = 0; i < rgb.numel(); ++i) rgb[i] = (i % 17) / 17.0 * 2.0 - 1.0;
  io::write_png(dir / "a.png", rgb);
  Tensor gray = Tensor::full({1, 12, 12}, io::pixel_to_unit(128));
  io::write_png(dir / "b.png", gray);
  // an undecodable file that should be skipped with a warning
  std::ofstream(dir / "broken.png") << "not a png";

  auto ds = data::load_image_domain(dir, 16);
  CHECK(ds.size() == 2);
  CHECK(ds.channels() == 3);
  CHECK(ds.height() == 16);
  ds.validate();

  // grayscale image replicated: all three channels equal
  Tensor b_img = ds.image(1);
  for (Index i = 0; i < 16 * 16; ++i) {
    CHECK(b_img[i] == b_img[16 * 16 + i]);
    CHECK(b_img[i] == b_img[2 * 16 * 16 + i]);
  }
  // uniform gray 128 maps near zero (exact for 127.5, one quantum off here)
  CHECK(std::abs(b_img[0]) < 1.0 / 127.5 + 1e-12);

  // empty directory -> data error
  const fs::path empty = temp_dir("rgan_test_empty");
  CHECK_THROWS_AS(data::load_image_domain(empty, 16), Error);

  // all undecodable -> data error
  const fs::path bad = temp_dir("rgan_test_bad");
  std::ofstream(bad / "x.png") << "junk";
  CHECK_THROWS_AS(data::load_image_domain(bad, 16), Error);

  fs::remove_all(dir);
  fs::remove_all(empty);
  fs::remove_all(bad);
}

TEST_CASE("augment_affine: counts, identity copy, determinism, range") {
  data::SyntheticSpec spec;
  spec.n_per_domain = 9;
  spec.image_size = 16;
  spec.seed = 5;
  auto [x, y] = data::generate_synthetic_pair(spec);
  (void)y;

  auto aug = data::augment_affine(x, 10, {}, 77);
  CHECK(aug.size() == 90);
  CHECK(aug.source() == data::DatasetSource::augmented);
  aug.validate();

  // copy 0 of each source image is the identity
  for (Index i = 0; i < x.size(); ++i) {
    const double* src = x.image_data(i);
    const double* dst = aug.image_data(i * 10);
    for (Index j = 0; j < x.image_numel(); ++j) CHECK(src[j] == dst[j]);
  }

  // factor=1 -> bit-identical dataset
  auto one = data::augment_affine(x, 1, {}, 77);
  CHECK(one.pixels().checksum() == x.pixels().checksum());

  // fixed seed -> reproducible
  auto aug2 = data::augment_affine(x, 10, {}, 77);
  CHECK(aug.pixels().checksum() == aug2.pixels().checksum());
  auto aug3 = data::augment_affine(x, 10, {}, 78);
  CHECK(aug.pixels().checksum() != aug3.pixels().checksum());

  CHECK_THROWS_AS(data::augment_affine(x, 0, {}, 1), Error);
}

TEST_CASE("augmentation reaches the paper-scale corpus count") {
  // 9k images x factor 10 -> 90k, at a reduced resolution to stay in memory.
  data::SyntheticSpec spec;
  spec.n_per_domain = 9000;
  spec.image_size = 8;
  spec.seed = 13;
  auto [x, y] = data::generate_synthetic_pair(spec);
  (void)y;
  auto aug = data::augment_affine(x, 10, {}, 1);
  CHECK(aug.size() == 90000);
}

TEST_CASE("sample_batch: epoch coverage, determinism, uniformity") {
  data::SyntheticSpec spec;
  spec.n_per_domain = 5;
  spec.image_size = 16;
  spec.seed = 2;
  auto [x, y] = data::generate_synthetic_pair(spec);
  (void)y;

  // one epoch without replacement: batch of 5 covers each index once
  {
    Rng rng(1);
    data::SamplerState st;
    auto batch = data::sample_batch(x, 5, st, rng);
    std::vector<uint32_t> sorted = batch.indices;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<uint32_t>{0, 1, 2, 3, 4});
  }

  // same rng/sampler state -> same indices
  {
    Rng r1(9), r2(9);
    data::SamplerState s1, s2;
    auto b1 = data::sample_batch(x, 3, s1, r1);
    auto b2 = data::sample_batch(x, 3, s2, r2);
    CHECK(b1.indices == b2.indices);
  }

  // chi-square style uniformity: 10k draws of batch 3 over n=1000
  {
    data::SyntheticSpec big;
    big.n_per_domain = 1000;
    big.image_size = 8;
    big.seed = 3;
    auto [bx, by] = data::generate_synthetic_pair(big);
    (void)by;
    Rng rng(4);
    data::SamplerState st;
    std::vector<int> counts(1000, 0);
    for (int draw = 0; draw < 10000; ++draw) {
      auto b = data::sample_batch(bx, 3, st, rng);
      for (uint32_t idx : b.indices) counts[idx]++;
    }
    const double expected = 30000.0 / 1000.0;
    const double sd = std::sqrt(expected * (1.0 - 1.0 / 1000.0));
    for (int c : counts) CHECK(std::abs(c - expected) <= 3.0 * sd);
  }

  data::DomainDataset empty("e", 0, 3, 8, 8, data::DatasetSource::synthetic);
  Rng rng(1);
  data::SamplerState st;
  CHECK_THROWS_AS(data::sample_batch(empty, 2, st, rng), Error);
  CHECK_THROWS_AS(data::sample_batch(x, 0, st, rng), Error);
}

TEST_CASE("dataset save/load round trip via PNG + attributes.csv") {
  data::SyntheticSpec spec;
  spec.n_per_domain = 6;
  spec.image_size = 16;
  spec.seed = 21;
  auto [x, y] = data::generate_synthetic_pair(spec);
  (void)y;

  const fs::path dir = temp_dir("rgan_test_save");
  data::save_dataset(x, dir);
  CHECK(fs::exists(dir / "attributes.csv"));
  CHECK(fs::exists(dir / "000005.png"));

  auto loaded = data::load_synthetic_dataset(dir, "x");
  CHECK(loaded.size() == 6);
  CHECK(loaded.attributes().size() == 6);
  // attributes survive exactly (printed with max precision)
  for (Index i = 0; i < 6; ++i) {
    CHECK(loaded.attributes()[i].hue == x.attributes()[i].hue);
    CHECK(loaded.attributes()[i].size == x.attributes()[i].size);
  }
  // pixels survive within PNG quantization
  for (Index i = 0; i < x.image_numel(); ++i)
    CHECK(std::abs(loaded.image_data(0)[i] - x.image_data(0)[i]) <= 1.0 / 127.5);
  fs::remove_all(dir);
}

TEST_CASE("synthetic spec validation") {
  data::SyntheticSpec bad;
  bad.n_per_domain = 0;
  CHECK_THROWS_AS(data::generate_synthetic_pair(bad), Error);
  bad.n_per_domain = 1;
  bad.image_size = 4;
  CHECK_THROWS_AS(data::generate_synthetic_pair(bad), Error);
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "support/oracles.hpp"
#include "texplain/error.hpp"
#include "texplain/texture.hpp"

using namespace texplain;

namespace {

GrayImage image_of(int width, int height, std::vector<std::uint8_t> data) {
  return GrayImage{width, height, std::move(data)};
}

RoiMask full_mask(int width, int height) {
  return RoiMask{width, height,
                 std::vector<std::uint8_t>(
                     static_cast<std::size_t>(width) * height, 1)};
}

GrayImage random_image(std::mt19937_64& rng, int width, int height,
                       int max_value = 255) {
  std::uniform_int_distribution<int> pix(0, max_value);
  GrayImage img{width, height, {}};
  img.data.resize(static_cast<std::size_t>(width) * height);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(pix(rng));
  return img;
}

RoiMask random_mask(std::mt19937_64& rng, int width, int height) {
  std::bernoulli_distribution keep(0.7);
  RoiMask mask{width, height, {}};
  mask.data.resize(static_cast<std::size_t>(width) * height);
  for (auto& v : mask.data) v = keep(rng) ? 1 : 0;
  return mask;
}

double relative_gap(double a, double b) {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) / scale;
}

}  // namespace

TEST_CASE("roi extraction walks the mask row-major") {
  const GrayImage img = image_of(3, 2, {10, 20, 30, 40, 50, 60});
  const RoiMask mask{3, 2, {1, 0, 1, 0, 1, 0}};
  const PixelSample sample = extract_roi_pixels(img, mask);
  CHECK(sample.values == std::vector<std::uint8_t>{10, 30, 50});

  CHECK_THROWS_AS(extract_roi_pixels(img, full_mask(2, 2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(extract_roi_pixels(img, RoiMask{3, 2, {0, 0, 0, 0, 0, 0}}),
                  std::invalid_argument);
}

TEST_CASE("first-order statistics match the worked example") {
  const PixelSample sample{{0, 0, 100, 100}};
  const FirstOrderFeatures f = first_order_features(sample, {});

  CHECK(f.mean == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(f.variance == doctest::Approx(2500.0).epsilon(1e-12));
  CHECK(f.energy == doctest::Approx(20000.0).epsilon(1e-12));
  CHECK(f.rms == doctest::Approx(std::sqrt(5000.0)).epsilon(1e-12));
  CHECK(f.skewness == 0.0);
  CHECK(f.kurtosis == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.uniformity == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f.entropy == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("the energy shift applies before squaring") {
  FirstOrderConfig config;
  config.shift_c = 10;
  const FirstOrderFeatures f = first_order_features({{0, 100}}, config);
  CHECK(f.energy == doctest::Approx(100.0 + 110.0 * 110.0).epsilon(1e-12));
  CHECK(f.rms == doctest::Approx(std::sqrt(12200.0 / 2.0)).epsilon(1e-12));
}

TEST_CASE("constant samples use the zero-variance conventions") {
  const FirstOrderFeatures f = first_order_features({{42, 42, 42}}, {});
  CHECK(f.variance == 0.0);
  CHECK(f.skewness == 0.0);
  CHECK(f.kurtosis == 0.0);
  CHECK(f.uniformity == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(f.entropy) < 1e-12);
}

TEST_CASE("first-order statistics agree with direct formula evaluation") {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> size(1, 400);
  std::uniform_int_distribution<int> pix(0, 255);
  for (int trial = 0; trial < 200; ++trial) {
    PixelSample sample;
    const int n = size(rng);
    for (int i = 0; i < n; ++i) {
      sample.values.push_back(static_cast<std::uint8_t>(pix(rng)));
    }
    FirstOrderConfig config;
    config.shift_c = trial % 3 == 0 ? 10 : 0;

    const FirstOrderFeatures got = first_order_features(sample, config);
    const testing::OracleFirstOrder want =
        testing::oracle_first_order(sample.values, config.shift_c);

    CHECK(relative_gap(got.energy, want.energy) < 1e-10);
    CHECK(relative_gap(got.entropy, want.entropy) < 1e-10);
    CHECK(relative_gap(got.kurtosis, want.kurtosis) < 1e-10);
    CHECK(relative_gap(got.mean, want.mean) < 1e-10);
    CHECK(relative_gap(got.rms, want.rms) < 1e-10);
    CHECK(relative_gap(got.skewness, want.skewness) < 1e-10);
    CHECK(relative_gap(got.uniformity, want.uniformity) < 1e-10);
    CHECK(relative_gap(got.variance, want.variance) < 1e-10);
  }
}

TEST_CASE("angles map to fixed pixel offsets") {
  CHECK(angle_offset(Angle::deg0) == std::pair{0, 1});
  CHECK(angle_offset(Angle::deg45) == std::pair{-1, 1});
  CHECK(angle_offset(Angle::deg90) == std::pair{-1, 0});
  CHECK(angle_offset(Angle::deg135) == std::pair{-1, -1});
  CHECK(angle_from_degrees(45) == Angle::deg45);
  CHECK_THROWS_AS(angle_from_degrees(30), std::invalid_argument);
}

TEST_CASE("vertical-pair fixture produces the exact glcm features") {
  // Columns of constant intensity quantizing to levels [[0,1],[0,1]]:
  // every horizontal neighbor pair is (0,1) or (1,0) after symmetrization.
  const GrayImage img = image_of(2, 2, {0, 255, 0, 255});
  GlcmConfig config;
  config.levels = 2;
  const GlcmMatrix g =
      compute_glcm(img, full_mask(2, 2), 1, Angle::deg0, config);
  CHECK(g.at(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g.at(1, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g.at(0, 0) == 0.0);
  CHECK(g.at(1, 1) == 0.0);

  const GlcmFeatures f = glcm_features(g);
  CHECK(f.contrast == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(f.dissimilarity == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(f.homogeneity == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(f.energy == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(f.correlation == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("same-level pair fixture produces the exact glcm features") {
  // Rows of constant intensity, levels [[0,0],[1,1]]: both horizontal
  // pairs stay within one level.
  const GrayImage img = image_of(2, 2, {0, 0, 255, 255});
  GlcmConfig config;
  config.levels = 2;
  const GlcmMatrix g =
      compute_glcm(img, full_mask(2, 2), 1, Angle::deg0, config);
  const GlcmFeatures f = glcm_features(g);
  CHECK(f.contrast == 0.0);
  CHECK(f.dissimilarity == 0.0);
  CHECK(f.homogeneity == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(f.energy == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(f.correlation == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("quantization is the uniform integer bucket map") {
  // level = v * levels / 256; identity when levels = 256.
  const GrayImage img = image_of(4, 1, {0, 31, 32, 255});
  GlcmConfig config;
  config.levels = 8;
  const GlcmMatrix g =
      compute_glcm(img, full_mask(4, 1), 1, Angle::deg0, config);
  // Pairs (0,0), (0,1), (1,7) symmetrized.
  CHECK(g.at(0, 0) == doctest::Approx(2.0 / 6.0).epsilon(1e-15));
  CHECK(g.at(0, 1) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(g.at(1, 0) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(g.at(1, 7) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(g.at(7, 1) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("pairs crossing the mask boundary are not counted") {
  const GrayImage img = image_of(3, 1, {0, 100, 200});
  const RoiMask mask{3, 1, {1, 1, 0}};
  const auto counts = glcm_pair_counts(img, mask, 1, Angle::deg0, 256);
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  CHECK(total == 1);  // only (0 -> 100); the pair into the masked-out pixel drops
  CHECK(counts[0 * 256 + 100] == 1);
}

TEST_CASE("degenerate rois raise instead of emitting nans") {
  const GrayImage img = image_of(3, 3, std::vector<std::uint8_t>(9, 7));
  RoiMask mask{3, 3, std::vector<std::uint8_t>(9, 0)};
  mask.data[4] = 1;  // single pixel: no pair at any distance
  GlcmConfig config;
  CHECK_THROWS_AS(compute_glcm(img, mask, 1, Angle::deg0, config),
                  DegenerateGlcmError);
}

TEST_CASE("constant rois hit the correlation convention, not a crash") {
  const GrayImage img = image_of(2, 2, {9, 9, 9, 9});
  GlcmConfig config;
  config.levels = 4;
  const GlcmMatrix g =
      compute_glcm(img, full_mask(2, 2), 1, Angle::deg0, config);
  const GlcmFeatures f = glcm_features(g);
  CHECK(f.correlation == 1.0);
  CHECK(f.energy == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("glcm counts equal brute-force pair enumeration") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim(2, 12);
  const int level_choices[] = {2, 4, 8};
  int degenerate = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int w = dim(rng), h = dim(rng);
    const GrayImage img = random_image(rng, w, h);
    const RoiMask mask = random_mask(rng, w, h);
    const int levels = level_choices[trial % 3];
    for (int distance : {1, 3, 5}) {
      for (Angle angle :
           {Angle::deg0, Angle::deg45, Angle::deg90, Angle::deg135}) {
        const auto got = glcm_pair_counts(img, mask, distance, angle, levels);
        const auto want =
            testing::oracle_glcm_counts(img, mask, distance, angle, levels);
        REQUIRE(got == want);
        std::uint64_t total = 0;
        for (auto c : got) total += c;
        if (total == 0) ++degenerate;
      }
    }
  }
  CHECK(degenerate > 0);  // the sweep exercises the no-pair corner too
}

TEST_CASE("normalized glcms are symmetric probability tables") {
  std::mt19937_64 rng(99);
  const GrayImage img = random_image(rng, 10, 10);
  const RoiMask mask = random_mask(rng, 10, 10);
  GlcmConfig config;
  config.levels = 8;
  const GlcmMatrix g = compute_glcm(img, mask, 1, Angle::deg45, config);
  double total = 0.0;
  for (int i = 0; i < g.levels; ++i) {
    for (int j = 0; j < g.levels; ++j) {
      total += g.at(i, j);
      CHECK(g.at(i, j) == g.at(j, i));
    }
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  // Symmetric tables share their marginals.
  CHECK(g.mean_x == doctest::Approx(g.mean_y).epsilon(1e-12));
  CHECK(g.std_x == doctest::Approx(g.std_y).epsilon(1e-12));
}

TEST_CASE("feature names are statistic-major, then distance, then angle") {
  GlcmConfig config;
  const auto names = feature_names(config, false);
  REQUIRE(names.size() == 60);
  CHECK(names[0] == "contrast_d1_a0");
  CHECK(names[1] == "contrast_d1_a45");
  CHECK(names[3] == "contrast_d1_a135");
  CHECK(names[4] == "contrast_d3_a0");
  CHECK(names[11] == "contrast_d5_a135");
  CHECK(names[12] == "correlation_d1_a0");
  CHECK(names[59] == "homogeneity_d5_a135");

  const auto with_fo = feature_names(config, true);
  REQUIRE(with_fo.size() == 68);
  CHECK(with_fo[60] == "energy");
  CHECK(with_fo[67] == "variance");
}

TEST_CASE("feature vectors line up with their names") {
  std::mt19937_64 rng(5);
  const GrayImage img = random_image(rng, 16, 16);
  const RoiMask mask = full_mask(16, 16);
  GlcmConfig config;
  config.levels = 8;

  const FeatureVector fv = feature_vector(img, mask, config, {}, true);
  REQUIRE(fv.names.size() == 68);
  REQUIRE(fv.values.size() == 68);
  CHECK(fv.names == feature_names(config, true));

  // Spot-check one GLCM entry and one first-order entry against direct
  // calls.
  const GlcmMatrix g = compute_glcm(img, mask, 3, Angle::deg90, config);
  const GlcmFeatures direct = glcm_features(g);
  const auto pos = std::find(fv.names.begin(), fv.names.end(),
                             "correlation_d3_a90") -
                   fv.names.begin();
  CHECK(fv.values[pos] == direct.correlation);

  const FirstOrderFeatures fo =
      first_order_features(extract_roi_pixels(img, mask), {});
  const auto mean_pos =
      std::find(fv.names.begin(), fv.names.end(), "mean") - fv.names.begin();
  CHECK(fv.values[mean_pos] == fo.mean);
}

TEST_CASE("glcm config is validated") {
  const GrayImage img = image_of(2, 2, {0, 1, 2, 3});
  GlcmConfig config;
  config.levels = 1;
  CHECK_THROWS_AS(compute_glcm(img, full_mask(2, 2), 1, Angle::deg0, config),
                  std::invalid_argument);
  config.levels = 257;
  CHECK_THROWS_AS(compute_glcm(img, full_mask(2, 2), 1, Angle::deg0, config),
                  std::invalid_argument);
  config.levels = 8;
  CHECK_THROWS_AS(compute_glcm(img, full_mask(2, 2), 0, Angle::deg0, config),
                  std::invalid_argument);
}

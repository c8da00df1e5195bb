#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "synth.hpp"
#include "vms/errors.hpp"
#include "vms/featpool.hpp"

namespace {

vms::RgbImage noise_image(int w, int h, std::uint64_t seed) {
  vms::CounterRng rng(seed);
  vms::RgbImage img(w, h);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

TEST(PixelHistogram, CellsSumToOne) {
  const auto img = noise_image(37, 29, 1);
  const auto d = vms::pixel_histogram(img);
  EXPECT_EQ(d.bins, 24);
  ASSERT_EQ(d.values.size(), 16u * 24u);
  for (std::size_t c = 0; c < d.cell_count(); ++c) {
    const double s = std::accumulate(d.values.begin() + c * 24, d.values.begin() + (c + 1) * 24, 0.0);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(PixelHistogram, CountsAndExtentsTileTheImage) {
  const auto img = noise_image(37, 29, 2);
  const auto d = vms::pixel_histogram_counts(img, {.grid_x = 3, .grid_y = 5, .bins_per_channel = 4});
  long area = 0;
  for (std::size_t c = 0; c < d.extents.size(); ++c) {
    const auto& e = d.extents[c];
    const long a = static_cast<long>(e.x1 - e.x0) * (e.y1 - e.y0);
    area += a;
    for (int ch = 0; ch < 3; ++ch) {
      double s = 0;
      for (int b = 0; b < 4; ++b) s += d.values[c * 12 + ch * 4 + b];
      EXPECT_EQ(s, static_cast<double>(a));
    }
  }
  EXPECT_EQ(area, 37L * 29L);
}

TEST(PixelHistogram, GrayLevelLandsInExpectedBin) {
  for (int g : {0, 31, 32, 127, 128, 255}) {
    vms::RgbImage img(8, 8);
    std::fill(img.pixels.begin(), img.pixels.end(), static_cast<std::uint8_t>(g));
    const auto d = vms::pixel_histogram(img, {.grid_x = 1, .grid_y = 1, .bins_per_channel = 8});
    for (int ch = 0; ch < 3; ++ch) {
      EXPECT_NEAR(d.values[ch * 8 + g / 32], 1.0 / 3.0, 1e-15) << g;
    }
  }
}

TEST(PixelHistogram, Errors) {
  EXPECT_THROW(vms::pixel_histogram(vms::RgbImage{}), vms::ValidationError);
  EXPECT_THROW(vms::pixel_histogram(vms::RgbImage(2, 2), {.grid_x = 4}), vms::ValidationError);
  EXPECT_THROW(vms::pixel_histogram(vms::RgbImage(8, 8), {.bins_per_channel = 0}), vms::ValidationError);
}

TEST(Hog, LengthFor64Square) {
  const auto d = vms::hog_descriptor(vms::GrayImage(64, 64, 0.5));
  EXPECT_EQ(d.grid_x, 7);
  EXPECT_EQ(d.grid_y, 7);
  EXPECT_EQ(d.bins, 36);
  EXPECT_EQ(d.values.size(), 1764u);
}

TEST(Hog, ConstantImageIsAllZero) {
  const auto d = vms::hog_descriptor(vms::GrayImage(32, 24, 0.7));
  for (double v : d.values) EXPECT_EQ(v, 0.0);
}

TEST(Hog, VerticalEdgeVotesHorizontalGradientBin) {
  vms::GrayImage img(16, 16);
  for (int y = 0; y < 16; ++y) {
    for (int x = 8; x < 16; ++x) img.at(x, y) = 1.0;
  }
  const auto d = vms::hog_descriptor(img);
  ASSERT_EQ(d.cell_count(), 1u);
  // Gradient points along +x: orientation 0 degrees, bin 0 only.
  for (int c = 0; c < 4; ++c) {
    for (int b = 1; b < 9; ++b) EXPECT_EQ(d.values[c * 9 + b], 0.0);
  }
  EXPECT_GT(d.values[0 * 9] + d.values[1 * 9], 0.0);
}

TEST(Hog, HorizontalEdgeVotes90DegreeBins) {
  vms::GrayImage img(16, 16);
  for (int y = 8; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) img.at(x, y) = 1.0;
  }
  const auto d = vms::hog_descriptor(img);
  // 90 degrees sits between centres 80 and 100 (bins 4 and 5) equally.
  for (int c = 0; c < 4; ++c) EXPECT_NEAR(d.values[c * 9 + 4], d.values[c * 9 + 5], 1e-12);
}

TEST(Hog, InvariantToAddedConstantAndBlocksAreNormalized) {
  vms::CounterRng rng(3);
  vms::GrayImage a(40, 32), b(40, 32);
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    a.pixels[i] = rng.uniform();
    b.pixels[i] = a.pixels[i] + 17.0;
  }
  const auto da = vms::hog_descriptor(a);
  const auto db = vms::hog_descriptor(b);
  ASSERT_EQ(da.values.size(), db.values.size());
  for (std::size_t i = 0; i < da.values.size(); ++i) EXPECT_NEAR(da.values[i], db.values[i], 1e-9);
  for (std::size_t c = 0; c < da.cell_count(); ++c) {
    double ss = 0;
    for (int k = 0; k < da.bins; ++k) {
      const double v = da.values[c * da.bins + k];
      EXPECT_GE(v, 0.0);
      ss += v * v;
    }
    EXPECT_NEAR(ss, 1.0, 1e-9);
  }
}

TEST(Hog, TooSmall) {
  EXPECT_THROW(vms::hog_descriptor(vms::GrayImage(12, 40)), vms::ValidationError);
}

TEST(DescriptorTensor, RoundTripAndValidation) {
  vms::SpatialDescriptor d;
  d.name = "gist";
  d.grid_x = 3;
  d.grid_y = 2;
  d.bins = 5;
  for (int i = 0; i < 30; ++i) d.values.push_back(i * 0.25);
  const auto back = vms::load_descriptor(vms::descriptor_tensor(d), "gist");
  EXPECT_EQ(back.values, d.values);
  EXPECT_EQ(back.grid_x, 3);
  EXPECT_EQ(back.grid_y, 2);
  vms::Tensor neg{{1, 1, 2}, {0.5f, -0.5f}};
  EXPECT_THROW(vms::load_descriptor(neg, "x"), vms::ValidationError);
  vms::Tensor flat{{4}, {1, 2, 3, 4}};
  EXPECT_THROW(vms::load_descriptor(flat, "x"), vms::ValidationError);
}

vms::SpatialDescriptor random_descriptor(vms::CounterRng& rng, int gx, int gy, int bins) {
  vms::SpatialDescriptor d;
  d.name = "r";
  d.grid_x = gx;
  d.grid_y = gy;
  d.bins = bins;
  for (int i = 0; i < gx * gy * bins; ++i) d.values.push_back(rng.uniform());
  return d;
}

TEST(PoolWeighted, MatchesDirectOracle) {
  vms::CounterRng rng(4);
  const auto d = random_descriptor(rng, 4, 4, 6);
  const auto w = synth::random_map(rng, {4, 4});
  const auto p = vms::pool_weighted(d, &w);
  std::vector<double> expect(d.values.size());
  double mass = 0;
  for (int cy = 0; cy < 4; ++cy) {
    for (int cx = 0; cx < 4; ++cx) {
      for (int b = 0; b < 6; ++b) {
        const std::size_t i = (cy * 4 + cx) * 6 + b;
        expect[i] = d.values[i] * w.at(cx, cy);
        mass += expect[i];
      }
    }
  }
  for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_NEAR(p.values[i], expect[i] / mass, 1e-15);
  EXPECT_FALSE(p.all_zero);
}

TEST(PoolWeighted, AreaAveragesFinerWeights) {
  vms::CounterRng rng(5);
  const auto d = random_descriptor(rng, 2, 2, 3);
  vms::MapGrid w({4, 4});
  w.at(0, 0) = 1.0;  // a quarter of the top-left cell
  const auto p = vms::pool_weighted(d, &w);
  const double s = d.values[0] + d.values[1] + d.values[2];
  for (int b = 0; b < 3; ++b) EXPECT_NEAR(p.values[b], d.values[b] / s, 1e-15);
  for (std::size_t i = 3; i < p.values.size(); ++i) EXPECT_EQ(p.values[i], 0.0);
}

TEST(PoolWeighted, NullWeightsAndScaleInvariance) {
  vms::CounterRng rng(6);
  const auto d = random_descriptor(rng, 3, 3, 4);
  const auto w = synth::random_map(rng, {3, 3});
  std::vector<double> half(w.size());
  for (std::size_t i = 0; i < half.size(); ++i) half[i] = 0.5 * w.values()[i];
  const vms::MapGrid w2(w.dims(), half);
  const auto a = vms::pool_weighted(d, &w);
  const auto b = vms::pool_weighted(d, &w2);
  for (std::size_t i = 0; i < a.values.size(); ++i) EXPECT_NEAR(a.values[i], b.values[i], 1e-15);
  const auto u = vms::pool_weighted(d, nullptr);
  EXPECT_NEAR(std::accumulate(u.values.begin(), u.values.end(), 0.0), 1.0, 1e-12);
}

TEST(PoolWeighted, ZeroMass) {
  vms::CounterRng rng(7);
  const auto d = random_descriptor(rng, 2, 2, 2);
  const vms::MapGrid zero({2, 2});
  const auto p = vms::pool_weighted(d, &zero);
  EXPECT_TRUE(p.all_zero);
  for (double v : p.values) EXPECT_EQ(v, 0.0);
}

}  // namespace

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "synth.hpp"
#include "vms/errors.hpp"
#include "vms/map_grid.hpp"
#include "vms/vms_builder.hpp"

namespace {

using vms::GridDims;
using vms::MapGrid;
using vms::RectSelection;
using vms::TrialRole;
using vms::VmsKind;

// Per-cell point-in-rectangle oracle for the union mask.
MapGrid union_oracle(const std::vector<RectSelection>& rects, GridDims g) {
  MapGrid m(g);
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) {
      const double cx = (x + 0.5) / g.width, cy = (y + 0.5) / g.height;
      for (const auto& r : rects) {
        if (cx >= r.x0 && cx < r.x1 && cy >= r.y0 && cy < r.y1) m.at(x, y) = 1.0;
      }
    }
  }
  return m;
}

vms::SessionLog one_trial(const std::string& pid, TrialRole role, int confidence, std::vector<RectSelection> rects,
                          const std::string& image = "img") {
  vms::SessionLog log;
  log.session_id = "s-" + pid;
  log.participant_id = pid;
  log.test_trials.push_back(synth::trial(image, role, confidence, std::move(rects)));
  return log;
}

TEST(Rasterize, FullCover) {
  const auto m = vms::rasterize_selections(std::vector<RectSelection>{{0, 0, 1, 1}}, {10, 10});
  EXPECT_DOUBLE_EQ(m.min(), 1.0);
}

TEST(Rasterize, HalfCover) {
  const auto m = vms::rasterize_selections(std::vector<RectSelection>{{0, 0, 0.5, 1}}, {10, 10});
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) EXPECT_EQ(m.at(x, y), x < 5 ? 1.0 : 0.0);
  }
}

TEST(Rasterize, OverlapsMatchPointInRectOracle) {
  vms::CounterRng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<RectSelection> rects;
    const int k = 1 + static_cast<int>(rng.below(3));
    for (int i = 0; i < k; ++i) {
      double a = rng.uniform(), b = rng.uniform(), c = rng.uniform(), d = rng.uniform();
      // Every side spans at least 0.2, so each rectangle covers a cell centre.
      rects.push_back({0.8 * std::min(a, b), 0.8 * std::min(c, d), std::max(a, b) + 0.2, std::max(c, d) + 0.2});
      rects.back().x1 = std::min(rects.back().x1, 1.0);
      rects.back().y1 = std::min(rects.back().y1, 1.0);
    }
    const GridDims g{7 + static_cast<int>(rng.below(20)), 5 + static_cast<int>(rng.below(20))};
    const auto m = vms::rasterize_selections(rects, g);
    ASSERT_EQ(m, union_oracle(rects, g));
  }
}

TEST(Rasterize, SumPolicyCountsOverlapsTwice) {
  const std::vector<RectSelection> rects{{0, 0, 0.6, 1}, {0.4, 0, 1, 1}};
  const auto m = vms::rasterize_selections(rects, {10, 1}, {.overlap = vms::OverlapPolicy::Sum});
  EXPECT_EQ(m.at(5, 0), 2.0);
  EXPECT_EQ(m.at(0, 0), 1.0);
}

TEST(Rasterize, DegenerateSelection) {
  const std::vector<RectSelection> tiny{{0.01, 0.01, 0.02, 0.02}};
  EXPECT_THROW(vms::rasterize_selections(tiny, {10, 10}), vms::ValidationError);
  const auto m = vms::rasterize_selections(tiny, {10, 10}, {.snap_degenerate = true});
  EXPECT_EQ(m.sum(), 1.0);
  EXPECT_EQ(m.at(0, 0), 1.0);
}

TEST(BuildVms, SingleFullRect) {
  const std::vector<vms::SessionLog> logs{one_trial("p1", TrialRole::Repeat, 90, {{0, 0, 1, 1}})};
  const auto m = vms::build_vms(logs, "img", VmsKind::True, {.grid = {10, 10}});
  EXPECT_DOUBLE_EQ(m.min(), 1.0);
}

TEST(BuildVms, DisjointHalvesGiveOneHalf) {
  const std::vector<vms::SessionLog> logs{one_trial("p1", TrialRole::Repeat, 90, {{0, 0, 0.5, 1}}),
                                          one_trial("p2", TrialRole::Repeat, 90, {{0.5, 0, 1, 1}})};
  const auto m = vms::build_vms(logs, "img", VmsKind::True, {.grid = {10, 10}});
  for (double v : m.values()) EXPECT_DOUBLE_EQ(v, 0.5);
}

TEST(BuildVms, EmptyFalseVms) {
  const std::vector<vms::SessionLog> logs{one_trial("p1", TrialRole::Repeat, 90, {{0, 0, 1, 1}})};
  EXPECT_THROW(vms::build_vms(logs, "img", VmsKind::False), vms::EmptyVmsError);
}

TEST(BuildVms, ThresholdAndInclusivity) {
  const std::vector<vms::SessionLog> logs{one_trial("p1", TrialRole::Repeat, 40, {{0, 0, 0.5, 1}}),
                                          one_trial("p2", TrialRole::Repeat, 35, {{0.5, 0, 1, 1}})};
  const auto m = vms::build_vms(logs, "img", VmsKind::True, {.grid = {4, 1}});
  EXPECT_EQ(m.at(0, 0), 1.0);
  EXPECT_EQ(m.at(3, 0), 0.0);
  EXPECT_THROW(vms::build_vms(logs, "img", VmsKind::True, {.grid = {4, 1}, .inclusive = false}),
               vms::EmptyVmsError);
}

TEST(BuildVms, RejectsBadThreshold) {
  const std::vector<vms::SessionLog> logs{one_trial("p1", TrialRole::Repeat, 90, {{0, 0, 1, 1}})};
  EXPECT_THROW(vms::build_vms(logs, "img", VmsKind::True, {.threshold = 20}), vms::ValidationError);
}

class BuildVmsProperties : public ::testing::Test {
 protected:
  void SetUp() override {
    study_ = synth::observer_study({.n_observers = 16, .n_images = 8, .seed = 4, .shared_schema = false});
  }
  synth::ObserverStudy study_;
};

TEST_F(BuildVmsProperties, ValuesInUnitInterval) {
  for (int i = 0; i < 8; ++i) {
    for (auto kind : {VmsKind::True, VmsKind::False, VmsKind::Combined}) {
      try {
        const auto m = vms::build_vms(study_.logs, synth::image_id(i), kind, {.grid = {25, 25}});
        EXPECT_GE(m.min(), 0.0);
        EXPECT_LE(m.max(), 1.0);
      } catch (const vms::EmptyVmsError&) {
      }
    }
  }
}

TEST_F(BuildVmsProperties, OrderInvariant) {
  auto reversed = study_.logs;
  std::reverse(reversed.begin(), reversed.end());
  for (int i = 0; i < 8; ++i) {
    const auto id = synth::image_id(i);
    EXPECT_EQ(vms::build_vms(study_.logs, id, VmsKind::Combined, {.grid = {30, 20}}),
              vms::build_vms(reversed, id, VmsKind::Combined, {.grid = {30, 20}}));
  }
}

TEST_F(BuildVmsProperties, CombinedNumeratorIsSumOfRoles) {
  const vms::VmsOptions opt{.grid = {20, 20}};
  for (int i = 0; i < 8; ++i) {
    const auto id = synth::image_id(i);
    const auto t = vms::accumulate_vms(study_.logs, id, VmsKind::True, opt);
    const auto f = vms::accumulate_vms(study_.logs, id, VmsKind::False, opt);
    const auto c = vms::accumulate_vms(study_.logs, id, VmsKind::Combined, opt);
    EXPECT_EQ(c.contributors, t.contributors + f.contributors);
    for (std::size_t k = 0; k < c.numerator.size(); ++k) {
      ASSERT_EQ(c.numerator[k], t.numerator[k] + f.numerator[k]);
    }
  }
}

TEST_F(BuildVmsProperties, SingleParticipantEqualsUnionMask) {
  for (const auto& log : study_.logs) {
    for (const auto& t : log.test_trials) {
      if (t.confidence < vms::kDefaultAnalysisThreshold || t.role != TrialRole::Repeat) continue;
      const std::vector<vms::SessionLog> one{log};
      const auto m = vms::build_vms(one, t.image_id, VmsKind::True, {.grid = {40, 40}});
      ASSERT_EQ(m, union_oracle(t.selections, {40, 40}));
    }
  }
}

TEST_F(BuildVmsProperties, IndexMatchesDirectBuild) {
  const vms::VmsIndex index(study_.logs, {.grid = {20, 20}});
  std::vector<std::uint8_t> half(study_.logs.size(), 0);
  for (std::size_t k = 0; k < half.size(); k += 2) half[k] = 1;
  std::vector<vms::SessionLog> subset;
  for (std::size_t k = 0; k < half.size(); ++k) {
    if (half[k]) subset.push_back(study_.logs[k]);
  }
  for (int i = 0; i < 8; ++i) {
    const auto id = synth::image_id(i);
    const auto a = index.build(id, VmsKind::Combined, half);
    try {
      const auto b = vms::build_vms(subset, id, VmsKind::Combined, {.grid = {20, 20}});
      ASSERT_TRUE(a.has_value());
      EXPECT_EQ(*a, b);
    } catch (const vms::EmptyVmsError&) {
      EXPECT_FALSE(a.has_value());
    }
  }
}

// ---------------------------------------------------------------------------

TEST(MapGrid, RejectsNegativeAndNonFinite) {
  EXPECT_THROW(MapGrid({2, 1}, std::vector<double>{0.1, -0.1}), vms::ValidationError);
  EXPECT_THROW(MapGrid({2, 1}, std::vector<double>{0.1, NAN}), vms::ValidationError);
  EXPECT_THROW(MapGrid({2, 2}, std::vector<double>{0.1}), vms::ValidationError);
}

TEST(MapGrid, PopulationMoments) {
  const MapGrid m({4, 1}, std::vector<double>{1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(m.mean(), 2.5);
  EXPECT_DOUBLE_EQ(m.stddev(), std::sqrt(1.25));
}

TEST(ResizeMap, ConstantMapShrinks) {
  const MapGrid m({700, 700}, 0.5);
  const auto r = vms::resize_map(m, {20, 20});
  for (double v : r.values()) EXPECT_NEAR(v, 0.5, 1e-12);
}

TEST(ResizeMap, QuadrantBlocks) {
  MapGrid m({4, 4});
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) m.at(x, y) = (y < 2 ? 0.1 : 0.3) + (x < 2 ? 0.0 : 0.5);
  }
  const auto r = vms::resize_map(m, {2, 2});
  EXPECT_NEAR(r.at(0, 0), 0.1, 1e-15);
  EXPECT_NEAR(r.at(1, 0), 0.6, 1e-15);
  EXPECT_NEAR(r.at(0, 1), 0.3, 1e-15);
  EXPECT_NEAR(r.at(1, 1), 0.8, 1e-15);
}

TEST(ResizeMap, HalvingMatchesBlockSumOracle) {
  vms::CounterRng rng(17);
  const auto m = synth::random_map(rng, {100, 100});
  const auto r = vms::resize_map(m, {50, 50});
  for (int y = 0; y < 50; ++y) {
    for (int x = 0; x < 50; ++x) {
      const double block =
          (m.at(2 * x, 2 * y) + m.at(2 * x + 1, 2 * y) + m.at(2 * x, 2 * y + 1) + m.at(2 * x + 1, 2 * y + 1)) / 4;
      ASSERT_NEAR(r.at(x, y), block, 1e-12);
    }
  }
  EXPECT_LT(std::abs(r.mean() - m.mean()), 1e-6);
}

TEST(ResizeMap, RangePreservedEitherDirection) {
  vms::CounterRng rng(18);
  for (int i = 0; i < 50; ++i) {
    const GridDims src{1 + static_cast<int>(rng.below(40)), 1 + static_cast<int>(rng.below(40))};
    const GridDims dst{1 + static_cast<int>(rng.below(40)), 1 + static_cast<int>(rng.below(40))};
    const auto m = synth::random_map(rng, src);
    const auto r = vms::resize_map(m, dst);
    EXPECT_GE(r.min(), m.min() - 1e-12);
    EXPECT_LE(r.max(), m.max() + 1e-12);
  }
}

TEST(ResizeMap, UpsampleIsBilinearAndCentreAligned) {
  const MapGrid m({2, 1}, std::vector<double>{0.0, 1.0});
  const auto r = vms::resize_map(m, {4, 1});
  EXPECT_NEAR(r.at(0, 0), 0.0, 1e-12);
  EXPECT_NEAR(r.at(1, 0), 0.25, 1e-12);
  EXPECT_NEAR(r.at(2, 0), 0.75, 1e-12);
  EXPECT_NEAR(r.at(3, 0), 1.0, 1e-12);
}

TEST(MapGrid, TensorRoundTrip) {
  vms::CounterRng rng(2);
  const auto m = synth::random_map(rng, {7, 3});
  const auto t = m.to_tensor();
  ASSERT_EQ(t.dims, (std::vector<std::uint32_t>{3, 7}));
  const auto back = MapGrid::from_tensor(t);
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_FLOAT_EQ(back.values()[i], m.values()[i]);
}

}  // namespace

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "synth.hpp"
#include "vms/errors.hpp"
#include "vms/memstats.hpp"

namespace {

using vms::MapGrid;
using vms::TrialRole;

vms::SessionLog ratings_log(const std::string& pid, const std::vector<std::pair<std::string, int>>& repeat,
                            const std::vector<std::pair<std::string, int>>& filler) {
  vms::SessionLog log;
  log.session_id = "s" + pid;
  log.participant_id = pid;
  for (const auto& [id, c] : repeat) log.test_trials.push_back(synth::trial(id, TrialRole::Repeat, c));
  for (const auto& [id, c] : filler) log.test_trials.push_back(synth::trial(id, TrialRole::Filler, c));
  return log;
}

// ---------------------------------------------------------------------------
// rates

TEST(Rates, HandCount) {
  std::vector<vms::SessionLog> logs;
  int k = 0;
  for (int c : {45, 50, 10, 20}) logs.push_back(ratings_log("p" + std::to_string(k++), {{"a", c}}, {}));
  const auto r = vms::rates(logs, "a", {.threshold = 40});
  ASSERT_TRUE(r.hr);
  EXPECT_DOUBLE_EQ(*r.hr, 0.5);
  EXPECT_FALSE(r.far.has_value());
  EXPECT_EQ(r.n_repeat_showings, 4);
  EXPECT_EQ(r.n_filler_showings, 0);
}

TEST(Rates, BoundaryIsInclusiveByDefault) {
  const std::vector<vms::SessionLog> logs{ratings_log("p", {{"a", 40}}, {{"b", 40}})};
  EXPECT_EQ(*vms::rates(logs, "a").hr, 1.0);
  EXPECT_EQ(*vms::rates(logs, "b").far, 1.0);
  EXPECT_EQ(*vms::rates(logs, "a", {.threshold = 40, .inclusive = false}).hr, 0.0);
}

TEST(Rates, PermutationInvariantAndIntegral) {
  auto study = synth::observer_study({.n_observers = 20, .n_images = 12, .seed = 9});
  auto shuffled = study.logs;
  vms::CounterRng rng(1);
  vms::fisher_yates(std::span<vms::SessionLog>(shuffled), rng);
  for (int i = 0; i < 12; ++i) {
    const auto id = synth::image_id(i);
    for (int t : {0, 30, 40, 55, 100}) {
      const auto a = vms::rates(study.logs, id, {.threshold = t});
      const auto b = vms::rates(shuffled, id, {.threshold = t});
      ASSERT_EQ(a.hr, b.hr);
      ASSERT_EQ(a.far, b.far);
      const double h = *a.hr * a.n_repeat_showings;
      EXPECT_NEAR(h, std::round(h), 1e-9);
    }
  }
}

TEST(Rates, IndexAgreesWithDirectCount) {
  const auto study = synth::observer_study({.n_observers = 10, .n_images = 6, .seed = 2});
  const vms::RatingIndex index(study.logs);
  for (int i = 0; i < 6; ++i) {
    const auto id = synth::image_id(i);
    for (int t = 0; t <= 100; t += 7) {
      int hits = 0, n = 0;
      for (const auto& log : study.logs) {
        for (const auto& tr : log.test_trials) {
          if (tr.image_id == id && tr.role == TrialRole::Repeat) {
            ++n;
            hits += tr.confidence >= t;
          }
        }
      }
      EXPECT_EQ(index.rates(id, {.threshold = t}).hits, hits);
      EXPECT_EQ(index.rates(id, {.threshold = t}).n_repeat_showings, n);
    }
  }
}

// ---------------------------------------------------------------------------
// spearman / threshold selection

TEST(Spearman, HandExamples) {
  const std::vector<double> x{1, 2, 3, 4};
  EXPECT_NEAR(vms::spearman(x, x), 1.0, 1e-15);
  const std::vector<double> r{4, 3, 2, 1};
  EXPECT_NEAR(vms::spearman(x, r), -1.0, 1e-15);
  const std::vector<double> y{1, 2, 4, 3};
  EXPECT_NEAR(vms::spearman(x, y), 0.8, 1e-15);
}

TEST(Spearman, TiesGetMeanRanks) {
  const std::vector<double> x{10, 20, 20, 30};
  const auto r = vms::average_ranks(x);
  EXPECT_EQ(r, (std::vector<double>{1, 2.5, 2.5, 4}));
}

TEST(Spearman, Errors) {
  const std::vector<double> a{1, 1, 1, 1}, b{1, 2, 3, 4}, c{1, 2};
  EXPECT_THROW(vms::spearman(a, b), vms::DegenerateInputError);
  EXPECT_THROW(vms::spearman(c, c), vms::Error);
  EXPECT_THROW(vms::spearman(b, c), vms::Error);
}

// Builds per-image HR/FAR patterns by hand: image i has `hits[i]` of 10
// repeats rated 60 and `fas_low[i]` fillers rated 35 plus `fas_high[i]` rated 90.
std::vector<vms::SessionLog> planted_logs(const std::vector<int>& hits, const std::vector<int>& fa_low,
                                          const std::vector<int>& fa_high) {
  std::vector<vms::SessionLog> logs(10);
  for (int p = 0; p < 10; ++p) {
    logs[p].session_id = "s" + std::to_string(p);
    logs[p].participant_id = "p" + std::to_string(p);
    for (std::size_t i = 0; i < hits.size(); ++i) {
      const auto id = synth::image_id(static_cast<int>(i));
      logs[p].test_trials.push_back(synth::trial(id + "r", TrialRole::Repeat, p < hits[i] ? 60 : 5));
      int c = 5;
      if (p < fa_low[i]) {
        c = 35;
      } else if (p < fa_low[i] + fa_high[i]) {
        c = 90;
      }
      logs[p].test_trials.push_back(synth::trial(id + "f", TrialRole::Filler, c));
    }
  }
  // HR and FAR must refer to the same image ids.
  for (auto& log : logs) {
    for (auto& t : log.test_trials) t.image_id.pop_back();
  }
  return logs;
}

TEST(SelectThreshold, FloorCase) {
  // FAR falls as HR rises at every threshold, so rho(30) < 0.
  const auto logs = planted_logs({1, 3, 5, 7, 9}, {0, 0, 0, 0, 0}, {4, 3, 2, 1, 0});
  const auto sel = vms::select_threshold(logs);
  EXPECT_EQ(sel.threshold, 30);
  EXPECT_EQ(sel.curve.front().threshold, 30);
  EXPECT_EQ(sel.curve.back().threshold, 100);
}

TEST(SelectThreshold, CurveMatchesDirectOracle) {
  const auto study = synth::observer_study({.n_observers = 40, .n_images = 64, .seed = 31});
  const auto sel = vms::select_threshold(study.logs);
  for (const auto& pt : sel.curve) {
    std::vector<double> hr, far;
    for (int i = 0; i < 64; ++i) {
      int h = 0, nr = 0, f = 0, nf = 0;
      for (const auto& log : study.logs) {
        for (const auto& t : log.test_trials) {
          if (t.image_id != synth::image_id(i)) continue;
          if (t.role == TrialRole::Repeat) {
            ++nr;
            h += t.confidence >= pt.threshold;
          } else {
            ++nf;
            f += t.confidence >= pt.threshold;
          }
        }
      }
      hr.push_back(static_cast<double>(h) / nr);
      far.push_back(static_cast<double>(f) / nf);
    }
    try {
      const double rho = vms::pearson(vms::average_ranks(hr), vms::average_ranks(far));
      ASSERT_TRUE(pt.rho.has_value()) << pt.threshold;
      EXPECT_NEAR(*pt.rho, rho, 1e-12);
    } catch (const vms::DegenerateInputError&) {
      EXPECT_FALSE(pt.rho.has_value());
    }
  }
  ASSERT_TRUE(sel.curve[sel.threshold - 30].rho.has_value());
  EXPECT_LT(*sel.curve[sel.threshold - 30].rho, 0.01);
  for (int t = 30; t < sel.threshold; ++t) {
    const auto& r = sel.curve[t - 30].rho;
    EXPECT_TRUE(!r || *r >= 0.01) << t;
  }
}

TEST(SelectThreshold, NoQualifyingThreshold) {
  // FAR tracks HR at every threshold.
  const auto logs = planted_logs({1, 3, 5, 7, 9}, {0, 0, 0, 0, 0}, {1, 2, 3, 4, 5});
  EXPECT_THROW(vms::select_threshold(logs), vms::DegenerateInputError);
}

TEST(SelectThreshold, TooFewImages) {
  const auto logs = planted_logs({1, 3}, {0, 0}, {1, 0});
  EXPECT_THROW(vms::select_threshold(logs), vms::Error);
}

// ---------------------------------------------------------------------------
// detection

TEST(Detection, InverseNormalKnownValues) {
  EXPECT_NEAR(vms::inverse_normal_cdf(0.5), 0.0, 1e-15);
  EXPECT_NEAR(vms::inverse_normal_cdf(0.975), 1.959963984540054, 1e-12);
  EXPECT_NEAR(vms::inverse_normal_cdf(0.025), -1.959963984540054, 1e-12);
  EXPECT_NEAR(vms::inverse_normal_cdf(1e-10), -6.361340902404056, 1e-9);
  for (double p = 0.001; p < 1.0; p += 0.013) {
    const double z = vms::inverse_normal_cdf(p);
    EXPECT_NEAR(0.5 * std::erfc(-z / std::sqrt(2.0)), p, 1e-14);
  }
}

TEST(Detection, DPrimeClamping) {
  // HR = 1 with N = 10 clamps to 0.95; FAR = 0 clamps to 0.05.
  const double d = vms::d_prime(1.0, 0.0, 10, 10);
  EXPECT_NEAR(d, 2 * vms::inverse_normal_cdf(0.95), 1e-12);
}

TEST(Detection, SeparableRatings) {
  std::vector<vms::SessionLog> logs;
  for (int p = 0; p < 5; ++p) logs.push_back(ratings_log("p" + std::to_string(p), {{"a", 90}}, {{"b", 5}}));
  const auto d = vms::detection_summary(logs);
  EXPECT_DOUBLE_EQ(d.auc, 1.0);
  EXPECT_EQ(d.roc.size(), 101u);
}

TEST(Detection, IdenticalRatingsWarn) {
  std::vector<vms::SessionLog> logs;
  for (int p = 0; p < 5; ++p) logs.push_back(ratings_log("p" + std::to_string(p), {{"a", 50}}, {{"b", 50}}));
  const auto d = vms::detection_summary(logs);
  EXPECT_DOUBLE_EQ(d.auc, 0.5);
  EXPECT_FALSE(d.warnings.empty());
}

TEST(Detection, MissingRole) {
  const std::vector<vms::SessionLog> logs{ratings_log("p", {{"a", 50}}, {})};
  EXPECT_THROW(vms::detection_summary(logs), vms::ValidationError);
}

TEST(Detection, RoleIndependentRatingsGiveChanceAuc) {
  vms::CounterRng rng(8);
  std::vector<vms::SessionLog> logs;
  for (int p = 0; p < 100; ++p) {
    std::vector<std::pair<std::string, int>> rep, fil;
    for (int i = 0; i < 50; ++i) {
      rep.push_back({"r" + std::to_string(i), static_cast<int>(rng.below(101))});
      fil.push_back({"f" + std::to_string(i), static_cast<int>(rng.below(101))});
    }
    logs.push_back(ratings_log("p" + std::to_string(p), rep, fil));
  }
  EXPECT_NEAR(vms::detection_summary(logs).auc, 0.5, 0.02);
}

TEST(Detection, RocMonotoneAndAucMatchesTrapezoidOracle) {
  const auto study = synth::observer_study({.n_observers = 30, .n_images = 20, .seed = 6});
  const auto d = vms::detection_summary(study.logs);
  for (std::size_t t = 1; t < d.roc.size(); ++t) {
    EXPECT_LE(d.roc[t].hr, d.roc[t - 1].hr);
    EXPECT_LE(d.roc[t].far, d.roc[t - 1].far);
  }
  std::vector<std::pair<double, double>> pts{{0, 0}, {1, 1}};
  for (const auto& p : d.roc) pts.push_back({p.far, p.hr});
  std::sort(pts.begin(), pts.end());
  double area = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    area += (pts[i].first - pts[i - 1].first) * (pts[i].second + pts[i - 1].second) / 2;
  }
  EXPECT_NEAR(d.auc, area, 1e-12);
  EXPECT_GT(d.auc, 0.5);
}

// ---------------------------------------------------------------------------
// map similarity

TEST(Pearson2d, IdentityAndNegation) {
  vms::CounterRng rng(1);
  const auto a = synth::random_map(rng, {30, 20});
  EXPECT_NEAR(vms::pearson2d(a, a), 1.0, 1e-12);
  std::vector<double> neg(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) neg[i] = 2.0 - a.values()[i];
  EXPECT_NEAR(vms::pearson2d(a, MapGrid(a.dims(), neg)), -1.0, 1e-12);
}

TEST(Pearson2d, MatchesEquationWithPopulationMoments) {
  vms::CounterRng rng(3);
  const auto a = synth::random_map(rng, {9, 7});
  const auto b = synth::random_map(rng, {9, 7});
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a.values()[i];
    mb += b.values()[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a.values()[i] - ma) * (b.values()[i] - mb);
    saa += (a.values()[i] - ma) * (a.values()[i] - ma);
    sbb += (b.values()[i] - mb) * (b.values()[i] - mb);
  }
  const double expected = (sab / n) / (std::sqrt(saa / n) * std::sqrt(sbb / n));
  EXPECT_NEAR(vms::pearson2d(a, b), expected, 1e-12);
}

TEST(Pearson2d, IndependentMapsAreNearZero) {
  vms::CounterRng rng(4);
  for (int i = 0; i < 10; ++i) {
    EXPECT_LT(std::abs(vms::pearson2d(synth::random_map(rng, {100, 100}), synth::random_map(rng, {100, 100}))),
              0.03);
  }
}

TEST(Pearson2d, Errors) {
  const MapGrid c({5, 5}, 0.3);
  vms::CounterRng rng(5);
  const auto a = synth::random_map(rng, {5, 5});
  EXPECT_THROW(vms::pearson2d(a, c), vms::DegenerateInputError);
  EXPECT_THROW(vms::pearson2d(a, synth::random_map(rng, {5, 4})), vms::ValidationError);
}

TEST(MutualInformation, SelfInformationIsEntropy) {
  vms::CounterRng rng(6);
  const auto a = synth::random_map(rng, {50, 50});
  EXPECT_EQ(vms::mutual_information(a, a), vms::binned_entropy(a));
  EXPECT_NEAR(vms::binned_entropy(a), 5.0, 0.05);  // near-uniform over 32 bins
}

TEST(MutualInformation, ComplementHasFullInformation) {
  // Values on bin centres so that 1 - a stays on bin centres.
  vms::CounterRng rng(7);
  std::vector<double> v(400), w(400);
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = (static_cast<double>(rng.below(32)) + 0.5) / 32.0;
    w[i] = 1.0 - v[i];
  }
  const MapGrid a({20, 20}, v), b({20, 20}, w);
  EXPECT_NEAR(vms::mutual_information(a, b), vms::binned_entropy(a), 1e-12);
}

TEST(MutualInformation, IndependentMapsCarryLittle) {
  vms::CounterRng rng(8);
  const auto a = synth::random_map(rng, {100, 100});
  const auto b = synth::random_map(rng, {100, 100});
  EXPECT_LT(vms::mutual_information(a, b), 0.08);
}

TEST(MutualInformation, MatchesJointHistogramOracle) {
  vms::CounterRng rng(9);
  const auto a = synth::random_map(rng, {16, 16});
  std::vector<double> w(a.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::min(1.0, a.values()[i] * 0.5 + 0.5 * rng.uniform());
  const MapGrid b(a.dims(), w);
  const int bins = 8;
  std::vector<double> pa(bins), pb(bins), pab(bins * bins);
  auto bin = [&](double v) { return std::min(bins - 1, static_cast<int>(v * bins)); };
  const double n = static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int x = bin(a.values()[i]), y = bin(b.values()[i]);
    pa[x] += 1 / n;
    pb[y] += 1 / n;
    pab[x * bins + y] += 1 / n;
  }
  double mi = 0;
  for (int x = 0; x < bins; ++x) {
    for (int y = 0; y < bins; ++y) {
      const double p = pab[x * bins + y];
      if (p > 0) mi += p * std::log2(p / (pa[x] * pb[y]));
    }
  }
  EXPECT_NEAR(vms::mutual_information(a, b, bins), mi, 1e-12);
}

TEST(MutualInformation, RejectsOutOfRange) {
  const MapGrid a({2, 1}, std::vector<double>{0.5, 1.5});
  EXPECT_THROW(vms::mutual_information(a, a), vms::ValidationError);
}

// ---------------------------------------------------------------------------
// consistency, bootstrap, comparisons

TEST(Consistency, NoiseFreeSharedRegionIsPerfect) {
  auto study = synth::observer_study({.n_observers = 20, .n_images = 10, .seed = 3, .jitter = 0.0});
  vms::ConsistencyOptions opt;
  opt.n_splits = 5;
  opt.seed = 1;
  const auto rep = vms::split_half_consistency(study.logs, {}, vms::VmsKind::True, vms::MapMetric::Pearson2d, opt);
  EXPECT_NEAR(rep.mean, 1.0, 1e-12);
  EXPECT_EQ(rep.histogram.total(), static_cast<int>(rep.per_image.size()));
}

TEST(Consistency, DeterministicGivenSeed) {
  const auto study = synth::observer_study({.n_observers = 12, .n_images = 8, .seed = 4, .shared_schema = false});
  vms::ConsistencyOptions opt;
  opt.n_splits = 4;
  opt.seed = 9;
  opt.vms.grid = {20, 20};
  const auto a = vms::split_half_consistency(study.logs, {}, vms::VmsKind::Combined, vms::MapMetric::Pearson2d, opt);
  const auto b = vms::split_half_consistency(study.logs, {}, vms::VmsKind::Combined, vms::MapMetric::Pearson2d, opt);
  EXPECT_EQ(a.per_image, b.per_image);
  auto reversed = study.logs;
  std::reverse(reversed.begin(), reversed.end());
  const auto c = vms::split_half_consistency(reversed, {}, vms::VmsKind::Combined, vms::MapMetric::Pearson2d, opt);
  EXPECT_EQ(a.per_image, c.per_image);
}

TEST(Consistency, NeedsTwoParticipants) {
  const auto study = synth::observer_study({.n_observers = 1, .n_images = 4, .seed = 4});
  EXPECT_THROW(vms::split_half_consistency(study.logs, {}, vms::VmsKind::True, vms::MapMetric::Pearson2d, {}),
               vms::ValidationError);
}

TEST(Bootstrap, IdenticalSamplesNotSignificant) {
  std::vector<double> a(50);
  vms::CounterRng rng(1);
  for (auto& v : a) v = rng.uniform();
  const auto r = vms::bootstrap_diff_test(a, a, {.n_boot = 2000, .seed = 3});
  EXPECT_FALSE(r.significant);
  EXPECT_LE(r.ci_low, 0.0);
  EXPECT_GE(r.ci_high, 0.0);
}

TEST(Bootstrap, ShiftedSamplesSignificantWithAnalyticCi) {
  vms::CounterRng rng(2);
  std::vector<double> a(100), b(100);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = rng.uniform();
    b[i] = a[i] - 1.0 + 0.1 * rng.normal();
  }
  const auto r = vms::bootstrap_diff_test(a, b, {.n_boot = 10000, .seed = 4});
  EXPECT_TRUE(r.significant);
  // Normal-theory interval for a mean of 100 differences with sd ~0.1.
  EXPECT_NEAR(r.ci_low, r.mean_difference - 1.96 * 0.01, 0.006);
  EXPECT_NEAR(r.ci_high, r.mean_difference + 1.96 * 0.01, 0.006);
  EXPECT_EQ(r.opposite_sign_fraction, 0.0);
}

TEST(Bootstrap, DeterministicAndValidated) {
  std::vector<double> a(20, 0.0), b(20, 0.0);
  for (int i = 0; i < 20; ++i) a[i] = i * 0.1;
  const auto r1 = vms::bootstrap_diff_test(a, b, {.n_boot = 500, .seed = 5});
  const auto r2 = vms::bootstrap_diff_test(a, b, {.n_boot = 500, .seed = 5});
  EXPECT_EQ(r1.ci_low, r2.ci_low);
  EXPECT_EQ(r1.ci_high, r2.ci_high);
  std::vector<double> short_a(5, 1.0);
  EXPECT_THROW(vms::bootstrap_diff_test(short_a, short_a), vms::ValidationError);
  std::vector<double> c(19, 1.0);
  EXPECT_THROW(vms::bootstrap_diff_test(a, c), vms::ValidationError);
}

TEST(CompareMapSets, SelfComparisonAndOmissions) {
  vms::CounterRng rng(10);
  std::map<std::string, MapGrid> first, second;
  for (int i = 0; i < 5; ++i) first.emplace(synth::image_id(i), synth::random_map(rng, {20, 20}));
  second = first;
  second.erase(synth::image_id(4));
  second.emplace("extra", synth::random_map(rng, {20, 20}));
  const auto r = vms::compare_map_sets(first, second, vms::MapMetric::Pearson2d);
  EXPECT_NEAR(r.mean, 1.0, 1e-12);
  EXPECT_EQ(r.per_image.size(), 4u);
  EXPECT_EQ(r.omitted.size(), 2u);
}

TEST(CompareMapSets, HarmonizesDims) {
  MapGrid big({100, 100}), small({20, 20});
  for (int y = 0; y < 100; ++y) {
    for (int x = 0; x < 100; ++x) big.at(x, y) = x < 50 ? 1.0 : 0.0;
  }
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 20; ++x) small.at(x, y) = x < 10 ? 1.0 : 0.0;
  }
  const auto r = vms::compare_map_sets({{"a", big}}, {{"a", small}}, vms::MapMetric::Pearson2d, {.grid = {20, 20}});
  EXPECT_NEAR(r.per_image.at("a"), 1.0, 1e-12);
}

TEST(CompareMapSets, DisjointIdsAreAnError) {
  vms::CounterRng rng(11);
  EXPECT_THROW(vms::compare_map_sets({{"a", synth::random_map(rng, {4, 4})}}, {{"b", synth::random_map(rng, {4, 4})}},
                                     vms::MapMetric::Pearson2d),
               vms::ValidationError);
}

// ---------------------------------------------------------------------------
// categories

vms::DatasetManifest two_leaf_manifest(int per_leaf) {
  nlohmann::json images = nlohmann::json::array();
  const auto leaves = vms::CategoryTree::vischema().leaves();
  int k = 0;
  for (const auto& leaf : leaves) {
    for (int i = 0; i < per_leaf; ++i) {
      images.push_back({{"id", synth::image_id(k++)},
                        {"category", {leaf.supra, leaf.mid, leaf.leaf}},
                        {"width", 10},
                        {"height", 10}});
    }
  }
  return vms::parse_manifest(nlohmann::json{{"images", images}}.dump(), ".");
}

TEST(CategoryStats, PlantedLeafMeans) {
  const auto manifest = two_leaf_manifest(2);
  std::vector<vms::SessionLog> logs;
  for (int p = 0; p < 10; ++p) {
    std::vector<std::pair<std::string, int>> rep, fil;
    for (int i = 0; i < 16; ++i) {
      const bool indoor = i < 8;
      const int hits = indoor ? 2 : 8;  // HR 0.2 indoors, 0.8 outdoors
      rep.push_back({synth::image_id(i), p < hits ? 70 : 10});
    }
    logs.push_back(ratings_log("p" + std::to_string(p), rep, fil));
  }
  const auto stats = vms::category_stats(logs, manifest);
  for (const auto& s : stats) {
    if (s.level == vms::CategoryLevel::Supra) {
      EXPECT_NEAR(s.mean_hr, s.name == "Indoor" ? 0.2 : 0.8, 1e-12) << s.name;
      EXPECT_NEAR(s.stddev_hr, 0.0, 1e-12);
      EXPECT_EQ(s.n_images, 8);
    }
  }
}

TEST(CategoryStats, EmptyCategoryIsAnError) {
  auto manifest = two_leaf_manifest(1);
  manifest.images.pop_back();
  std::vector<vms::SessionLog> logs{ratings_log("p", {{synth::image_id(0), 50}}, {})};
  EXPECT_THROW(vms::category_stats(logs, manifest), vms::ValidationError);
}

TEST(ErrorEllipse, MatchesEigenOracle) {
  vms::CounterRng rng(12);
  std::vector<double> x(100), y(100);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.normal();
    y[i] = 0.5 * x[i] + 0.3 * rng.normal();
  }
  const auto e = vms::error_ellipse(x, y, 3.0);
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / 100, my = std::accumulate(y.begin(), y.end(), 0.0) / 100;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Eigen::Vector2d d(x[i] - mx, y[i] - my);
    cov += d * d.transpose();
  }
  cov /= 99.0 * 100.0;  // covariance of the mean
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  EXPECT_NEAR(e.semi_major, 3.0 * std::sqrt(es.eigenvalues()(1)), 1e-12);
  EXPECT_NEAR(e.semi_minor, 3.0 * std::sqrt(es.eigenvalues()(0)), 1e-12);
  const Eigen::Vector2d major = es.eigenvectors().col(1);
  EXPECT_NEAR(std::abs(std::cos(e.angle_rad) * major(0) + std::sin(e.angle_rad) * major(1)), 1.0, 1e-9);
  EXPECT_NEAR(e.center_x, mx, 1e-15);
}

TEST(ErrorEllipse, IsotropicErrorsGiveThreeStandardErrors) {
  vms::CounterRng rng(13);
  std::vector<double> x(100), y(100);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = 0.1 * rng.normal();
    y[i] = 0.1 * rng.normal();
  }
  const auto e = vms::error_ellipse(x, y);
  EXPECT_NEAR(e.semi_major, 0.03, 0.008);
  EXPECT_NEAR(e.semi_minor, 0.03, 0.008);
}

}  // namespace

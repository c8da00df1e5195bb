#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <numeric>
#include <cmath>
#include <map>
#include <set>

#include "json.hpp"
#include "synth.hpp"
#include "vms/errors.hpp"
#include "vms/manifest.hpp"
#include "vms/rng.hpp"
#include "vms/schedule.hpp"
#include "vms/session.hpp"
#include "vms/tensor_io.hpp"

namespace {

using vms::TrialRole;

// Reference SplitMix64 written out longhand.
std::uint64_t splitmix_ref(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

TEST(CounterRng, MatchesSplitMix64) {
  for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 0xDEADBEEFULL}) {
    vms::CounterRng rng(seed);
    std::uint64_t state = seed;
    for (int i = 0; i < 100; ++i) ASSERT_EQ(rng.next(), splitmix_ref(state));
  }
}

TEST(CounterRng, BelowStaysInRangeAndCoversIt) {
  vms::CounterRng rng(3);
  std::vector<int> seen(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto v = rng.below(7);
    ASSERT_LT(v, 7u);
    ++seen[v];
  }
  for (int c : seen) EXPECT_GT(c, 850);
}

TEST(CounterRng, DeriveDoesNotAdvanceParent) {
  vms::CounterRng a(9), b(9);
  (void)a.derive(5);
  EXPECT_EQ(a.next(), b.next());
  EXPECT_NE(a.derive(1).next(), a.derive(2).next());
}

TEST(CounterRng, FisherYatesIsAPermutationAndSeeded) {
  std::vector<int> v(50), w;
  std::iota(v.begin(), v.end(), 0);
  w = v;
  vms::CounterRng r1(8), r2(8);
  vms::fisher_yates(std::span<int>(v), r1);
  vms::fisher_yates(std::span<int>(w), r2);
  EXPECT_EQ(v, w);
  std::set<int> s(v.begin(), v.end());
  EXPECT_EQ(s.size(), 50u);
}

TEST(CounterRng, NormalHasUnitMoments) {
  vms::CounterRng rng(12);
  double s = 0, s2 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.03);
  EXPECT_NEAR(s2 / n, 1.0, 0.05);
}

// ---------------------------------------------------------------------------

TEST(TensorIo, HeaderLayoutIsLittleEndian) {
  const vms::Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  const auto bytes = vms::encode_tensor(t);
  ASSERT_EQ(bytes.size(), 4u + 3u + 2 * 4u + 6 * 4u);
  EXPECT_EQ(bytes.substr(0, 4), "VTNS");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 0);
  EXPECT_EQ(bytes[6], 2);
  EXPECT_EQ(static_cast<unsigned char>(bytes[7]), 2);
  EXPECT_EQ(bytes[8], 0);
  EXPECT_EQ(static_cast<unsigned char>(bytes[11]), 3);
  // 1.0f = 0x3F800000, LE.
  EXPECT_EQ(static_cast<unsigned char>(bytes[15]), 0x00);
  EXPECT_EQ(static_cast<unsigned char>(bytes[18]), 0x3F);
}

TEST(TensorIo, SingleElementRoundTrip) {
  synth::TempDir dir("tensor1");
  const vms::Tensor t({1}, {3.5f});
  vms::write_tensor(dir.path() / "t.vtns", t);
  EXPECT_EQ(vms::read_tensor(dir.path() / "t.vtns"), t);
}

TEST(TensorIo, LargeActivationRoundTrip) {
  vms::CounterRng rng(4);
  vms::Tensor t;
  t.dims = {14, 14, 512};
  t.data.resize(14 * 14 * 512);
  for (auto& v : t.data) v = static_cast<float>(rng.uniform(-3, 3));
  const auto back = vms::decode_tensor(vms::encode_tensor(t));
  EXPECT_EQ(back.dims, t.dims);
  EXPECT_EQ(0, std::memcmp(back.data.data(), t.data.data(), t.data.size() * 4));
}

TEST(TensorIo, RejectsCorruption) {
  const vms::Tensor t({4}, {1, 2, 3, 4});
  auto bytes = vms::encode_tensor(t);
  EXPECT_THROW(vms::decode_tensor(bytes.substr(0, bytes.size() - 2)), vms::FormatError);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(vms::decode_tensor(bad), vms::FormatError);
  bad = bytes;
  bad[4] = 2;
  EXPECT_THROW(vms::decode_tensor(bad), vms::FormatError);
  EXPECT_THROW(vms::decode_tensor(bytes + "xxxx"), vms::FormatError);
}

TEST(TensorIo, RejectsInvalidTensorsOnWrite) {
  synth::TempDir dir("tensorbad");
  EXPECT_THROW(vms::write_tensor(dir.path() / "a.vtns", vms::Tensor({2}, {1.0f, NAN})), vms::ValidationError);
  EXPECT_THROW(vms::write_tensor(dir.path() / "b.vtns", vms::Tensor({3}, {1.0f})), vms::ValidationError);
  EXPECT_THROW(vms::write_tensor(dir.path() / "c.vtns", vms::Tensor({0}, {})), vms::ValidationError);
  EXPECT_FALSE(std::filesystem::exists(dir.path() / "a.vtns"));
}

TEST(TensorIo, RandomRoundTripIsBitwise) {
  vms::CounterRng rng(99);
  for (int i = 0; i < 200; ++i) {
    const auto t = synth::random_tensor(rng, 512);
    const auto bytes = vms::encode_tensor(t);
    const auto back = vms::decode_tensor(bytes);
    ASSERT_EQ(back.dims, t.dims);
    ASSERT_EQ(0, std::memcmp(back.data.data(), t.data.data(), t.data.size() * 4));
    ASSERT_EQ(vms::encode_tensor(back), bytes);
  }
}

// ---------------------------------------------------------------------------

vms::SessionLog desk_log() {
  vms::SessionLog log;
  log.session_id = "desk-1";
  log.participant_id = "p1";
  log.schedule_seed = 7;
  log.test_trials = {synth::trial("a", TrialRole::Repeat, 80, {{0.1, 0.1, 0.5, 0.5}}),
                     synth::trial("x", TrialRole::Filler, 10),
                     synth::trial("b", TrialRole::Repeat, 35, {{0, 0, 1, 1}, {0.2, 0.2, 0.3, 0.3}}),
                     synth::trial("y", TrialRole::Filler, 29)};
  synth::add_study_phase(log);
  return log;
}

bool has_field(const vms::ValidationError& e, const std::string& needle) {
  for (const auto& f : e.errors()) {
    if (f.field.find(needle) != std::string::npos || f.message.find(needle) != std::string::npos) return true;
  }
  return false;
}

TEST(SessionLog, DeskScaleLogParses) {
  const auto log = desk_log();
  std::vector<std::string> warnings;
  const auto parsed = vms::parse_session_log(vms::serialize_session_log(log), {}, &warnings);
  int repeats = 0, fillers = 0;
  for (const auto& t : parsed.test_trials) (t.role == TrialRole::Repeat ? repeats : fillers)++;
  EXPECT_EQ(repeats, 2);
  EXPECT_EQ(fillers, 2);
  EXPECT_EQ(warnings.size(), 1u);  // counts below the full protocol
}

TEST(SessionLog, SerializeParseIsIdentity) {
  const auto study = synth::observer_study({.n_observers = 6, .n_images = 10, .seed = 3});
  for (const auto& log : study.logs) {
    EXPECT_EQ(vms::parse_session_log(vms::serialize_session_log(log)), log);
  }
}

TEST(SessionLog, ConfidenceOutOfRange) {
  auto log = desk_log();
  log.test_trials[0].confidence = 101;
  try {
    vms::parse_session_log(vms::serialize_session_log(log));
    FAIL();
  } catch (const vms::ValidationError& e) {
    EXPECT_TRUE(has_field(e, "test[0].confidence"));
    EXPECT_TRUE(has_field(e, "confidence out of range"));
  }
}

TEST(SessionLog, SelectionCount) {
  auto log = desk_log();
  log.test_trials[0].selections.assign(4, {0, 0, 0.5, 0.5});
  try {
    vms::validate_session_log(log);
    FAIL();
  } catch (const vms::ValidationError& e) {
    EXPECT_TRUE(has_field(e, "selection count"));
  }
}

TEST(SessionLog, SelectionGate) {
  auto log = desk_log();
  log.test_trials[1].selections = {{0, 0, 1, 1}};
  EXPECT_THROW(vms::validate_session_log(log), vms::ValidationError);
  log = desk_log();
  log.test_trials[0].selections.clear();
  EXPECT_THROW(vms::validate_session_log(log), vms::ValidationError);
}

TEST(SessionLog, BadRectangles) {
  auto log = desk_log();
  log.test_trials[0].selections = {{0.5, 0.1, 0.4, 0.2}};
  EXPECT_THROW(vms::validate_session_log(log), vms::ValidationError);
  log.test_trials[0].selections = {{0.1, 0.1, 1.2, 0.2}};
  EXPECT_THROW(vms::validate_session_log(log), vms::ValidationError);
}

TEST(SessionLog, ReportsEveryProblemAtOnce) {
  auto log = desk_log();
  log.test_trials[0].confidence = -3;
  log.test_trials[2].selections.assign(5, {0, 0, 1, 1});
  try {
    vms::validate_session_log(log);
    FAIL();
  } catch (const vms::ValidationError& e) {
    EXPECT_TRUE(has_field(e, "test[0]"));
    EXPECT_TRUE(has_field(e, "test[2]"));
  }
}

TEST(SessionLog, StrictProtocolCounts) {
  const auto log = desk_log();
  EXPECT_THROW(vms::validate_session_log(log, {.strict_protocol = true}), vms::ValidationError);
  EXPECT_NO_THROW(vms::validate_session_log(log, {.strict_protocol = false}));
}

TEST(SessionLog, MalformedDocuments) {
  EXPECT_THROW(vms::parse_session_log("not json"), vms::ValidationError);
  EXPECT_THROW(vms::parse_session_log(R"({"record":"test","image_id":"a"})"), vms::ValidationError);
  EXPECT_THROW(vms::parse_session_log(""), vms::ValidationError);
}

// ---------------------------------------------------------------------------

std::string manifest_json(int per_leaf, int short_leaf = -1) {
  nlohmann::json images = nlohmann::json::array();
  const auto leaves = vms::CategoryTree::vischema().leaves();
  int k = 0;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    const int count = static_cast<int>(l) == short_leaf ? per_leaf - 1 : per_leaf;
    for (int i = 0; i < count; ++i) {
      images.push_back({{"id", "im" + std::to_string(k++)},
                        {"category", {leaves[l].supra, leaves[l].mid, leaves[l].leaf}},
                        {"width", 640},
                        {"height", 480}});
    }
  }
  return nlohmann::json{{"images", images}}.dump();
}

TEST(Manifest, DefaultTreeHasEightLeaves) {
  EXPECT_EQ(vms::CategoryTree::vischema().leaves().size(), 8u);
}

TEST(Manifest, RejectsDuplicatesAndUnknownCategories) {
  const std::string dup = R"({"images":[{"id":"a","category":["Indoor","Private","kitchen"],"width":1,"height":1},
                                        {"id":"a","category":["Indoor","Private","kitchen"],"width":1,"height":1}]})";
  EXPECT_THROW(vms::parse_manifest(dup, "."), vms::ValidationError);
  const std::string unknown = R"({"images":[{"id":"a","category":["Indoor","Private","garage"],"width":1,"height":1}]})";
  EXPECT_THROW(vms::parse_manifest(unknown, "."), vms::ValidationError);
  const std::string zero = R"({"images":[{"id":"a","category":["Indoor","Private","kitchen"],"width":0,"height":1}]})";
  EXPECT_THROW(vms::parse_manifest(zero, "."), vms::ValidationError);
}

TEST(Manifest, MissingAttachmentIsReported) {
  const std::string text =
      R"({"images":[{"id":"a","category":["Indoor","Private","kitchen"],"width":1,"height":1,"saliency":"nope.vtns"}]})";
  EXPECT_THROW(vms::parse_manifest(text, "/nonexistent"), vms::ValidationError);
  EXPECT_NO_THROW(vms::parse_manifest(text, "/nonexistent", {.check_files = false}));
}

TEST(Manifest, SerializeRoundTrip) {
  const auto m = vms::parse_manifest(manifest_json(3), "/data");
  const auto again = vms::parse_manifest(vms::serialize_manifest(m, "/data"), "/data");
  ASSERT_EQ(again.images.size(), m.images.size());
  for (std::size_t i = 0; i < m.images.size(); ++i) {
    EXPECT_EQ(again.images[i].id, m.images[i].id);
    EXPECT_EQ(again.images[i].category, m.images[i].category);
  }
}

// ---------------------------------------------------------------------------

TEST(Schedule, FullProtocolCounts) {
  const auto m = vms::parse_manifest(manifest_json(100), ".");
  const auto s = vms::generate_schedule(m, 7);
  EXPECT_EQ(s.study.size(), 400u);
  EXPECT_EQ(s.test.size(), 400u);
  std::map<std::string, std::string> leaf_of;
  for (const auto& img : m.images) leaf_of[img.id] = img.category.leaf;
  std::map<std::string, int> study_leaf, test_leaf, repeat_leaf;
  std::set<std::string> studied;
  for (const auto& t : s.study) {
    ++study_leaf[leaf_of[t.image_id]];
    studied.insert(t.image_id);
    EXPECT_EQ(t.duration_ms, 3000);
  }
  int repeats = 0;
  std::set<std::string> tested;
  for (const auto& t : s.test) {
    ++test_leaf[leaf_of[t.image_id]];
    EXPECT_TRUE(tested.insert(t.image_id).second);
    if (t.role == TrialRole::Repeat) {
      ++repeats;
      ++repeat_leaf[leaf_of[t.image_id]];
      EXPECT_TRUE(studied.contains(t.image_id));
    } else {
      EXPECT_FALSE(studied.contains(t.image_id));
    }
  }
  EXPECT_EQ(studied.size(), 400u);
  EXPECT_EQ(repeats, 200);
  for (const auto& leaf : vms::CategoryTree::vischema().leaves()) {
    EXPECT_EQ(study_leaf[leaf.leaf], 50);
    EXPECT_EQ(test_leaf[leaf.leaf], 50);
    EXPECT_EQ(repeat_leaf[leaf.leaf], 25);
  }
}

TEST(Schedule, CountsHoldForAnySeed) {
  const auto m = vms::parse_manifest(manifest_json(100), ".");
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = vms::generate_schedule(m, seed * 7919);
    int repeats = 0;
    for (const auto& t : s.test) repeats += t.role == TrialRole::Repeat;
    ASSERT_EQ(s.study.size(), 400u);
    ASSERT_EQ(repeats, 200);
  }
}

TEST(Schedule, SameSeedSameSchedule) {
  const auto m = vms::parse_manifest(manifest_json(100), ".");
  EXPECT_EQ(vms::generate_schedule(m, 7), vms::generate_schedule(m, 7));
  EXPECT_EQ(vms::serialize_schedule(vms::generate_schedule(m, 7)),
            vms::serialize_schedule(vms::generate_schedule(m, 7)));
  EXPECT_NE(vms::generate_schedule(m, 7), vms::generate_schedule(m, 8));
}

TEST(Schedule, InsufficientLeafIsAnError) {
  const auto m = vms::parse_manifest(manifest_json(100, 3), ".");
  EXPECT_THROW(vms::generate_schedule(m, 7), vms::ValidationError);
}

TEST(Schedule, ShuffleReproducibleFromDocumentedSteps) {
  // Re-derive the first leaf's study prefix with the documented procedure.
  const auto m = vms::parse_manifest(manifest_json(100), ".");
  const auto s = vms::generate_schedule(m, 21);
  std::vector<std::string> pool;
  for (const auto* img : m.images_in_leaf(m.categories.leaves().front())) pool.push_back(img->id);
  std::sort(pool.begin(), pool.end());
  vms::CounterRng rng(21);
  vms::fisher_yates(std::span<std::string>(pool), rng);
  std::set<std::string> expected(pool.begin(), pool.begin() + 50);
  std::set<std::string> got;
  for (const auto& t : s.study) {
    if (std::find(pool.begin(), pool.end(), t.image_id) != pool.end()) got.insert(t.image_id);
  }
  EXPECT_EQ(got, expected);
}

}  // namespace

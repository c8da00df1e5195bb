#include "vms/schedule.hpp"

#include <algorithm>

#include "json.hpp"
#include "vms/errors.hpp"
#include "vms/rng.hpp"

namespace vms {

Schedule generate_schedule(const DatasetManifest& manifest, std::uint64_t seed,
                           const ProtocolConfig& config) {
  if (config.study_per_leaf <= 0 || config.repeats_per_leaf < 0 || config.fillers_per_leaf < 0 ||
      config.repeats_per_leaf > config.study_per_leaf) {
    throw ValidationError("invalid protocol configuration");
  }
  const int needed = std::max(config.min_pool_per_leaf, config.study_per_leaf + config.fillers_per_leaf);

  CounterRng rng(seed);
  std::vector<std::string> study_ids;
  std::vector<ScheduledTest> test;

  std::vector<FieldError> errors;
  for (const auto& leaf : manifest.categories.leaves()) {
    std::vector<std::string> pool;
    for (const auto* img : manifest.images_in_leaf(leaf)) pool.push_back(img->id);
    if (static_cast<int>(pool.size()) < needed) {
      errors.push_back({"category " + leaf.str(), "insufficient images: " + std::to_string(pool.size()) +
                                                      " < " + std::to_string(needed)});
      continue;
    }
    std::sort(pool.begin(), pool.end());
    fisher_yates(std::span<std::string>(pool), rng);
    for (int i = 0; i < config.study_per_leaf; ++i) study_ids.push_back(pool[i]);
    for (int i = 0; i < config.repeats_per_leaf; ++i) test.push_back({pool[i], TrialRole::Repeat});
    for (int i = 0; i < config.fillers_per_leaf; ++i) {
      test.push_back({pool[config.study_per_leaf + i], TrialRole::Filler});
    }
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));

  fisher_yates(std::span<std::string>(study_ids), rng);
  fisher_yates(std::span<ScheduledTest>(test), rng);

  Schedule s;
  s.seed = seed;
  s.test = std::move(test);
  s.study.reserve(study_ids.size());
  const std::int64_t period = config.study_duration_ms + config.interstimulus_ms;
  for (std::size_t i = 0; i < study_ids.size(); ++i) {
    s.study.push_back({std::move(study_ids[i]), static_cast<std::int64_t>(i) * period,
                       config.study_duration_ms});
  }
  return s;
}

std::string serialize_schedule(const Schedule& schedule) {
  using nlohmann::json;
  json study = json::array();
  for (const auto& s : schedule.study) {
    study.push_back({{"image_id", s.image_id}, {"onset_ms", s.onset_ms}, {"duration_ms", s.duration_ms}});
  }
  json test = json::array();
  for (const auto& t : schedule.test) {
    test.push_back({{"image_id", t.image_id}, {"role", std::string(to_string(t.role))}});
  }
  json doc = {{"seed", schedule.seed}, {"study", std::move(study)}, {"test", std::move(test)}};
  return doc.dump(2) + "\n";
}

}  // namespace vms

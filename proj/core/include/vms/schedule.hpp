#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vms/manifest.hpp"
#include "vms/session.hpp"

namespace vms {

struct ProtocolConfig {
  int study_per_leaf = 50;
  int repeats_per_leaf = 25;
  int fillers_per_leaf = 25;
  // Size of the per-leaf pool the protocol is balanced over; a leaf with
  // fewer images is rejected even if it could fill one session.
  int min_pool_per_leaf = 100;
  std::int64_t study_duration_ms = 3000;
  std::int64_t interstimulus_ms = 1000;
};

struct ScheduledTest {
  std::string image_id;
  TrialRole role = TrialRole::Filler;
  bool operator==(const ScheduledTest&) const = default;
};

struct Schedule {
  std::uint64_t seed = 0;
  std::vector<StudyTrial> study;
  std::vector<ScheduledTest> test;
  bool operator==(const Schedule&) const = default;
};

// For each leaf (tree order): sort its ids, Fisher-Yates them with the
// seeded CounterRng, take the first study_per_leaf as study images, the first
// repeats_per_leaf of those as repeats and the next fillers_per_leaf as new
// fillers. Both phases are then shuffled with the same generator.
Schedule generate_schedule(const DatasetManifest& manifest, std::uint64_t seed,
                           const ProtocolConfig& config = {});

std::string serialize_schedule(const Schedule& schedule);

}  // namespace vms

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace vms {

// Confidence at or above which a participant must select regions, and below
// which selections are forbidden. Distinct from the analysis threshold.
inline constexpr int kSelectionGate = 30;
inline constexpr int kMaxSelections = 3;
inline constexpr int kDefaultAnalysisThreshold = 40;

// Default two-stage protocol sizes.
inline constexpr int kProtocolStudyTrials = 400;
inline constexpr int kProtocolTestTrials = 400;
inline constexpr int kProtocolRepeats = 200;

enum class TrialRole { Repeat, Filler };

std::string_view to_string(TrialRole role) noexcept;

// Rectangle in normalized image coordinates, [0,1] on both axes.
struct RectSelection {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  bool operator==(const RectSelection&) const = default;
};

struct StudyTrial {
  std::string image_id;
  std::int64_t onset_ms = 0;
  std::int64_t duration_ms = 0;
  bool operator==(const StudyTrial&) const = default;
};

struct TestTrial {
  std::string image_id;
  TrialRole role = TrialRole::Filler;
  int confidence = 0;
  std::vector<RectSelection> selections;
  std::int64_t response_ms = 0;
  bool operator==(const TestTrial&) const = default;
};

struct SessionLog {
  std::string session_id;
  std::string participant_id;
  std::uint64_t schedule_seed = 0;
  // Set by the runner when a participant abandons mid-session.
  bool incomplete = false;
  std::vector<StudyTrial> study_trials;
  std::vector<TestTrial> test_trials;
  bool operator==(const SessionLog&) const = default;
};

struct SessionParseOptions {
  // Enforce the full 400/400/200 protocol counts. When false, a count
  // mismatch is downgraded to a warning.
  bool strict_protocol = false;
};

// Parses one session document (JSON Lines: a "session" header record followed
// by "study" and "test" records). Every violation is collected and reported
// together in a ValidationError whose fields name the offending record, e.g.
// "test[3].confidence".
SessionLog parse_session_log(std::string_view text, const SessionParseOptions& options = {},
                             std::vector<std::string>* warnings = nullptr);

std::string serialize_session_log(const SessionLog& log);

// Checks the type invariants on an in-memory log (same rules as parsing).
void validate_session_log(const SessionLog& log, const SessionParseOptions& options = {},
                          std::vector<std::string>* warnings = nullptr);

}  // namespace vms

#include "vms/session.hpp"

#include <cmath>
#include <set>
#include <unordered_set>

#include "json.hpp"
#include "vms/errors.hpp"

namespace vms {
namespace {

using nlohmann::json;

std::string study_field(std::size_t i, std::string_view name) {
  return "study[" + std::to_string(i) + "]" + (name.empty() ? "" : "." + std::string(name));
}

std::string test_field(std::size_t i, std::string_view name) {
  return "test[" + std::to_string(i) + "]" + (name.empty() ? "" : "." + std::string(name));
}

// Small helper that pulls typed members out of a record and files an error
// (instead of throwing) when a member is missing or mistyped.
class RecordReader {
 public:
  RecordReader(const json& obj, std::string prefix, std::vector<FieldError>& errors)
      : obj_(obj), prefix_(std::move(prefix)), errors_(errors) {}

  std::string string(const char* key) {
    auto it = obj_.find(key);
    if (it == obj_.end() || !it->is_string()) {
      fail(key, "expected a string");
      return {};
    }
    return it->get<std::string>();
  }

  std::int64_t integer(const char* key, bool required = true, std::int64_t fallback = 0) {
    auto it = obj_.find(key);
    if (it == obj_.end()) {
      if (required) fail(key, "missing integer");
      return fallback;
    }
    if (!it->is_number_integer()) {
      fail(key, "expected an integer");
      return fallback;
    }
    return it->get<std::int64_t>();
  }

  std::uint64_t unsigned_integer(const char* key) {
    auto it = obj_.find(key);
    if (it == obj_.end()) return 0;
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<std::int64_t>() >= 0)) {
      fail(key, "expected a nonnegative integer");
      return 0;
    }
    return it->get<std::uint64_t>();
  }

  bool boolean(const char* key, bool fallback) {
    auto it = obj_.find(key);
    if (it == obj_.end()) return fallback;
    if (!it->is_boolean()) {
      fail(key, "expected a boolean");
      return fallback;
    }
    return it->get<bool>();
  }

  void fail(std::string_view key, std::string message) {
    errors_.push_back({prefix_ + "." + std::string(key), std::move(message)});
  }

 private:
  const json& obj_;
  std::string prefix_;
  std::vector<FieldError>& errors_;
};

void check_rect(const RectSelection& r, const std::string& field, std::vector<FieldError>& errors) {
  const double v[4] = {r.x0, r.y0, r.x1, r.y1};
  for (double c : v) {
    if (!std::isfinite(c) || c < 0.0 || c > 1.0) {
      errors.push_back({field, "selection coordinates must lie in [0,1]"});
      return;
    }
  }
  if (!(r.x0 < r.x1) || !(r.y0 < r.y1)) {
    errors.push_back({field, "selection requires x0 < x1 and y0 < y1"});
  }
}

}  // namespace

std::string_view to_string(TrialRole role) noexcept {
  return role == TrialRole::Repeat ? "repeat" : "filler";
}

void validate_session_log(const SessionLog& log, const SessionParseOptions& options,
                          std::vector<std::string>* warnings) {
  std::vector<FieldError> errors;
  if (log.session_id.empty()) errors.push_back({"session.session_id", "must not be empty"});
  if (log.participant_id.empty()) errors.push_back({"session.participant_id", "must not be empty"});

  std::unordered_set<std::string> studied;
  for (std::size_t i = 0; i < log.study_trials.size(); ++i) {
    const auto& s = log.study_trials[i];
    if (s.image_id.empty()) errors.push_back({study_field(i, "image_id"), "must not be empty"});
    if (!studied.insert(s.image_id).second) {
      errors.push_back({study_field(i, "image_id"), "image appears twice in the study phase"});
    }
    if (s.onset_ms < 0) errors.push_back({study_field(i, "onset_ms"), "must be nonnegative"});
    if (s.duration_ms < 0) errors.push_back({study_field(i, "duration_ms"), "must be nonnegative"});
  }

  std::unordered_set<std::string> tested;
  int repeats = 0;
  for (std::size_t i = 0; i < log.test_trials.size(); ++i) {
    const auto& t = log.test_trials[i];
    if (t.image_id.empty()) errors.push_back({test_field(i, "image_id"), "must not be empty"});
    if (!tested.insert(t.image_id).second) {
      errors.push_back({test_field(i, "image_id"), "image appears twice in the test phase"});
    }
    if (t.role == TrialRole::Repeat) {
      ++repeats;
      if (!studied.contains(t.image_id)) {
        errors.push_back({test_field(i, "role"), "repeat image was not shown in the study phase"});
      }
    } else if (studied.contains(t.image_id)) {
      errors.push_back({test_field(i, "role"), "filler image was already shown in the study phase"});
    }
    if (t.confidence < 0 || t.confidence > 100) {
      errors.push_back({test_field(i, "confidence"), "confidence out of range [0,100]"});
    }
    if (t.selections.size() > static_cast<std::size_t>(kMaxSelections)) {
      errors.push_back({test_field(i, "selections"), "selection count exceeds 3"});
    }
    if (t.confidence < kSelectionGate && !t.selections.empty()) {
      errors.push_back({test_field(i, "selections"), "selections present with confidence below 30"});
    }
    if (t.confidence >= kSelectionGate && t.confidence <= 100 && t.selections.empty()) {
      errors.push_back({test_field(i, "selections"), "confidence at or above 30 requires a selection"});
    }
    for (std::size_t k = 0; k < t.selections.size(); ++k) {
      check_rect(t.selections[k], test_field(i, "selections[" + std::to_string(k) + "]"), errors);
    }
    if (t.response_ms < 0) errors.push_back({test_field(i, "response_ms"), "must be nonnegative"});
  }

  const bool counts_ok = log.study_trials.size() == static_cast<std::size_t>(kProtocolStudyTrials) &&
                         log.test_trials.size() == static_cast<std::size_t>(kProtocolTestTrials) &&
                         repeats == kProtocolRepeats;
  if (!counts_ok) {
    std::string msg = "protocol counts (study, test, repeats) = (" +
                      std::to_string(log.study_trials.size()) + ", " +
                      std::to_string(log.test_trials.size()) + ", " + std::to_string(repeats) +
                      "), expected (400, 400, 200)";
    if (options.strict_protocol && !log.incomplete) {
      errors.push_back({"session", "repeat count / " + msg});
    } else if (warnings) {
      warnings->push_back(msg);
    }
  }

  if (!errors.empty()) throw ValidationError(std::move(errors));
}

SessionLog parse_session_log(std::string_view text, const SessionParseOptions& options,
                             std::vector<std::string>* warnings) {
  SessionLog log;
  std::vector<FieldError> errors;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;

  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
      line.remove_suffix(1);
    }
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }

    const std::string where = "line " + std::to_string(line_no);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error&) {
      errors.push_back({where, "malformed document: not valid JSON"});
      continue;
    }
    if (!obj.is_object()) {
      errors.push_back({where, "malformed document: record is not an object"});
      continue;
    }
    auto kind_it = obj.find("record");
    if (kind_it == obj.end() || !kind_it->is_string()) {
      errors.push_back({where + ".record", "malformed document: missing record type"});
      continue;
    }
    const std::string kind = kind_it->get<std::string>();

    if (kind == "session") {
      if (have_header) {
        errors.push_back({where, "malformed document: second session header"});
        continue;
      }
      if (!log.study_trials.empty() || !log.test_trials.empty()) {
        errors.push_back({where, "malformed document: session header must come first"});
      }
      have_header = true;
      RecordReader r(obj, "session", errors);
      log.session_id = r.string("session_id");
      log.participant_id = r.string("participant_id");
      log.schedule_seed = r.unsigned_integer("schedule_seed");
      log.incomplete = r.boolean("incomplete", false);
    } else if (kind == "study") {
      RecordReader r(obj, study_field(log.study_trials.size(), ""), errors);
      StudyTrial s;
      s.image_id = r.string("image_id");
      s.onset_ms = r.integer("onset_ms");
      s.duration_ms = r.integer("duration_ms");
      log.study_trials.push_back(std::move(s));
    } else if (kind == "test") {
      const std::size_t index = log.test_trials.size();
      RecordReader r(obj, test_field(index, ""), errors);
      TestTrial t;
      t.image_id = r.string("image_id");
      const std::string role = r.string("role");
      if (role == "repeat") {
        t.role = TrialRole::Repeat;
      } else if (role == "filler") {
        t.role = TrialRole::Filler;
      } else if (!role.empty()) {
        r.fail("role", "role must be \"repeat\" or \"filler\"");
      }
      t.confidence = static_cast<int>(std::clamp<std::int64_t>(r.integer("confidence"), -1, 101));
      t.response_ms = r.integer("response_ms", false, 0);
      auto sel = obj.find("selections");
      if (sel != obj.end()) {
        if (!sel->is_array()) {
          r.fail("selections", "expected an array of [x0,y0,x1,y1]");
        } else {
          for (std::size_t k = 0; k < sel->size(); ++k) {
            const auto& rect = (*sel)[k];
            bool ok = rect.is_array() && rect.size() == 4;
            for (std::size_t c = 0; ok && c < 4; ++c) ok = rect[c].is_number();
            if (!ok) {
              r.fail("selections[" + std::to_string(k) + "]", "expected [x0,y0,x1,y1] numbers");
              continue;
            }
            t.selections.push_back({rect[0].get<double>(), rect[1].get<double>(),
                                    rect[2].get<double>(), rect[3].get<double>()});
          }
        }
      }
      log.test_trials.push_back(std::move(t));
    } else {
      errors.push_back({where + ".record", "malformed document: unknown record type '" + kind + "'"});
    }
  }

  if (!have_header) errors.push_back({"session", "malformed document: missing session header"});
  if (!errors.empty()) throw ValidationError(std::move(errors));

  validate_session_log(log, options, warnings);
  return log;
}

std::string serialize_session_log(const SessionLog& log) {
  std::string out;
  json header = {{"record", "session"},
                 {"session_id", log.session_id},
                 {"participant_id", log.participant_id},
                 {"schedule_seed", log.schedule_seed},
                 {"incomplete", log.incomplete}};
  out += header.dump();
  out += '\n';
  for (const auto& s : log.study_trials) {
    json rec = {{"record", "study"},
                {"image_id", s.image_id},
                {"onset_ms", s.onset_ms},
                {"duration_ms", s.duration_ms}};
    out += rec.dump();
    out += '\n';
  }
  for (const auto& t : log.test_trials) {
    json sel = json::array();
    for (const auto& r : t.selections) sel.push_back({r.x0, r.y0, r.x1, r.y1});
    json rec = {{"record", "test"},
                {"image_id", t.image_id},
                {"role", std::string(to_string(t.role))},
                {"confidence", t.confidence},
                {"selections", std::move(sel)},
                {"response_ms", t.response_ms}};
    out += rec.dump();
    out += '\n';
  }
  return out;
}

}  // namespace vms

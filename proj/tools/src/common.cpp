#include "vmstool/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json.hpp"
#include "vms/errors.hpp"
#include "vms/image.hpp"
#include "vms/tensor_io.hpp"

namespace vmstool {

LoadedLogs load_logs(const fs::path& dir, bool include_incomplete) {
  if (!fs::is_directory(dir)) throw vms::ValidationError("logs directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  LoadedLogs out;
  for (const auto& f : files) {
    std::vector<std::string> warnings;
    vms::SessionLog log;
    try {
      log = vms::parse_session_log(vms::read_file(f), {}, &warnings);
    } catch (const vms::ValidationError& e) {
      throw vms::ValidationError(f.filename().string() + ": " + e.what());
    }
    for (auto& w : warnings) out.warnings.push_back(f.filename().string() + ": " + w);
    if (log.incomplete && !include_incomplete) {
      ++out.excluded_incomplete;
      continue;
    }
    out.logs.push_back(std::move(log));
  }
  if (out.logs.empty()) throw vms::ValidationError("no usable session logs in " + dir.string());
  return out;
}

vms::GridDims parse_grid(std::string_view text) {
  const auto x = text.find('x');
  try {
    if (x == std::string_view::npos) throw std::invalid_argument("x");
    const int w = std::stoi(std::string(text.substr(0, x)));
    const int h = std::stoi(std::string(text.substr(x + 1)));
    if (w <= 0 || h <= 0) throw std::invalid_argument("dims");
    return {w, h};
  } catch (const std::exception&) {
    throw vms::ValidationError("grid must look like WIDTHxHEIGHT, got '" + std::string(text) + "'");
  }
}

vms::MapGrid load_map(const fs::path& path) {
  const std::string bytes = vms::read_file(path);
  if (bytes.rfind("VTNS", 0) == 0) return vms::MapGrid::from_tensor(vms::decode_tensor(bytes));
  const auto gray = vms::to_gray(vms::decode_pnm(bytes));
  std::vector<double> v(gray.pixels.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::clamp(gray.pixels[i] / 255.0, 0.0, 1.0);
  return vms::MapGrid({gray.width, gray.height}, std::move(v));
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s(buf);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_stamp(const fs::path& out_dir, std::string_view command, const std::string& canonical_config,
                 std::uint64_t seed) {
  nlohmann::json j = {{"command", command},
                      {"config_hash", fnv1a_hex(canonical_config)},
                      {"config", nlohmann::json::parse(canonical_config)},
                      {"seed", seed}};
  write_text(out_dir / "stamp.json", j.dump(2) + "\n");
}

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  vms::write_file_atomic(path, text);
}

}  // namespace vmstool

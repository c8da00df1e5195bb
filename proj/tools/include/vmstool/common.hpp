#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "vms/map_grid.hpp"
#include "vms/session.hpp"

namespace vmstool {

namespace fs = std::filesystem;

struct LoadedLogs {
  std::vector<vms::SessionLog> logs;
  std::vector<std::string> warnings;
  int excluded_incomplete = 0;
};

// Reads every *.jsonl file under `dir` in file-name order. Incomplete
// sessions are dropped unless requested.
LoadedLogs load_logs(const fs::path& dir, bool include_incomplete);

// "100x100" -> {100, 100}.
vms::GridDims parse_grid(std::string_view text);

// VTNS map, or a netpbm image scaled to [0, 1].
vms::MapGrid load_map(const fs::path& path);

// Fixed-point decimal with `digits` fraction digits ("-0.000" never
// appears).
std::string fixed(double v, int digits = 6);

// FNV-1a 64 over the bytes, as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

// Writes stamp.json (command, config hash, seed) into `out_dir`.
void write_stamp(const fs::path& out_dir, std::string_view command, const std::string& canonical_config,
                 std::uint64_t seed);

void write_text(const fs::path& path, std::string_view text);

}  // namespace vmstool

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vms {

// Dense f32 tensor, row-major with the last dimension fastest.
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  Tensor() = default;
  Tensor(std::vector<std::uint32_t> d, std::vector<float> values)
      : dims(std::move(d)), data(std::move(values)) {}

  std::size_t element_count() const noexcept;
  bool operator==(const Tensor&) const = default;
};

// On-disk "VTNS" layout, all integers little-endian:
//   bytes 0..3  magic "VTNS"
//   byte  4     version (1)
//   byte  5     dtype (0 = f32)
//   byte  6     ndim
//   then ndim x u32 dims, then product(dims) x f32 payload.
inline constexpr std::uint8_t kTensorVersion = 1;
inline constexpr std::uint8_t kTensorDtypeF32 = 0;

std::string encode_tensor(const Tensor& t);
Tensor decode_tensor(std::string_view bytes);

void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

// Throws ValidationError unless dims are positive, data length matches and
// every value is finite.
void validate_tensor(const Tensor& t);

// Whole-file helpers shared by the text formats.
std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace vms

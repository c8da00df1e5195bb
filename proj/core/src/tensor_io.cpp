#include "vms/tensor_io.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "vms/errors.hpp"

namespace vms {
namespace {

constexpr std::string_view kMagic = "VTNS";
constexpr std::size_t kFixedHeader = 7;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  }
  return v;
}

}  // namespace

std::size_t Tensor::element_count() const noexcept {
  if (dims.empty()) return 0;
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

void validate_tensor(const Tensor& t) {
  if (t.dims.empty()) throw ValidationError("tensor has no dimensions");
  if (t.dims.size() > 255) throw ValidationError("tensor has more than 255 dimensions");
  for (auto d : t.dims) {
    if (d == 0) throw ValidationError("tensor dimension must be positive");
  }
  if (t.data.size() != t.element_count()) {
    throw ValidationError("tensor data length " + std::to_string(t.data.size()) +
                          " does not match product of dims " +
                          std::to_string(t.element_count()));
  }
  for (float v : t.data) {
    if (!std::isfinite(v)) throw ValidationError("tensor contains non-finite values");
  }
}

std::string encode_tensor(const Tensor& t) {
  validate_tensor(t);
  std::string out;
  out.reserve(kFixedHeader + 4 * t.dims.size() + 4 * t.data.size());
  out.append(kMagic);
  out.push_back(static_cast<char>(kTensorVersion));
  out.push_back(static_cast<char>(kTensorDtypeF32));
  out.push_back(static_cast<char>(t.dims.size()));
  for (auto d : t.dims) put_u32(out, d);
  for (float v : t.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Tensor decode_tensor(std::string_view bytes) {
  if (bytes.size() < kFixedHeader || bytes.substr(0, 4) != kMagic) {
    throw FormatError("bad magic: not a VTNS tensor");
  }
  const auto version = static_cast<std::uint8_t>(bytes[4]);
  const auto dtype = static_cast<std::uint8_t>(bytes[5]);
  const auto ndim = static_cast<std::uint8_t>(bytes[6]);
  if (version != kTensorVersion) {
    throw FormatError("unsupported VTNS version " + std::to_string(version));
  }
  if (dtype != kTensorDtypeF32) throw FormatError("unsupported VTNS dtype " + std::to_string(dtype));
  if (ndim == 0) throw FormatError("VTNS tensor has zero dimensions");
  const std::size_t header = kFixedHeader + 4u * ndim;
  if (bytes.size() < header) throw FormatError("truncated VTNS header");

  Tensor t;
  t.dims.resize(ndim);
  std::size_t count = 1;
  for (std::size_t i = 0; i < ndim; ++i) {
    t.dims[i] = get_u32(bytes, kFixedHeader + 4 * i);
    if (t.dims[i] == 0) throw FormatError("VTNS dimension " + std::to_string(i) + " is zero");
    count *= t.dims[i];
  }
  const std::size_t payload = bytes.size() - header;
  if (payload != 4 * count) {
    throw FormatError("VTNS payload has " + std::to_string(payload / 4) +
                      " values but dims require " + std::to_string(count));
  }
  t.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    t.data[i] = std::bit_cast<float>(get_u32(bytes, header + 4 * i));
  }
  return t;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  static std::atomic<unsigned> sequence{0};
  auto tmp = path;
  tmp += ".tmp." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()) % 100000) +
         "." + std::to_string(sequence.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  write_file_atomic(path, encode_tensor(t));
}

Tensor read_tensor(const std::filesystem::path& path) { return decode_tensor(read_file(path)); }

}  // namespace vms

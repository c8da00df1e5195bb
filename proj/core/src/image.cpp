#include "vms/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "vms/errors.hpp"
#include "vms/tensor_io.hpp"

namespace vms {
namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::string_view bytes, std::size_t& pos) {
  for (;;) {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  const std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  return std::string(bytes.substr(start, pos - start));
}

int parse_positive(const std::string& token, const char* what) {
  if (token.empty() || !std::all_of(token.begin(), token.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    throw FormatError(std::string("bad PNM ") + what);
  }
  const long v = std::stol(token);
  if (v <= 0 || v > 1 << 20) throw FormatError(std::string("PNM ") + what + " out of range");
  return static_cast<int>(v);
}

}  // namespace

GrayImage to_gray(const RgbImage& img) {
  GrayImage g(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      g.at(x, y) = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
    }
  }
  return g;
}

RgbImage decode_pnm(std::string_view bytes) {
  std::size_t pos = 0;
  const std::string magic = next_token(bytes, pos);
  if (magic != "P5" && magic != "P6") throw FormatError("unsupported image: expected binary PGM/PPM");
  const int w = parse_positive(next_token(bytes, pos), "width");
  const int h = parse_positive(next_token(bytes, pos), "height");
  const int maxval = parse_positive(next_token(bytes, pos), "maxval");
  if (maxval != 255) throw FormatError("only 8-bit PNM images are supported");
  ++pos;  // single whitespace byte after maxval
  const int channels = magic == "P6" ? 3 : 1;
  const std::size_t need = static_cast<std::size_t>(w) * h * channels;
  if (pos > bytes.size() || bytes.size() - pos < need) throw FormatError("truncated PNM payload");

  RgbImage img(w, h);
  const auto* src = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
  if (channels == 3) {
    std::copy(src, src + need, img.pixels.begin());
  } else {
    for (std::size_t i = 0; i < need; ++i) {
      img.pixels[3 * i] = img.pixels[3 * i + 1] = img.pixels[3 * i + 2] = src[i];
    }
  }
  return img;
}

std::string encode_ppm(const RgbImage& img) {
  std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
  return out;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& img) {
  write_file_atomic(path, encode_ppm(img));
}

RgbImage read_image(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() >= 4 && bytes.compare(0, 4, "VTNS") == 0) {
    const Tensor t = decode_tensor(bytes);
    if (t.dims.size() != 2 && !(t.dims.size() == 3 && (t.dims[2] == 3 || t.dims[2] == 1))) {
      throw FormatError("image tensor must have dims (h, w) or (h, w, 3)");
    }
    const int h = static_cast<int>(t.dims[0]);
    const int w = static_cast<int>(t.dims[1]);
    const int c = t.dims.size() == 3 ? static_cast<int>(t.dims[2]) : 1;
    RgbImage img(w, h);
    for (std::size_t i = 0; i < static_cast<std::size_t>(w) * h; ++i) {
      for (int k = 0; k < 3; ++k) {
        const float v = t.data[i * c + (c == 3 ? k : 0)];
        img.pixels[3 * i + k] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
    return img;
  }
  return decode_pnm(bytes);
}

}  // namespace vms

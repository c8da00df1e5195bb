#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace vms {

// 8-bit interleaved RGB image, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t& at(int x, int y, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  std::uint8_t at(int x, int y, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  bool empty() const noexcept { return width <= 0 || height <= 0; }
  bool operator==(const RgbImage&) const = default;
};

// Real-valued single-channel image, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, double fill = 0.0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

// ITU-R BT.601 luma.
GrayImage to_gray(const RgbImage& img);

// Binary netpbm (P5 grayscale, P6 RGB, maxval 255) or a VTNS tensor of
// dims (h, w, 3) / (h, w) holding values in [0, 255].
RgbImage read_image(const std::filesystem::path& path);
RgbImage decode_pnm(std::string_view bytes);
std::string encode_ppm(const RgbImage& img);
void write_ppm(const std::filesystem::path& path, const RgbImage& img);

}  // namespace vms

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace synthasm {

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, 3 bytes per pixel

  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    const std::size_t i = 3 * (static_cast<std::size_t>(y) * width + x);
    pixels[i] = r;
    pixels[i + 1] = g;
    pixels[i + 2] = b;
  }
};

struct GrayImage16 {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> pixels;
};

/// Binary PPM (P6, maxval 255).
void write_ppm(const std::string& path, const RgbImage& image);
RgbImage read_ppm(const std::string& path);

/// Binary 16-bit PGM (P5, maxval 65535, big-endian samples).
void write_pgm16(const std::string& path, const GrayImage16& image);
GrayImage16 read_pgm16(const std::string& path);

}  // namespace synthasm

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

namespace sfcn {

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

struct GrayImage {
  std::size_t h = 0, w = 0;
  std::vector<std::uint8_t> pix;  // row-major

  std::uint8_t at(std::size_t i, std::size_t j) const { return pix[i * w + j]; }
  std::uint8_t& at(std::size_t i, std::size_t j) { return pix[i * w + j]; }
};

struct RgbImage {
  std::size_t h = 0, w = 0;
  std::vector<std::uint8_t> pix;  // interleaved r,g,b
};

// Binary PGM (P5) / PPM (P6), maxval 255. The normative bit-exact formats.
void write_pgm(const std::filesystem::path& path, const GrayImage& img);
GrayImage read_pgm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const RgbImage& img);
RgbImage read_ppm(const std::filesystem::path& path);

}  // namespace sfcn

#pragma once

#include <filesystem>

#include "sfcn/image_io.hpp"
#include "sfcn/tensor.hpp"

namespace sfcn {

// Grayscale contour-strength map in [0,1], same extent as its source image.
struct ContourMap {
  std::size_t h = 0, w = 0;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[i * w + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * w + j]; }
};

// Proxy oriented-gradient detector: grayscale -> 5x5 Gaussian (sigma 1) ->
// central-difference gradients -> 4-bin non-maximum suppression -> divide by
// the global maximum (all-zero map if max < 1e-12). Stands in for an external
// structured-edge detector; anything producing a [0,1] map can be ingested
// via load_contour instead.
ContourMap detect_contour(const Tensor& image);

ContourMap load_contour(const std::filesystem::path& path);
void save_contour(const std::filesystem::path& path, const ContourMap& map);

// Three identical channels, ready for the weight-shared second stream.
Tensor replicate3(const ContourMap& c);

}  // namespace sfcn

#pragma once

#include <filesystem>
#include <vector>

#include "sfcn/tensor.hpp"

namespace sfcn {

// Constant 2-channel map of normalized pixel coordinates: channel 0 is the x
// (column) ramp, channel 1 the y (row) ramp, each in [0,1]. Generated once
// analytically at the attach resolution; independent of input images.
struct LocationPrior {
  Tensor values;  // (1, 2, hf, wf)
};

LocationPrior location_maps(std::size_t hf, std::size_t wf);

// Per-pixel empirical road frequency over a set of binary masks.
struct FrequencyMap {
  std::size_t h = 0, w = 0;
  std::vector<double> values;  // in [0,1]
};

// Masks are row-major h*w with values 0 (background) / 1 (road); void pixels
// are the caller's concern and must be filtered beforehand.
FrequencyMap road_frequency(const std::vector<std::vector<int>>& masks, std::size_t h,
                            std::size_t w);

void save_frequency_pgm(const std::filesystem::path& path, const FrequencyMap& f);
void save_frequency_csv(const std::filesystem::path& path, const FrequencyMap& f);

}  // namespace sfcn

#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "sfcn/layers.hpp"
#include "sfcn/tensor.hpp"

namespace sfcn {

// Seeded synthetic street-scene generator: perspective road trapezoid,
// occluders carved out of the mask, multiplicative shadows, texture noise.
struct SceneParams {
  std::size_t h = 64, w = 64;         // multiple of 32
  double vp_jitter = 0.15;            // vanishing-point lateral jitter, fraction of w
  double base_width_lo = 0.4;         // road width at the bottom edge, fraction of w
  double base_width_hi = 0.9;
  int occluder_lo = 0, occluder_hi = 3;
  int shadow_lo = 0, shadow_hi = 2;
  double noise_amp = 0.05;
  std::array<double, 3> road_color = {0.42, 0.42, 0.45};
  std::uint64_t seed = 7;

  void validate() const;
};

struct Sample {
  Tensor image;            // (1,3,h,w) in [0,1]
  std::vector<int> mask;   // 0 background, 1 road, kVoidLabel void
  std::string label;       // scene tag: uu | um | umm
};

// Deterministic in (params.seed, index). Road fraction is kept within
// [0.05, 0.8] by bounded, seeded retries.
Sample generate_scene(const SceneParams& p, std::size_t index);

// Writes img_NNNN.ppm / mask_NNNN.pgm pairs (mask: 0 / 255 / void=128) and a
// tab-separated manifest (image, mask, label); returns the manifest path.
// `first` offsets the scene index, so disjoint splits share one seed.
std::filesystem::path generate_dataset(const SceneParams& p, std::size_t count,
                                       const std::filesystem::path& out_dir,
                                       std::size_t first = 0);

struct Dataset {
  std::vector<Sample> samples;
  std::vector<std::string> image_paths, mask_paths, labels;
  std::vector<std::string> contour_paths;  // empty strings when absent
};

Dataset load_dataset(const std::filesystem::path& manifest);

LabelMap mask_to_labels(const std::vector<int>& mask, std::size_t h, std::size_t w);

}  // namespace sfcn

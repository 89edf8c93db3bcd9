#include "sfcn/locprior.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "sfcn/image_io.hpp"

namespace sfcn {

LocationPrior location_maps(std::size_t hf, std::size_t wf) {
  if (hf < 1 || wf < 1) throw ShapeError("location_maps: extents must be >= 1");
  LocationPrior p{Tensor(Shape{1, 2, hf, wf})};
  for (std::size_t i = 0; i < hf; ++i)
    for (std::size_t j = 0; j < wf; ++j) {
      p.values.at(0, 0, i, j) = wf > 1 ? double(j) / double(wf - 1) : 0.0;
      p.values.at(0, 1, i, j) = hf > 1 ? double(i) / double(hf - 1) : 0.0;
    }
  return p;
}

FrequencyMap road_frequency(const std::vector<std::vector<int>>& masks, std::size_t h,
                            std::size_t w) {
  if (masks.empty()) throw std::invalid_argument("road_frequency: empty mask sequence");
  FrequencyMap f{h, w, std::vector<double>(h * w, 0.0)};
  for (const auto& m : masks) {
    if (m.size() != h * w)
      throw ShapeError("road_frequency: mask extent mismatch");
    for (std::size_t i = 0; i < m.size(); ++i) f.values[i] += m[i] ? 1.0 : 0.0;
  }
  for (auto& v : f.values) v /= double(masks.size());
  return f;
}

void save_frequency_pgm(const std::filesystem::path& path, const FrequencyMap& f) {
  GrayImage img{f.h, f.w, std::vector<std::uint8_t>(f.values.size())};
  for (std::size_t i = 0; i < f.values.size(); ++i)
    img.pix[i] = std::uint8_t(std::lround(f.values[i] * 255.0));
  write_pgm(path, img);
}

void save_frequency_csv(const std::filesystem::path& path, const FrequencyMap& f) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t i = 0; i < f.h; ++i) {
    for (std::size_t j = 0; j < f.w; ++j) {
      if (j) out << ',';
      out << f.values[i * f.w + j];
    }
    out << '\n';
  }
}

}  // namespace sfcn

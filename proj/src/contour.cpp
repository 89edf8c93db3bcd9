#include "sfcn/contour.hpp"

#include <cmath>

namespace sfcn {
namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> gaussian5() {
  // 5x5, sigma = 1.0, normalized to sum 1
  std::vector<double> k(25);
  double sum = 0;
  for (int i = -2; i <= 2; ++i)
    for (int j = -2; j <= 2; ++j) {
      const double v = std::exp(-(i * i + j * j) / 2.0);
      k[(i + 2) * 5 + (j + 2)] = v;
      sum += v;
    }
  for (auto& v : k) v /= sum;
  return k;
}

double clamped(const std::vector<double>& img, long h, long w, long i, long j) {
  i = std::max(0L, std::min(h - 1, i));
  j = std::max(0L, std::min(w - 1, j));
  return img[std::size_t(i) * std::size_t(w) + std::size_t(j)];
}

}  // namespace

ContourMap detect_contour(const Tensor& image) {
  const Shape& s = image.shape();
  if (s.n != 1 || s.c != 3)
    throw ShapeError("detect_contour: expected (1,3,h,w) image, got " + s.str());
  const long h = long(s.h), w = long(s.w);

  std::vector<double> gray(s.h * s.w);
  for (std::size_t i = 0; i < s.h; ++i)
    for (std::size_t j = 0; j < s.w; ++j)
      gray[i * s.w + j] = 0.299 * image.at(0, 0, i, j) + 0.587 * image.at(0, 1, i, j) +
                          0.114 * image.at(0, 2, i, j);

  static const std::vector<double> G = gaussian5();
  std::vector<double> smooth(gray.size());
  for (long i = 0; i < h; ++i)
    for (long j = 0; j < w; ++j) {
      double acc = 0;
      for (int u = -2; u <= 2; ++u)
        for (int v = -2; v <= 2; ++v)
          acc += G[(u + 2) * 5 + (v + 2)] * clamped(gray, h, w, i + u, j + v);
      smooth[std::size_t(i) * s.w + std::size_t(j)] = acc;
    }

  std::vector<double> mag(gray.size()), dir(gray.size());
  for (long i = 0; i < h; ++i)
    for (long j = 0; j < w; ++j) {
      const double gx =
          0.5 * (clamped(smooth, h, w, i, j + 1) - clamped(smooth, h, w, i, j - 1));
      const double gy =
          0.5 * (clamped(smooth, h, w, i + 1, j) - clamped(smooth, h, w, i - 1, j));
      mag[std::size_t(i) * s.w + std::size_t(j)] = std::hypot(gx, gy);
      dir[std::size_t(i) * s.w + std::size_t(j)] = std::atan2(gy, gx);
    }

  // non-maximum suppression along the quantized gradient direction (4 bins)
  ContourMap out{s.h, s.w, std::vector<double>(gray.size(), 0.0)};
  for (long i = 0; i < h; ++i)
    for (long j = 0; j < w; ++j) {
      const double m = mag[std::size_t(i) * s.w + std::size_t(j)];
      if (m <= 0) continue;
      double a = dir[std::size_t(i) * s.w + std::size_t(j)];
      if (a < 0) a += kPi;  // orientation, not direction
      int bin = int(std::floor(a / (kPi / 4.0) + 0.5)) % 4;
      static const int di[4] = {0, 1, 1, 1};   // 0, 45, 90, 135 degrees
      static const int dj[4] = {1, 1, 0, -1};
      const double n1 = clamped(mag, h, w, i + di[bin], j + dj[bin]);
      const double n2 = clamped(mag, h, w, i - di[bin], j - dj[bin]);
      if (m >= n1 && m >= n2) out.values[std::size_t(i) * s.w + std::size_t(j)] = m;
    }

  double peak = 0;
  for (double v : out.values) peak = std::max(peak, v);
  if (peak < 1e-12) {
    std::fill(out.values.begin(), out.values.end(), 0.0);
  } else {
    for (auto& v : out.values) v /= peak;
  }
  return out;
}

ContourMap load_contour(const std::filesystem::path& path) {
  const GrayImage img = read_pgm(path);
  ContourMap out{img.h, img.w, std::vector<double>(img.pix.size())};
  for (std::size_t i = 0; i < img.pix.size(); ++i) out.values[i] = img.pix[i] / 255.0;
  return out;
}

void save_contour(const std::filesystem::path& path, const ContourMap& map) {
  GrayImage img{map.h, map.w, std::vector<std::uint8_t>(map.values.size())};
  for (std::size_t i = 0; i < map.values.size(); ++i)
    img.pix[i] = std::uint8_t(std::lround(std::min(1.0, std::max(0.0, map.values[i])) * 255.0));
  write_pgm(path, img);
}

Tensor replicate3(const ContourMap& c) {
  Tensor out(Shape{1, 3, c.h, c.w});
  for (std::size_t ch = 0; ch < 3; ++ch)
    for (std::size_t i = 0; i < c.h; ++i)
      for (std::size_t j = 0; j < c.w; ++j) out.at(0, ch, i, j) = c.at(i, j);
  return out;
}

}  // namespace sfcn

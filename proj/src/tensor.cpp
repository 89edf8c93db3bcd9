#include "sfcn/tensor.hpp"

#include <cmath>
#include <cstring>

#include "sfcn/kernels.hpp"

namespace sfcn {

std::string Shape::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) +
         "," + std::to_string(w) + ")";
}

Tensor::Tensor(Shape s, std::vector<double> data) : shape_(s), data_(std::move(data)) {
  if (data_.size() != shape_.numel())
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_.str());
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

Tensor elementwise_add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw ShapeError("elementwise_add: shape mismatch " + a.shape().str() + " vs " +
                     b.shape().str());
  Tensor out(a.shape());
  kernels::active().add(out.data(), a.data(), b.data(), a.size());
  return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w)
    throw ShapeError("concat_channels: n/h/w mismatch " + sa.str() + " vs " + sb.str());
  Tensor out(Shape{sa.n, sa.c + sb.c, sa.h, sa.w});
  const std::size_t plane = sa.h * sa.w;
  for (std::size_t n = 0; n < sa.n; ++n) {
    std::memcpy(out.row(n, 0, 0), a.row(n, 0, 0), sa.c * plane * sizeof(double));
    std::memcpy(out.row(n, sa.c, 0), b.row(n, 0, 0), sb.c * plane * sizeof(double));
  }
  return out;
}

Tensor slice_channels(const Tensor& a, std::size_t c0, std::size_t c1) {
  const Shape& s = a.shape();
  if (c0 >= c1 || c1 > s.c)
    throw ShapeError("slice_channels: bad channel range [" + std::to_string(c0) + "," +
                     std::to_string(c1) + ") for " + s.str());
  Tensor out(Shape{s.n, c1 - c0, s.h, s.w});
  const std::size_t plane = s.h * s.w;
  for (std::size_t n = 0; n < s.n; ++n)
    std::memcpy(out.row(n, 0, 0), a.row(n, c0, 0), (c1 - c0) * plane * sizeof(double));
  return out;
}

Tensor center_crop(const Tensor& a, std::size_t th, std::size_t tw) {
  const Shape& s = a.shape();
  if (th > s.h || tw > s.w)
    throw ShapeError("center_crop: target " + std::to_string(th) + "x" +
                     std::to_string(tw) + " exceeds source " + s.str());
  const std::size_t oh = (s.h - th) / 2;
  const std::size_t ow = (s.w - tw) / 2;
  Tensor out(Shape{s.n, s.c, th, tw});
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t i = 0; i < th; ++i)
        std::memcpy(out.row(n, c, i), a.row(n, c, i + oh) + ow, tw * sizeof(double));
  return out;
}

Tensor bilinear_resize(const Tensor& a, std::size_t th, std::size_t tw) {
  const Shape& s = a.shape();
  if (th < 1 || tw < 1) throw ShapeError("bilinear_resize: target extents must be >= 1");
  if (th == s.h && tw == s.w) return a;
  Tensor out(Shape{s.n, s.c, th, tw});
  const double sy = th > 1 ? double(s.h - 1) / double(th - 1) : 0.0;
  const double sx = tw > 1 ? double(s.w - 1) / double(tw - 1) : 0.0;
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t i = 0; i < th; ++i) {
        const double fy = i * sy;
        const std::size_t y0 = std::min<std::size_t>(std::size_t(fy), s.h - 1);
        const std::size_t y1 = std::min<std::size_t>(y0 + 1, s.h - 1);
        const double dy = fy - double(y0);
        for (std::size_t j = 0; j < tw; ++j) {
          const double fx = j * sx;
          const std::size_t x0 = std::min<std::size_t>(std::size_t(fx), s.w - 1);
          const std::size_t x1 = std::min<std::size_t>(x0 + 1, s.w - 1);
          const double dx = fx - double(x0);
          const double v00 = a.at(n, c, y0, x0), v01 = a.at(n, c, y0, x1);
          const double v10 = a.at(n, c, y1, x0), v11 = a.at(n, c, y1, x1);
          out.at(n, c, i, j) = (1 - dy) * ((1 - dx) * v00 + dx * v01) +
                               dy * ((1 - dx) * v10 + dx * v11);
        }
      }
  return out;
}

}  // namespace sfcn

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sfcn {

struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

struct Shape {
  std::size_t n = 1, c = 1, h = 1, w = 1;

  std::size_t numel() const { return n * c * h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

// Dense 4-D (batch, channel, height, width) array of doubles, row-major with
// width innermost. The universal value type for images, feature maps and
// scores; operations treat tensors as immutable values and return new ones.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0) : shape_(s), data_(s.numel(), fill) {}
  Tensor(Shape s, std::vector<double> data);

  static Tensor zeros(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return Tensor(Shape{n, c, h, w});
  }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[((n * shape_.c + c) * shape_.h + h) * shape_.w + w];
  }
  double at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[((n * shape_.c + c) * shape_.h + h) * shape_.w + w];
  }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Pointer to the start of row (n,c,h).
  double* row(std::size_t n, std::size_t c, std::size_t h) {
    return data_.data() + ((n * shape_.c + c) * shape_.h + h) * shape_.w;
  }
  const double* row(std::size_t n, std::size_t c, std::size_t h) const {
    return data_.data() + ((n * shape_.c + c) * shape_.h + h) * shape_.w;
  }

  bool all_finite() const;

 private:
  Shape shape_;
  std::vector<double> data_;
};

Tensor elementwise_add(const Tensor& a, const Tensor& b);
Tensor concat_channels(const Tensor& a, const Tensor& b);
// Channels [c0, c1) of a.
Tensor slice_channels(const Tensor& a, std::size_t c0, std::size_t c1);
Tensor center_crop(const Tensor& a, std::size_t th, std::size_t tw);
// Corner-aligned bilinear: source coordinate of output j is j*(src-1)/(dst-1)
// for dst > 1, else 0.
Tensor bilinear_resize(const Tensor& a, std::size_t th, std::size_t tw);

}  // namespace sfcn

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "sfcn/params.hpp"
#include "sfcn/tensor.hpp"

namespace sfcn {

// Per-pixel integer class map with ignore value for void pixels.
struct LabelMap {
  std::size_t n = 1, h = 0, w = 0;
  std::vector<int> v;  // row-major, n outermost

  static constexpr int kIgnore = 255;

  int at(std::size_t bn, std::size_t i, std::size_t j) const {
    return v[(bn * h + i) * w + j];
  }
  int& at(std::size_t bn, std::size_t i, std::size_t j) {
    return v[(bn * h + i) * w + j];
  }
};

struct LossConfig {
  enum class Reduction { Sum, Mean };
  Reduction reduction = Reduction::Mean;
  int classes = 2;
};

// Registers a conv parameter pair: id+".w" (oc,ic,kh,kw) and id+".b" (oc).
void register_conv(ParameterStore& store, const std::string& id, std::size_t oc,
                   std::size_t ic, std::size_t kh, std::size_t kw);
// Registers a transpose-conv weight id+".w" with shape (ic,oc,2f,2f), no bias.
void register_tconv(ParameterStore& store, const std::string& id, std::size_t ic,
                    std::size_t oc, std::size_t factor);

Tensor conv2d_forward(const Tensor& x, const ParameterStore& store,
                      const std::string& id, std::size_t stride, std::size_t pad);
// Accumulates weight/bias gradients into store[id]; returns grad w.r.t. x.
Tensor conv2d_backward(const Tensor& x, const Tensor& grad_out, ParameterStore& store,
                       const std::string& id, std::size_t stride, std::size_t pad);

struct PoolResult {
  Tensor out;
  std::vector<std::uint32_t> argmax;  // flat input index per output element
};
// 2x2 max pooling, stride 2; ties break toward the smallest flat index.
PoolResult maxpool2_forward(const Tensor& x);
Tensor maxpool2_backward(const PoolResult& cache, const Tensor& grad_out, Shape in_shape);

Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& grad_out);

// Inverted dropout: zero with probability rate, survivors scaled by 1/(1-rate).
// Deterministic in (seed, element index); identity when !training or rate==0.
Tensor dropout(const Tensor& x, double rate, std::uint64_t seed, bool training);
Tensor dropout_backward(const Tensor& grad_out, double rate, std::uint64_t seed,
                        bool training);

// Upsampling by `factor` (even): kernel 2f, stride f, pad f/2, the transpose of
// the matching strided convolution. Output extent = factor * input extent.
Tensor tconv2d_forward(const Tensor& x, const ParameterStore& store,
                       const std::string& id, std::size_t factor);
Tensor tconv2d_backward(const Tensor& x, const Tensor& grad_out, ParameterStore& store,
                        const std::string& id, std::size_t factor);
// The strided convolution paired with tconv2d (its adjoint); used by the
// backward pass and the inner-product identity tests.
Tensor tconv2d_adjoint_conv(const Tensor& y, const ParameterStore& store,
                            const std::string& id, std::size_t factor);

// Fills a (c,c,k,k) buffer with the separable bilinear interpolation kernel on
// the diagonal (channel-preserving).
void bilinear_fill(std::vector<double>& w, std::size_t channels, std::size_t k);

struct LossResult {
  double loss = 0.0;
  Tensor grad_logits;
};
LossResult softmax_xent_perpixel(const Tensor& logits, const LabelMap& labels,
                                 const LossConfig& cfg);

// Central-difference gradient verification. `loss` must be a deterministic
// function of the probed values.
struct GradProbe {
  double* value;
  double analytic;
};
double grad_check(const std::function<double()>& loss, std::vector<GradProbe> probes,
                  double eps);
double relative_error(double a, double b);

}  // namespace sfcn

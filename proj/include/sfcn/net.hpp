#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sfcn/layers.hpp"
#include "sfcn/locprior.hpp"
#include "sfcn/params.hpp"
#include "sfcn/tensor.hpp"

namespace sfcn {

enum class Variant { Fcn, SFcn, SFcnLoc };
enum class AttachPoint { Pool4, Conv7 };

std::string to_string(Variant v);
std::string to_string(AttachPoint a);
Variant variant_from_string(const std::string& s);
AttachPoint attach_from_string(const std::string& s);

struct ArchConfig {
  Variant variant = Variant::SFcnLoc;
  std::size_t input = 64;  // multiple of 32
  std::size_t width = 8;   // base channel count C
  AttachPoint attach = AttachPoint::Pool4;
  double dropout = 0.5;
  std::uint64_t seed = 1;

  void validate() const;
  bool siamesed() const { return variant != Variant::Fcn; }
};

// Forward caches for one training step (internal detail, exposed for the
// test suites and the trainer).
struct StreamCache {
  std::vector<Tensor> conv_in;   // input of each conv, trunk order then conv6, conv7
  std::vector<Tensor> conv_pre;  // pre-relu conv outputs
  std::vector<PoolResult> pools;
  std::vector<Shape> pool_in;
  Tensor pool4, conv7;  // taps
  std::uint64_t seed6 = 0, seed7 = 0;
};

struct ForwardState {
  bool training = true;
  std::vector<StreamCache> streams;
  Tensor fused4, fused7;
  Tensor s4, s7, up2_out, fuse_sum, scores;
  std::size_t loc4 = 0, loc7 = 0;  // location-prior channels appended per tap
};

// One of the three fused-skip segmentation variants. Trunk: five blocks of
// [conv3x3-relu]x2 + maxpool2 at widths C,2C,4C,8C,8C, then conv6 (3x3,16C)
// and conv7 (1x1,16C), both with relu+dropout. Siamesed variants run the
// trunk twice with the SAME parameter ids (hard sharing) and concatenate the
// pool4 / conv7 taps; s-fcn-loc also concatenates the 2-channel location
// prior at the configured tap. Scores fuse FCN-16s style: 1x1 score convs,
// 2x upsample of the deep score, crop, sum, 16x upsample to input extent.
class Network {
 public:
  Network(ArchConfig cfg, ParameterStore& store);

  const ArchConfig& config() const { return cfg_; }

  // Registers all parameters (idempotent) and seeds them: trunk Gaussian
  // std sqrt(2/fan_in), biases zero, score layers zero, tconvs bilinear.
  void init_params();

  // aux must be present iff the variant is siamesed (3 channels, typically
  // replicate3 of a contour map). Deterministic given seed.
  Tensor forward(const Tensor& rgb, const Tensor* aux, bool training,
                 std::uint64_t seed) const;

  // Training-mode forward retaining every cache needed by backward().
  std::unique_ptr<ForwardState> forward_train(const Tensor& rgb, const Tensor* aux,
                                              std::uint64_t seed) const;
  const Tensor& scores(const ForwardState& st) const;
  const Tensor& pool4_tap(const ForwardState& st, std::size_t stream) const;
  const Tensor& conv7_tap(const ForwardState& st, std::size_t stream) const;

  // Accumulates gradients for every parameter into the store; shared ids
  // receive the sum of both streams' contributions.
  void backward(ForwardState& st, const Tensor& grad_scores);
  // Restricts trunk propagation to one stream (fusion-layer gradients still
  // accumulate); the shared-gradient sum-law tests build on this.
  void backward_streams(ForwardState& st, const Tensor& grad_scores, int only_stream);

  std::vector<std::string> param_ids() const;

 private:
  ArchConfig cfg_;
  ParameterStore* store_;
};

// Road-class (channel 1) softmax probability per pixel, flattened n*h*w.
std::vector<double> road_probability(const Tensor& scores);
// probability >= tau (inclusive boundary rule).
std::vector<int> predict_mask(const Tensor& scores, double tau);

}  // namespace sfcn

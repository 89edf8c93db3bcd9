#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "sfcn/metrics.hpp"

namespace sfcn {

struct Pt {
  double x = 0, y = 0;
};

// 3x3 projective map from perspective-image pixels to BEV pixels, row-major,
// normalized so m[8] == 1 when nonzero.
struct Homography {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  Pt apply(Pt p) const;
  Homography inverse() const;
  double det() const;

  static Homography identity() { return {}; }
  static Homography translation(double dx, double dy);
};

// Direct linear transform from 4 point correspondences; throws
// std::invalid_argument on degenerate (3-collinear) configurations.
Homography homography_from_points(const std::array<Pt, 4>& src,
                                  const std::array<Pt, 4>& dst);

// Inverse-warped plane with per-pixel validity (false where the sample falls
// outside the source).
struct WarpedPlane {
  std::size_t h = 0, w = 0;
  std::vector<double> v;
  std::vector<std::uint8_t> valid;
};

// H maps source (perspective) pixels to destination (BEV) pixels; each output
// pixel samples the source at H^-1 (x,y). Scores interpolate bilinearly.
WarpedPlane warp_scores_bev(const std::vector<double>& src, std::size_t h, std::size_t w,
                            const Homography& H, std::size_t out_h, std::size_t out_w);
// Ground-truth masks warp by nearest neighbor; out-of-source samples get
// kVoidLabel.
std::vector<int> warp_mask_bev(const std::vector<int>& gt, std::size_t h, std::size_t w,
                               const Homography& H, std::size_t out_h, std::size_t out_w);

struct BevEvaluation {
  MetricsReport at_tau;  // at the supplied default threshold
  MaxFResult max_f;
};

BevEvaluation evaluate_bev(const std::vector<double>& scores, const std::vector<int>& gt,
                           std::size_t h, std::size_t w, const Homography& H,
                           std::size_t out_h, std::size_t out_w, double tau, double gamma,
                           const std::vector<double>& sweep);

}  // namespace sfcn

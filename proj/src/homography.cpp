#include "sfcn/homography.hpp"

#include <cmath>
#include <stdexcept>

namespace sfcn {
namespace {

// Gaussian elimination with partial pivoting on an n x (n+1) augmented system.
void solve_linear(std::vector<double>& a, std::vector<double>& x, std::size_t n) {
  const std::size_t cols = n + 1;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r * cols + col]) > std::abs(a[piv * cols + col])) piv = r;
    if (std::abs(a[piv * cols + col]) < 1e-12)
      throw std::invalid_argument("homography: degenerate point configuration");
    if (piv != col)
      for (std::size_t k = 0; k < cols; ++k) std::swap(a[piv * cols + k], a[col * cols + k]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r * cols + col] / a[col * cols + col];
      for (std::size_t k = col; k < cols; ++k) a[r * cols + k] -= f * a[col * cols + k];
    }
  }
  x.resize(n);
  for (std::size_t r = 0; r < n; ++r) x[r] = a[r * cols + n] / a[r * cols + r];
}

}  // namespace

Pt Homography::apply(Pt p) const {
  const double z = m[6] * p.x + m[7] * p.y + m[8];
  return {(m[0] * p.x + m[1] * p.y + m[2]) / z, (m[3] * p.x + m[4] * p.y + m[5]) / z};
}

double Homography::det() const {
  return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

Homography Homography::inverse() const {
  const double d = det();
  if (std::abs(d) < 1e-12)
    throw std::invalid_argument("homography: non-invertible matrix");
  Homography r;
  r.m = {(m[4] * m[8] - m[5] * m[7]) / d, (m[2] * m[7] - m[1] * m[8]) / d,
         (m[1] * m[5] - m[2] * m[4]) / d, (m[5] * m[6] - m[3] * m[8]) / d,
         (m[0] * m[8] - m[2] * m[6]) / d, (m[2] * m[3] - m[0] * m[5]) / d,
         (m[3] * m[7] - m[4] * m[6]) / d, (m[1] * m[6] - m[0] * m[7]) / d,
         (m[0] * m[4] - m[1] * m[3]) / d};
  if (const double s = r.m[8]; s != 0.0)
    for (auto& v : r.m) v /= s;
  return r;
}

Homography Homography::translation(double dx, double dy) {
  Homography h;
  h.m = {1, 0, dx, 0, 1, dy, 0, 0, 1};
  return h;
}

Homography homography_from_points(const std::array<Pt, 4>& src,
                                  const std::array<Pt, 4>& dst) {
  // 8x8 system for h0..h7 with h8 fixed at 1
  std::vector<double> a(8 * 9, 0.0);
  for (int i = 0; i < 4; ++i) {
    const double x = src[i].x, y = src[i].y, X = dst[i].x, Y = dst[i].y;
    double* r0 = &a[(2 * i) * 9];
    double* r1 = &a[(2 * i + 1) * 9];
    r0[0] = x; r0[1] = y; r0[2] = 1; r0[6] = -X * x; r0[7] = -X * y; r0[8] = X;
    r1[3] = x; r1[4] = y; r1[5] = 1; r1[6] = -Y * x; r1[7] = -Y * y; r1[8] = Y;
  }
  std::vector<double> h;
  solve_linear(a, h, 8);
  Homography H;
  for (int i = 0; i < 8; ++i) H.m[std::size_t(i)] = h[std::size_t(i)];
  H.m[8] = 1.0;
  if (std::abs(H.det()) < 1e-12)
    throw std::invalid_argument("homography: degenerate point configuration");
  return H;
}

WarpedPlane warp_scores_bev(const std::vector<double>& src, std::size_t h, std::size_t w,
                            const Homography& H, std::size_t out_h, std::size_t out_w) {
  const Homography inv = H.inverse();
  WarpedPlane out{out_h, out_w, std::vector<double>(out_h * out_w, 0.0),
                  std::vector<std::uint8_t>(out_h * out_w, 0)};
  for (std::size_t i = 0; i < out_h; ++i)
    for (std::size_t j = 0; j < out_w; ++j) {
      const Pt p = inv.apply({double(j), double(i)});
      if (p.x < 0 || p.y < 0 || p.x > double(w - 1) || p.y > double(h - 1)) continue;
      const std::size_t x0 = std::min(std::size_t(p.x), w - 1);
      const std::size_t y0 = std::min(std::size_t(p.y), h - 1);
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const std::size_t y1 = std::min(y0 + 1, h - 1);
      const double dx = p.x - double(x0), dy = p.y - double(y0);
      out.v[i * out_w + j] =
          (1 - dy) * ((1 - dx) * src[y0 * w + x0] + dx * src[y0 * w + x1]) +
          dy * ((1 - dx) * src[y1 * w + x0] + dx * src[y1 * w + x1]);
      out.valid[i * out_w + j] = 1;
    }
  return out;
}

std::vector<int> warp_mask_bev(const std::vector<int>& gt, std::size_t h, std::size_t w,
                               const Homography& H, std::size_t out_h, std::size_t out_w) {
  const Homography inv = H.inverse();
  std::vector<int> out(out_h * out_w, kVoidLabel);
  for (std::size_t i = 0; i < out_h; ++i)
    for (std::size_t j = 0; j < out_w; ++j) {
      const Pt p = inv.apply({double(j), double(i)});
      const long xi = std::lround(p.x), yi = std::lround(p.y);
      if (xi < 0 || yi < 0 || xi >= long(w) || yi >= long(h)) continue;
      out[i * out_w + j] = gt[std::size_t(yi) * w + std::size_t(xi)];
    }
  return out;
}

BevEvaluation evaluate_bev(const std::vector<double>& scores, const std::vector<int>& gt,
                           std::size_t h, std::size_t w, const Homography& H,
                           std::size_t out_h, std::size_t out_w, double tau, double gamma,
                           const std::vector<double>& sweep) {
  const WarpedPlane ws = warp_scores_bev(scores, h, w, H, out_h, out_w);
  std::vector<int> wg = warp_mask_bev(gt, h, w, H, out_h, out_w);
  for (std::size_t i = 0; i < wg.size(); ++i)
    if (!ws.valid[i]) wg[i] = kVoidLabel;
  BevEvaluation e;
  e.at_tau = metrics(confusion(ws.v, wg, tau), gamma);
  e.max_f = max_f(ws.v, wg, gamma, sweep);
  return e;
}

}  // namespace sfcn

#include "sfcn/layers.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "sfcn/kernels.hpp"
#include "sfcn/rng.hpp"

namespace sfcn {
namespace {

Tensor pad_spatial(const Tensor& x, std::size_t p) {
  if (p == 0) return x;
  const Shape& s = x.shape();
  Tensor out(Shape{s.n, s.c, s.h + 2 * p, s.w + 2 * p});
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t i = 0; i < s.h; ++i)
        std::memcpy(out.row(n, c, i + p) + p, x.row(n, c, i), s.w * sizeof(double));
  return out;
}

Tensor unpad_spatial(const Tensor& x, std::size_t p, Shape target) {
  if (p == 0) return x;
  Tensor out(target);
  for (std::size_t n = 0; n < target.n; ++n)
    for (std::size_t c = 0; c < target.c; ++c)
      for (std::size_t i = 0; i < target.h; ++i)
        std::memcpy(out.row(n, c, i), x.row(n, c, i + p) + p, target.w * sizeof(double));
  return out;
}

}  // namespace

void register_conv(ParameterStore& store, const std::string& id, std::size_t oc,
                   std::size_t ic, std::size_t kh, std::size_t kw) {
  store.create(id + ".w", Shape{oc, ic, kh, kw}, ParamRole::Weight);
  store.create(id + ".b", Shape{oc, 1, 1, 1}, ParamRole::Bias);
}

void register_tconv(ParameterStore& store, const std::string& id, std::size_t ic,
                    std::size_t oc, std::size_t factor) {
  store.create(id + ".w", Shape{ic, oc, 2 * factor, 2 * factor}, ParamRole::Weight);
}

Tensor conv2d_forward(const Tensor& x, const ParameterStore& store,
                      const std::string& id, std::size_t stride, std::size_t pad) {
  const Param& wp = store.at(id + ".w");
  const Param& bp = store.at(id + ".b");
  const Shape& ws = wp.shape;  // (oc, ic, kh, kw)
  const Shape& xs = x.shape();
  if (ws.c != xs.c)
    throw ShapeError("conv2d '" + id + "': input has " + std::to_string(xs.c) +
                     " channels, kernel expects " + std::to_string(ws.c));
  const std::size_t ph = xs.h + 2 * pad, pw = xs.w + 2 * pad;
  if (ws.h > ph || ws.w > pw)
    throw ShapeError("conv2d '" + id + "': kernel larger than padded input");
  const std::size_t oh = (ph - ws.h) / stride + 1;
  const std::size_t ow = (pw - ws.w) / stride + 1;

  const Tensor xpad = pad_spatial(x, pad);
  Tensor out(Shape{xs.n, ws.n, oh, ow});
  const auto& K = kernels::active();
  for (std::size_t n = 0; n < xs.n; ++n)
    for (std::size_t o = 0; o < ws.n; ++o) {
      const double b = bp.value[o];
      for (std::size_t i = 0; i < oh; ++i) {
        double* orow = out.row(n, o, i);
        for (std::size_t j = 0; j < ow; ++j) orow[j] = b;
      }
      for (std::size_t c = 0; c < ws.c; ++c)
        for (std::size_t u = 0; u < ws.h; ++u)
          for (std::size_t v = 0; v < ws.w; ++v) {
            const double wv = wp.value[((o * ws.c + c) * ws.h + u) * ws.w + v];
            for (std::size_t i = 0; i < oh; ++i) {
              const double* src = xpad.row(n, c, i * stride + u) + v;
              double* orow = out.row(n, o, i);
              if (stride == 1) {
                K.axpy(orow, src, wv, ow);
              } else {
                for (std::size_t j = 0; j < ow; ++j) orow[j] += wv * src[j * stride];
              }
            }
          }
    }
  return out;
}

Tensor conv2d_backward(const Tensor& x, const Tensor& grad_out, ParameterStore& store,
                       const std::string& id, std::size_t stride, std::size_t pad) {
  const Param& wp = store.at(id + ".w");
  const Shape& ws = wp.shape;
  const Shape& xs = x.shape();
  const Shape& gs = grad_out.shape();
  const std::size_t oh = (xs.h + 2 * pad - ws.h) / stride + 1;
  const std::size_t ow = (xs.w + 2 * pad - ws.w) / stride + 1;
  if (gs.n != xs.n || gs.c != ws.n || gs.h != oh || gs.w != ow)
    throw ShapeError("conv2d_backward '" + id + "': grad_out shape " + gs.str() +
                     " does not match forward output");

  const Tensor xpad = pad_spatial(x, pad);
  Tensor gxpad(xpad.shape());
  std::vector<double> gw(wp.numel(), 0.0);
  std::vector<double> gb(ws.n, 0.0);
  const auto& K = kernels::active();
  for (std::size_t n = 0; n < xs.n; ++n)
    for (std::size_t o = 0; o < ws.n; ++o) {
      for (std::size_t i = 0; i < oh; ++i) {
        const double* grow = grad_out.row(n, o, i);
        for (std::size_t j = 0; j < ow; ++j) gb[o] += grow[j];
      }
      for (std::size_t c = 0; c < ws.c; ++c)
        for (std::size_t u = 0; u < ws.h; ++u)
          for (std::size_t v = 0; v < ws.w; ++v) {
            const std::size_t widx = ((o * ws.c + c) * ws.h + u) * ws.w + v;
            const double wv = wp.value[widx];
            for (std::size_t i = 0; i < oh; ++i) {
              const double* grow = grad_out.row(n, o, i);
              if (stride == 1) {
                const double* xr = xpad.row(n, c, i + u) + v;
                gw[widx] += K.dot(grow, xr, ow);
                K.axpy(gxpad.row(n, c, i + u) + v, grow, wv, ow);
              } else {
                const double* xr = xpad.row(n, c, i * stride + u) + v;
                double* gxr = gxpad.row(n, c, i * stride + u) + v;
                for (std::size_t j = 0; j < ow; ++j) {
                  gw[widx] += grow[j] * xr[j * stride];
                  gxr[j * stride] += wv * grow[j];
                }
              }
            }
          }
    }
  store.accumulate_grad(id + ".w", gw);
  store.accumulate_grad(id + ".b", gb);
  return unpad_spatial(gxpad, pad, xs);
}

PoolResult maxpool2_forward(const Tensor& x) {
  const Shape& s = x.shape();
  if (s.h % 2 != 0 || s.w % 2 != 0)
    throw ShapeError("maxpool2: spatial extents must be even, got " + s.str());
  PoolResult r{Tensor(Shape{s.n, s.c, s.h / 2, s.w / 2}), {}};
  r.argmax.resize(r.out.size());
  std::size_t oi = 0;
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t c = 0; c < s.c; ++c)
      for (std::size_t i = 0; i < s.h; i += 2)
        for (std::size_t j = 0; j < s.w; j += 2) {
          // candidates in flat-index order so ties go to the smallest index
          const std::size_t base = ((n * s.c + c) * s.h + i) * s.w + j;
          const std::size_t cand[4] = {base, base + 1, base + s.w, base + s.w + 1};
          std::size_t best = cand[0];
          for (int k = 1; k < 4; ++k)
            if (x[cand[k]] > x[best]) best = cand[k];
          r.out[oi] = x[best];
          r.argmax[oi] = std::uint32_t(best);
          ++oi;
        }
  return r;
}

Tensor maxpool2_backward(const PoolResult& cache, const Tensor& grad_out,
                         Shape in_shape) {
  if (grad_out.shape() != cache.out.shape())
    throw ShapeError("maxpool2_backward: grad_out shape mismatch");
  Tensor gx(in_shape);
  for (std::size_t i = 0; i < cache.argmax.size(); ++i)
    gx[cache.argmax[i]] += grad_out[i];
  return gx;
}

Tensor relu(const Tensor& x) {
  Tensor y(x.shape());
  kernels::active().relu(y.data(), x.data(), x.size());
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
  if (x.shape() != grad_out.shape())
    throw ShapeError("relu_backward: shape mismatch");
  Tensor gx(x.shape());
  kernels::active().relu_mask(gx.data(), x.data(), grad_out.data(), x.size());
  return gx;
}

Tensor dropout(const Tensor& x, double rate, std::uint64_t seed, bool training) {
  if (rate >= 1.0 || rate < 0.0)
    throw std::invalid_argument("dropout: rate must be in [0,1)");
  if (!training || rate == 0.0) return x;
  const Shape& s = x.shape();
  const std::size_t plane = s.c * s.h * s.w;
  Tensor y(s);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (std::size_t n = 0; n < s.n; ++n) {
    Rng rng(mix_seed(seed, n));  // per-item stream: batch-splitting safe
    const double* xp = x.data() + n * plane;
    double* yp = y.data() + n * plane;
    for (std::size_t i = 0; i < plane; ++i)
      yp[i] = rng.uniform() < rate ? 0.0 : xp[i] * keep_scale;
  }
  return y;
}

Tensor dropout_backward(const Tensor& grad_out, double rate, std::uint64_t seed,
                        bool training) {
  // dropout is elementwise linear with a seed-determined mask, so the
  // backward map is the same masking applied to the incoming gradient
  return dropout(grad_out, rate, seed, training);
}

Tensor tconv2d_forward(const Tensor& x, const ParameterStore& store,
                       const std::string& id, std::size_t factor) {
  if (factor < 1 || factor % 2 != 0)
    throw std::invalid_argument("tconv2d: factor must be a positive even integer");
  const Param& wp = store.at(id + ".w");  // (ic, oc, k, k)
  const Shape& ws = wp.shape;
  const Shape& xs = x.shape();
  if (ws.n != xs.c)
    throw ShapeError("tconv2d '" + id + "': channel mismatch");
  const std::size_t k = 2 * factor, s = factor, p = factor / 2;
  const std::size_t oh = xs.h * factor, ow = xs.w * factor;
  Tensor out(Shape{xs.n, ws.c, oh, ow});
  for (std::size_t n = 0; n < xs.n; ++n)
    for (std::size_t c = 0; c < xs.c; ++c)
      for (std::size_t i = 0; i < xs.h; ++i)
        for (std::size_t j = 0; j < xs.w; ++j) {
          const double xv = x.at(n, c, i, j);
          if (xv == 0.0) continue;
          for (std::size_t o = 0; o < ws.c; ++o)
            for (std::size_t u = 0; u < k; ++u) {
              const std::size_t y = i * s + u;
              if (y < p || y - p >= oh) continue;
              for (std::size_t v = 0; v < k; ++v) {
                const std::size_t xx = j * s + v;
                if (xx < p || xx - p >= ow) continue;
                out.at(n, o, y - p, xx - p) +=
                    wp.value[((c * ws.c + o) * k + u) * k + v] * xv;
              }
            }
        }
  return out;
}

Tensor tconv2d_adjoint_conv(const Tensor& y, const ParameterStore& store,
                            const std::string& id, std::size_t factor) {
  const Param& wp = store.at(id + ".w");  // (ic, oc, k, k)
  const Shape& ws = wp.shape;
  const Shape& ys = y.shape();
  if (ws.c != ys.c)
    throw ShapeError("tconv2d adjoint '" + id + "': channel mismatch");
  const std::size_t k = 2 * factor, s = factor, p = factor / 2;
  const std::size_t oh = (ys.h + 2 * p - k) / s + 1;
  const std::size_t ow = (ys.w + 2 * p - k) / s + 1;
  const Tensor ypad = pad_spatial(y, p);
  Tensor out(Shape{ys.n, ws.n, oh, ow});
  for (std::size_t n = 0; n < ys.n; ++n)
    for (std::size_t c = 0; c < ws.n; ++c)
      for (std::size_t o = 0; o < ws.c; ++o)
        for (std::size_t u = 0; u < k; ++u)
          for (std::size_t v = 0; v < k; ++v) {
            const double wv = wp.value[((c * ws.c + o) * k + u) * k + v];
            for (std::size_t i = 0; i < oh; ++i) {
              const double* yr = ypad.row(n, o, i * s + u) + v;
              double* orow = out.row(n, c, i);
              for (std::size_t j = 0; j < ow; ++j) orow[j] += wv * yr[j * s];
            }
          }
  return out;
}

Tensor tconv2d_backward(const Tensor& x, const Tensor& grad_out, ParameterStore& store,
                        const std::string& id, std::size_t factor) {
  const Param& wp = store.at(id + ".w");
  const Shape& ws = wp.shape;
  const Shape& xs = x.shape();
  const Shape& gs = grad_out.shape();
  if (gs.n != xs.n || gs.c != ws.c || gs.h != xs.h * factor || gs.w != xs.w * factor)
    throw ShapeError("tconv2d_backward '" + id + "': grad_out shape mismatch");
  const std::size_t k = 2 * factor, s = factor, p = factor / 2;
  std::vector<double> gw(wp.numel(), 0.0);
  for (std::size_t n = 0; n < xs.n; ++n)
    for (std::size_t c = 0; c < xs.c; ++c)
      for (std::size_t i = 0; i < xs.h; ++i)
        for (std::size_t j = 0; j < xs.w; ++j) {
          const double xv = x.at(n, c, i, j);
          if (xv == 0.0) continue;
          for (std::size_t o = 0; o < ws.c; ++o)
            for (std::size_t u = 0; u < k; ++u) {
              const std::size_t y = i * s + u;
              if (y < p || y - p >= gs.h) continue;
              for (std::size_t v = 0; v < k; ++v) {
                const std::size_t xx = j * s + v;
                if (xx < p || xx - p >= gs.w) continue;
                gw[((c * ws.c + o) * k + u) * k + v] +=
                    xv * grad_out.at(n, o, y - p, xx - p);
              }
            }
        }
  store.accumulate_grad(id + ".w", gw);
  return tconv2d_adjoint_conv(grad_out, store, id, factor);
}

void bilinear_fill(std::vector<double>& w, std::size_t channels, std::size_t k) {
  const std::size_t fi = (k + 1) / 2;
  const double f = double(fi);
  const double c = (2.0 * f - 1.0 - double(fi % 2)) / (2.0 * f);
  // FCN bilinear filler: value(i,j) = (1-|i/f-c|)(1-|j/f-c|) on the channel
  // diagonal, zero across channels
  std::fill(w.begin(), w.end(), 0.0);
  for (std::size_t ch = 0; ch < channels; ++ch)
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        const double vi = 1.0 - std::abs(double(i) / f - c);
        const double vj = 1.0 - std::abs(double(j) / f - c);
        w[((ch * channels + ch) * k + i) * k + j] = vi * vj;
      }
}

LossResult softmax_xent_perpixel(const Tensor& logits, const LabelMap& labels,
                                 const LossConfig& cfg) {
  const Shape& s = logits.shape();
  if (std::size_t(cfg.classes) != s.c)
    throw ShapeError("softmax loss: logits have " + std::to_string(s.c) +
                     " channels, config expects " + std::to_string(cfg.classes));
  if (labels.n != s.n || labels.h != s.h || labels.w != s.w)
    throw ShapeError("softmax loss: label map extent mismatch");

  // first pass: count evaluated pixels so the mean scale is known up front
  std::size_t valid = 0;
  for (int lv : labels.v) {
    if (lv == LabelMap::kIgnore) continue;
    if (lv < 0 || lv >= cfg.classes)
      throw std::out_of_range("softmax loss: label " + std::to_string(lv) +
                              " out of range");
    ++valid;
  }
  const double scale =
      cfg.reduction == LossConfig::Reduction::Mean ? (valid ? 1.0 / double(valid) : 0.0)
                                                   : 1.0;

  LossResult r{0.0, Tensor(s)};
  std::vector<double> prob(s.c);
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t i = 0; i < s.h; ++i)
      for (std::size_t j = 0; j < s.w; ++j) {
        const int lab = labels.at(n, i, j);
        if (lab == LabelMap::kIgnore) continue;
        double m = logits.at(n, 0, i, j);
        for (std::size_t c = 1; c < s.c; ++c) m = std::max(m, logits.at(n, c, i, j));
        double z = 0.0;
        for (std::size_t c = 0; c < s.c; ++c) {
          prob[c] = std::exp(logits.at(n, c, i, j) - m);
          z += prob[c];
        }
        r.loss += scale * (std::log(z) + m - logits.at(n, std::size_t(lab), i, j));
        for (std::size_t c = 0; c < s.c; ++c)
          r.grad_logits.at(n, c, i, j) =
              scale * (prob[c] / z - (std::size_t(lab) == c ? 1.0 : 0.0));
      }
  return r;
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

double grad_check(const std::function<double()>& loss, std::vector<GradProbe> probes,
                  double eps) {
  double worst = 0.0;
  for (const GradProbe& pr : probes) {
    const double saved = *pr.value;
    *pr.value = saved + eps;
    const double fp = loss();
    *pr.value = saved - eps;
    const double fm = loss();
    *pr.value = saved;
    const double numeric = (fp - fm) / (2.0 * eps);
    worst = std::max(worst, relative_error(pr.analytic, numeric));
  }
  return worst;
}

}  // namespace sfcn

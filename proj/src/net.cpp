#include "sfcn/net.hpp"

#include <cmath>
#include <stdexcept>

#include "sfcn/rng.hpp"

namespace sfcn {
namespace {

constexpr const char* kTrunkIds[10] = {"conv1_1", "conv1_2", "conv2_1", "conv2_2",
                                       "conv3_1", "conv3_2", "conv4_1", "conv4_2",
                                       "conv5_1", "conv5_2"};
constexpr std::size_t kBlockMult[5] = {1, 2, 4, 8, 8};

std::uint64_t id_seed(std::uint64_t seed, const std::string& id) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : id) h = (h ^ std::uint64_t(std::uint8_t(c))) * 1099511628211ULL;
  return mix_seed(seed, h);
}

// Adjoint of center_crop: place grad back into a zero tensor of the
// pre-crop extent at the same centered offset.
Tensor crop_adjoint(const Tensor& g, Shape pre) {
  Tensor out(pre);
  const Shape& gs = g.shape();
  const std::size_t oh = (pre.h - gs.h) / 2, ow = (pre.w - gs.w) / 2;
  for (std::size_t n = 0; n < gs.n; ++n)
    for (std::size_t c = 0; c < gs.c; ++c)
      for (std::size_t i = 0; i < gs.h; ++i)
        for (std::size_t j = 0; j < gs.w; ++j)
          out.at(n, c, i + oh, j + ow) = g.at(n, c, i, j);
  return out;
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Fcn: return "fcn";
    case Variant::SFcn: return "s-fcn";
    case Variant::SFcnLoc: return "s-fcn-loc";
  }
  return "?";
}

std::string to_string(AttachPoint a) {
  return a == AttachPoint::Pool4 ? "pool4-tap" : "conv7-tap";
}

Variant variant_from_string(const std::string& s) {
  if (s == "fcn") return Variant::Fcn;
  if (s == "s-fcn") return Variant::SFcn;
  if (s == "s-fcn-loc") return Variant::SFcnLoc;
  throw std::invalid_argument("unknown variant '" + s + "' (fcn|s-fcn|s-fcn-loc)");
}

AttachPoint attach_from_string(const std::string& s) {
  if (s == "pool4-tap" || s == "pool4") return AttachPoint::Pool4;
  if (s == "conv7-tap" || s == "conv7") return AttachPoint::Conv7;
  throw std::invalid_argument("unknown attach point '" + s +
                              "' (pool4-tap|conv7-tap)");
}

void ArchConfig::validate() const {
  if (input == 0 || input % 32 != 0)
    throw std::invalid_argument("arch: input extent must be a positive multiple of 32");
  if (width < 1) throw std::invalid_argument("arch: base width must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0)
    throw std::invalid_argument("arch: dropout rate must be in [0,1)");
}

Network::Network(ArchConfig cfg, ParameterStore& store) : cfg_(cfg), store_(&store) {
  cfg_.validate();
  const std::size_t C = cfg_.width;
  std::size_t ic = 3;
  for (std::size_t b = 0; b < 5; ++b) {
    const std::size_t oc = C * kBlockMult[b];
    register_conv(store, kTrunkIds[2 * b], oc, ic, 3, 3);
    register_conv(store, kTrunkIds[2 * b + 1], oc, oc, 3, 3);
    ic = oc;
  }
  register_conv(store, "conv6", 16 * C, 8 * C, 3, 3);
  register_conv(store, "conv7", 16 * C, 16 * C, 1, 1);

  const std::size_t streams = cfg_.siamesed() ? 2 : 1;
  const bool loc = cfg_.variant == Variant::SFcnLoc;
  const std::size_t c4 = streams * 8 * C + (loc && cfg_.attach == AttachPoint::Pool4 ? 2 : 0);
  const std::size_t c7 = streams * 16 * C + (loc && cfg_.attach == AttachPoint::Conv7 ? 2 : 0);
  register_conv(store, "score_p4", 2, c4, 1, 1);
  register_conv(store, "score_c7", 2, c7, 1, 1);
  register_tconv(store, "up2", 2, 2, 2);
  register_tconv(store, "up16", 2, 2, 16);
}

void Network::init_params() {
  for (auto& [id, p] : *store_) {
    std::fill(p.momentum.begin(), p.momentum.end(), 0.0);
    std::fill(p.grad.begin(), p.grad.end(), 0.0);
    if (p.role == ParamRole::Bias || id.starts_with("score_")) {
      std::fill(p.value.begin(), p.value.end(), 0.0);
    } else if (id.starts_with("up")) {
      bilinear_fill(p.value, p.shape.n, p.shape.h);
    } else {
      const double std_dev = std::sqrt(2.0 / double(p.shape.c * p.shape.h * p.shape.w));
      Rng rng(id_seed(cfg_.seed, id));
      for (auto& v : p.value) v = std_dev * rng.gaussian();
    }
  }
}

std::vector<std::string> Network::param_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, p] : *store_) ids.push_back(id);
  return ids;
}

namespace {

StreamCache run_stream(const Tensor& input, const ParameterStore& store, double rate,
                       bool training, std::uint64_t seed, std::size_t stream_idx) {
  StreamCache sc;
  Tensor x = input;
  for (std::size_t b = 0; b < 5; ++b) {
    for (std::size_t k = 0; k < 2; ++k) {
      sc.conv_in.push_back(x);
      Tensor pre = conv2d_forward(x, store, kTrunkIds[2 * b + k], 1, 1);
      x = relu(pre);
      sc.conv_pre.push_back(std::move(pre));
    }
    sc.pool_in.push_back(x.shape());
    PoolResult pr = maxpool2_forward(x);
    x = pr.out;
    sc.pools.push_back(std::move(pr));
    if (b == 3) sc.pool4 = x;
  }
  sc.conv_in.push_back(x);
  Tensor pre6 = conv2d_forward(x, store, "conv6", 1, 1);
  x = relu(pre6);
  sc.conv_pre.push_back(std::move(pre6));
  sc.seed6 = mix_seed(seed, 600 + stream_idx);
  x = dropout(x, rate, sc.seed6, training);

  sc.conv_in.push_back(x);
  Tensor pre7 = conv2d_forward(x, store, "conv7", 1, 0);
  x = relu(pre7);
  sc.conv_pre.push_back(std::move(pre7));
  sc.seed7 = mix_seed(seed, 700 + stream_idx);
  sc.conv7 = dropout(x, rate, sc.seed7, training);
  return sc;
}

// Propagates tap gradients through one stream; accumulates into store.
void stream_backward(const StreamCache& sc, ParameterStore& store, double rate,
                     bool training, const Tensor& g7_tap, const Tensor& g4_tap) {
  Tensor g = dropout_backward(g7_tap, rate, sc.seed7, training);
  g = relu_backward(sc.conv_pre[11], g);
  g = conv2d_backward(sc.conv_in[11], g, store, "conv7", 1, 0);
  g = dropout_backward(g, rate, sc.seed6, training);
  g = relu_backward(sc.conv_pre[10], g);
  g = conv2d_backward(sc.conv_in[10], g, store, "conv6", 1, 1);
  for (std::size_t rb = 0; rb < 5; ++rb) {
    const std::size_t b = 4 - rb;
    g = maxpool2_backward(sc.pools[b], g, sc.pool_in[b]);
    for (std::size_t rk = 0; rk < 2; ++rk) {
      const std::size_t k = 2 * b + 1 - rk;
      g = relu_backward(sc.conv_pre[k], g);
      g = conv2d_backward(sc.conv_in[k], g, store, kTrunkIds[k], 1, 1);
    }
    if (b == 4) g = elementwise_add(g, g4_tap);  // tap grad joins at pool4's output
  }
}

Tensor broadcast_prior(const LocationPrior& p, std::size_t batch) {
  const Shape& s = p.values.shape();
  Tensor out(Shape{batch, s.c, s.h, s.w});
  const std::size_t plane = s.c * s.h * s.w;
  for (std::size_t n = 0; n < batch; ++n)
    std::copy(p.values.data(), p.values.data() + plane, out.data() + n * plane);
  return out;
}

}  // namespace

namespace {

std::unique_ptr<ForwardState> forward_impl(const ArchConfig& cfg,
                                           const ParameterStore& store, const Tensor& rgb,
                                           const Tensor* aux, bool training,
                                           std::uint64_t seed) {
  const Shape& rs = rgb.shape();
  if (rs.c != 3 || rs.h != cfg.input || rs.w != cfg.input)
    throw ShapeError("forward: rgb must be (n,3," + std::to_string(cfg.input) + "," +
                     std::to_string(cfg.input) + "), got " + rs.str());
  if (cfg.siamesed()) {
    if (!aux) throw ShapeError("forward: siamesed variant requires the aux stream");
    if (aux->shape() != rs)
      throw ShapeError("forward: aux shape " + aux->shape().str() +
                       " != rgb shape " + rs.str());
  } else if (aux) {
    throw ShapeError("forward: fcn variant takes no aux stream");
  }

  auto st = std::make_unique<ForwardState>();
  st->training = training;
  st->streams.push_back(run_stream(rgb, store, cfg.dropout, training, seed, 0));
  if (cfg.siamesed())
    st->streams.push_back(run_stream(*aux, store, cfg.dropout, training, seed, 1));

  st->fused4 = st->streams.size() == 2
                   ? concat_channels(st->streams[0].pool4, st->streams[1].pool4)
                   : st->streams[0].pool4;
  st->fused7 = st->streams.size() == 2
                   ? concat_channels(st->streams[0].conv7, st->streams[1].conv7)
                   : st->streams[0].conv7;
  if (cfg.variant == Variant::SFcnLoc) {
    if (cfg.attach == AttachPoint::Pool4) {
      const Shape& s = st->fused4.shape();
      st->fused4 = concat_channels(st->fused4,
                                   broadcast_prior(location_maps(s.h, s.w), s.n));
      st->loc4 = 2;
    } else {
      const Shape& s = st->fused7.shape();
      st->fused7 = concat_channels(st->fused7,
                                   broadcast_prior(location_maps(s.h, s.w), s.n));
      st->loc7 = 2;
    }
  }

  st->s4 = conv2d_forward(st->fused4, store, "score_p4", 1, 0);
  st->s7 = conv2d_forward(st->fused7, store, "score_c7", 1, 0);
  st->up2_out = tconv2d_forward(st->s7, store, "up2", 2);
  const Tensor cropped =
      center_crop(st->up2_out, st->s4.shape().h, st->s4.shape().w);
  st->fuse_sum = elementwise_add(st->s4, cropped);
  st->scores = tconv2d_forward(st->fuse_sum, store, "up16", 16);
  return st;
}

}  // namespace

std::unique_ptr<ForwardState> Network::forward_train(const Tensor& rgb, const Tensor* aux,
                                                     std::uint64_t seed) const {
  return forward_impl(cfg_, *store_, rgb, aux, true, seed);
}

Tensor Network::forward(const Tensor& rgb, const Tensor* aux, bool training,
                        std::uint64_t seed) const {
  return std::move(forward_impl(cfg_, *store_, rgb, aux, training, seed)->scores);
}

const Tensor& Network::scores(const ForwardState& st) const { return st.scores; }
const Tensor& Network::pool4_tap(const ForwardState& st, std::size_t stream) const {
  return st.streams.at(stream).pool4;
}
const Tensor& Network::conv7_tap(const ForwardState& st, std::size_t stream) const {
  return st.streams.at(stream).conv7;
}

void Network::backward(ForwardState& st, const Tensor& grad_scores) {
  backward_streams(st, grad_scores, -1);
}

void Network::backward_streams(ForwardState& st, const Tensor& grad_scores,
                               int only_stream) {
  ParameterStore& store = *store_;
  Tensor gfuse = tconv2d_backward(st.fuse_sum, grad_scores, store, "up16", 16);
  Tensor gup2 = crop_adjoint(gfuse, st.up2_out.shape());
  Tensor gs7 = tconv2d_backward(st.s7, gup2, store, "up2", 2);
  Tensor g4full = conv2d_backward(st.fused4, gfuse, store, "score_p4", 1, 0);
  Tensor g7full = conv2d_backward(st.fused7, gs7, store, "score_c7", 1, 0);
  // drop the location-prior channels (constants take no gradient)
  const std::size_t c4 = g4full.shape().c - st.loc4;
  const std::size_t c7 = g7full.shape().c - st.loc7;
  Tensor g4 = st.loc4 ? slice_channels(g4full, 0, c4) : std::move(g4full);
  Tensor g7 = st.loc7 ? slice_channels(g7full, 0, c7) : std::move(g7full);

  const std::size_t nstreams = st.streams.size();
  for (std::size_t s = 0; s < nstreams; ++s) {
    if (only_stream >= 0 && std::size_t(only_stream) != s) continue;
    const std::size_t w4 = c4 / nstreams, w7 = c7 / nstreams;
    Tensor g4s = nstreams == 2 ? slice_channels(g4, s * w4, (s + 1) * w4) : g4;
    Tensor g7s = nstreams == 2 ? slice_channels(g7, s * w7, (s + 1) * w7) : g7;
    stream_backward(st.streams[s], store, cfg_.dropout, st.training, g7s, g4s);
  }
}

std::vector<double> road_probability(const Tensor& scores) {
  const Shape& s = scores.shape();
  if (s.c != 2) throw ShapeError("road_probability: expected 2-channel scores");
  std::vector<double> out;
  out.reserve(s.n * s.h * s.w);
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t i = 0; i < s.h; ++i)
      for (std::size_t j = 0; j < s.w; ++j) {
        const double a = scores.at(n, 0, i, j), b = scores.at(n, 1, i, j);
        out.push_back(1.0 / (1.0 + std::exp(a - b)));
      }
  return out;
}

std::vector<int> predict_mask(const Tensor& scores, double tau) {
  if (tau <= 0.0 || tau >= 1.0)
    throw std::invalid_argument("predict: tau must be in (0,1)");
  const std::vector<double> p = road_probability(scores);
  std::vector<int> mask(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) mask[i] = p[i] >= tau ? 1 : 0;
  return mask;
}

}  // namespace sfcn

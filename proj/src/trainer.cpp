#include "sfcn/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sfcn/contour.hpp"
#include "sfcn/image_io.hpp"
#include "sfcn/metrics.hpp"
#include "sfcn/rng.hpp"

namespace sfcn {
namespace {

Tensor stack_batch(const std::vector<Tensor>& items, const std::vector<std::size_t>& idx) {
  const Shape& s0 = items[idx[0]].shape();
  Tensor out(Shape{idx.size(), s0.c, s0.h, s0.w});
  const std::size_t plane = s0.c * s0.h * s0.w;
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const Tensor& t = items[idx[b]];
    if (!(t.shape().c == s0.c && t.shape().h == s0.h && t.shape().w == s0.w))
      throw ShapeError("stack_batch: mixed extents");
    std::memcpy(out.data() + b * plane, t.data(), plane * sizeof(double));
  }
  return out;
}

LabelMap stack_labels(const Dataset& data, const std::vector<std::size_t>& idx) {
  const Sample& s0 = data.samples[idx[0]];
  const std::size_t h = s0.image.shape().h, w = s0.image.shape().w;
  LabelMap lm{idx.size(), h, w, {}};
  lm.v.reserve(idx.size() * h * w);
  for (std::size_t b : idx)
    for (int m : data.samples[b].mask)
      lm.v.push_back(m == kVoidLabel ? LabelMap::kIgnore : m);
  return lm;
}

}  // namespace

Tensor stream_input(const Dataset& data, std::size_t index) {
  ContourMap c = !data.contour_paths.empty() && !data.contour_paths[index].empty()
                     ? load_contour(data.contour_paths[index])
                     : detect_contour(data.samples[index].image);
  const Shape& s = data.samples[index].image.shape();
  if (c.h != s.h || c.w != s.w)
    throw IoError("contour extent mismatch for sample " + std::to_string(index));
  return replicate3(c);
}

MetricsReport evaluate_dataset(const Network& net, const Dataset& data, double tau) {
  ConfusionCounts pooled;
  pooled.tau = tau;
  const bool twin = net.config().siamesed();
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    const Sample& s = data.samples[i];
    Tensor aux;
    if (twin) aux = stream_input(data, i);
    const Tensor scores = net.forward(s.image, twin ? &aux : nullptr, false, 0);
    const std::vector<double> prob = road_probability(scores);
    const ConfusionCounts c = confusion(prob, s.mask, tau);
    pooled.tp += c.tp;
    pooled.fp += c.fp;
    pooled.tn += c.tn;
    pooled.fn += c.fn;
  }
  return metrics(pooled);
}

TrainResult train(Network& net, ParameterStore& store, const Dataset& data,
                  const TrainConfig& cfg, const Dataset* val) {
  if (cfg.iterations < 1) throw std::invalid_argument("train: iterations must be >= 1");
  if (cfg.batch < 1) throw std::invalid_argument("train: batch must be >= 1");
  const std::size_t input = net.config().input;
  for (const Sample& s : data.samples)
    if (s.image.shape().h != input || s.image.shape().w != input)
      throw ShapeError("train: sample extent does not match the network input");

  const bool twin = net.config().siamesed();
  std::vector<Tensor> images, auxs;
  images.reserve(data.samples.size());
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    images.push_back(data.samples[i].image);
    if (twin) auxs.push_back(stream_input(data, i));
  }

  LossConfig loss_cfg;
  loss_cfg.reduction = cfg.reduction;

  std::vector<std::size_t> order(data.samples.size());
  std::size_t cursor = order.size();  // forces a shuffle before the first batch
  std::uint64_t epoch = 0;
  auto next_index = [&]() {
    if (cursor >= order.size()) {
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      Rng r(mix_seed(mix_seed(cfg.seed, 0xE90C), epoch));
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[r.below(i)]);
      ++epoch;
      cursor = 0;
    }
    return order[cursor++];
  };

  TrainResult res;
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  for (std::size_t iter = 1; iter <= cfg.iterations; ++iter) {
    std::vector<std::size_t> idx(cfg.batch);
    for (std::size_t b = 0; b < cfg.batch; ++b) idx[b] = next_index();

    const Tensor batch = stack_batch(images, idx);
    Tensor aux;
    if (twin) aux = stack_batch(auxs, idx);
    const LabelMap labels = stack_labels(data, idx);

    auto st = net.forward_train(batch, twin ? &aux : nullptr, mix_seed(cfg.seed, iter));
    LossResult lr = softmax_xent_perpixel(net.scores(*st), labels, loss_cfg);
    if (!std::isfinite(lr.loss))
      throw std::runtime_error("train: non-finite loss at iteration " +
                               std::to_string(iter));
    net.backward(*st, lr.grad_logits);
    sgd_momentum_step(store, cfg.opt);

    res.final_loss = lr.loss;
    const bool log = iter == 1 || iter == cfg.iterations ||
                     (cfg.log_interval > 0 && iter % cfg.log_interval == 0);
    if (log) {
      CurvePoint pt{iter, lr.loss, elapsed(), std::nullopt};
      if (val && cfg.eval_interval > 0 &&
          (iter % cfg.eval_interval == 0 || iter == cfg.iterations))
        pt.val_f1 = evaluate_dataset(net, *val, cfg.tau).f_measure;
      res.curve.push_back(std::move(pt));
    }
  }
  res.total_seconds = elapsed();
  return res;
}

void write_loss_csv(const std::filesystem::path& path,
                    const std::vector<CurvePoint>& curve) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "iteration,loss,seconds,val_f1\n";
  out.precision(17);
  for (const CurvePoint& p : curve) {
    out << p.iteration << ',' << p.loss << ',' << p.seconds << ',';
    if (p.val_f1) out << *p.val_f1;
    out << '\n';
  }
  if (!out) throw IoError("short write to " + path.string());
}

std::vector<CurvePoint> read_loss_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "iteration,loss,seconds,val_f1")
    throw IoError("unexpected loss-curve header in " + path.string());
  std::vector<CurvePoint> curve;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string it, loss, sec, f1;
    std::getline(ss, it, ',');
    std::getline(ss, loss, ',');
    std::getline(ss, sec, ',');
    std::getline(ss, f1, ',');
    CurvePoint p{std::stoul(it), std::stod(loss), std::stod(sec), std::nullopt};
    if (!f1.empty()) p.val_f1 = std::stod(f1);
    curve.push_back(p);
  }
  return curve;
}

ConvergenceReport compare_convergence(const std::vector<CurvePoint>& a,
                                      const std::vector<CurvePoint>& b, double target) {
  ConvergenceReport r;
  auto first_hit = [&](const std::vector<CurvePoint>& c, bool& reached, std::size_t& it,
                       double& sec) {
    for (const CurvePoint& p : c)
      if (p.loss <= target) {
        reached = true;
        it = p.iteration;
        sec = p.seconds;
        return;
      }
  };
  first_hit(a, r.a_reached, r.a_iteration, r.a_seconds);
  first_hit(b, r.b_reached, r.b_iteration, r.b_seconds);
  if (r.a_reached && r.b_reached && r.b_iteration > 0 && r.b_seconds > 0) {
    r.iteration_ratio = double(r.a_iteration) / double(r.b_iteration);
    r.seconds_ratio = r.a_seconds / r.b_seconds;
  }
  return r;
}

}  // namespace sfcn

#include "sfcn/metrics.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "sfcn/tensor.hpp"

namespace sfcn {

ConfusionCounts confusion(const std::vector<double>& scores, const std::vector<int>& gt,
                          double tau) {
  if (scores.size() != gt.size())
    throw ShapeError("confusion: score/gt length mismatch");
  ConfusionCounts c;
  c.tau = tau;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (gt[i] == kVoidLabel) continue;
    const bool pred = scores[i] >= tau;
    const bool pos = gt[i] != 0;
    if (pred && pos)
      ++c.tp;
    else if (pred && !pos)
      ++c.fp;
    else if (!pred && pos)
      ++c.fn;
    else
      ++c.tn;
  }
  return c;
}

MetricsReport metrics(const ConfusionCounts& c, double gamma) {
  if (gamma <= 0) throw std::invalid_argument("metrics: gamma must be positive");
  MetricsReport r;
  r.gamma = gamma;
  const double tp = double(c.tp), fp = double(c.fp), tn = double(c.tn), fn = double(c.fn);
  r.precision = (c.tp + c.fp) ? tp / (tp + fp) : (c.fn == 0 ? 1.0 : 0.0);
  r.recall = (c.tp + c.fn) ? tp / (tp + fn) : (c.fp == 0 ? 1.0 : 0.0);
  r.accuracy = c.total() ? (tp + tn) / double(c.total()) : 0.0;
  const double g2 = gamma * gamma;
  const double denom = g2 * r.precision + r.recall;
  r.f_measure = denom > 0 ? (1 + g2) * r.precision * r.recall / denom : 0.0;
  r.fpr = (c.fp + c.tn) ? fp / (fp + tn) : 0.0;
  r.fnr = (c.tp + c.fn) ? fn / (tp + fn) : 0.0;
  return r;
}

std::vector<double> default_sweep() {
  std::vector<double> s;
  s.reserve(255);
  for (int k = 1; k <= 255; ++k) s.push_back(double(k) / 256.0);
  return s;
}

MaxFResult max_f(const std::vector<double>& scores, const std::vector<int>& gt,
                 double gamma, const std::vector<double>& sweep) {
  if (sweep.empty()) throw std::invalid_argument("max_f: sweep must be nonempty");
  MaxFResult r;
  r.curve.reserve(sweep.size());

  // exactness guard: also evaluate at every distinct score value
  std::set<double> taus(sweep.begin(), sweep.end());
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (gt[i] != kVoidLabel && scores[i] > 0.0 && scores[i] < 1.0) taus.insert(scores[i]);

  bool first = true;
  for (double tau : taus) {  // ascending: ties keep the smaller tau
    const MetricsReport m = metrics(confusion(scores, gt, tau), gamma);
    if (first || m.f_measure > r.f_star) {
      r.f_star = m.f_measure;
      r.tau_star = tau;
      first = false;
    }
  }
  for (double tau : sweep) {
    const MetricsReport m = metrics(confusion(scores, gt, tau), gamma);
    r.curve.push_back({tau, m.precision, m.recall, m.f_measure});
  }
  return r;
}

}  // namespace sfcn

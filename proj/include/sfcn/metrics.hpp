#pragma once

#include <cstdint>
#include <vector>

namespace sfcn {

constexpr int kVoidLabel = 255;

// TP/FP/TN/FN at a classification threshold tau; void pixels excluded.
struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  double tau = 0.5;

  std::uint64_t total() const { return tp + fp + tn + fn; }
};

struct MetricsReport {
  double precision = 0, recall = 0, accuracy = 0, f_measure = 0;
  double fpr = 0, fnr = 0;
  double gamma = 1.0;
};

// scores: per-pixel road probability; gt: 0 / 1 / kVoidLabel. A pixel is
// predicted road when score >= tau (inclusive boundary).
ConfusionCounts confusion(const std::vector<double>& scores, const std::vector<int>& gt,
                          double tau);

// Degenerate-quotient conventions: with an empty denominator, precision is 1
// iff no positives were missed (FN==0) and recall is 1 iff none were invented
// (FP==0), else 0; F with P+R==0 is 0.
MetricsReport metrics(const ConfusionCounts& c, double gamma = 1.0);

struct PrPoint {
  double tau, precision, recall, f;
};

struct MaxFResult {
  double tau_star = 0, f_star = 0;
  std::vector<PrPoint> curve;  // at sweep order
};

// Evaluates F over the sweep plus every distinct score value present (so the
// maximum is exact, not grid-limited); ties break toward the smaller tau.
MaxFResult max_f(const std::vector<double>& scores, const std::vector<int>& gt,
                 double gamma, const std::vector<double>& sweep);

// 255 uniform thresholds k/256, k = 1..255.
std::vector<double> default_sweep();

}  // namespace sfcn

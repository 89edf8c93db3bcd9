#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sfcn/metrics.hpp"
#include "sfcn/net.hpp"
#include "sfcn/params.hpp"
#include "sfcn/synth.hpp"

namespace sfcn {

struct TrainConfig {
  std::size_t iterations = 2000;
  std::size_t batch = 4;
  OptimizerConfig opt;
  LossConfig::Reduction reduction = LossConfig::Reduction::Mean;
  std::size_t log_interval = 10;    // loss-curve row cadence (iteration 1 and last always logged)
  std::size_t eval_interval = 0;    // 0: no mid-run validation column
  double tau = 0.5;                 // threshold for the validation F1 column
  std::uint64_t seed = 1;           // shuffling + dropout streams
};

struct CurvePoint {
  std::size_t iteration = 0;
  double loss = 0;
  double seconds = 0;               // wall clock since training start
  std::optional<double> val_f1;
};

struct TrainResult {
  std::vector<CurvePoint> curve;
  double final_loss = 0;
  double total_seconds = 0;
};

// Pooled confusion over every sample of the dataset at the given threshold;
// contour inputs are taken from the dataset when present, else detected.
MetricsReport evaluate_dataset(const Network& net, const Dataset& data, double tau);

// SGD with momentum over seeded epoch shuffles; batches stack same-extent
// samples along N. Throws on a non-finite loss. When `val` is non-null the
// eval_interval column is computed against it.
TrainResult train(Network& net, ParameterStore& store, const Dataset& data,
                  const TrainConfig& cfg, const Dataset* val = nullptr);

// CSV columns: iteration,loss,seconds,val_f1 (val_f1 blank when absent).
void write_loss_csv(const std::filesystem::path& path,
                    const std::vector<CurvePoint>& curve);
std::vector<CurvePoint> read_loss_csv(const std::filesystem::path& path);

struct ConvergenceReport {
  bool a_reached = false, b_reached = false;
  std::size_t a_iteration = 0, b_iteration = 0;
  double a_seconds = 0, b_seconds = 0;
  double iteration_ratio = 0;  // a/b, only meaningful when both reached
  double seconds_ratio = 0;
};

// First iteration / wall-clock at which each curve's loss drops to the
// target and stays comparable; "never reached" is reported, not an error.
ConvergenceReport compare_convergence(const std::vector<CurvePoint>& a,
                                      const std::vector<CurvePoint>& b, double target);

// Contour second-stream input for one sample (loads the manifest contour
// when present, else runs the detector), replicated to 3 channels.
Tensor stream_input(const Dataset& data, std::size_t index);

}  // namespace sfcn

#pragma once

#include <map>
#include <string>
#include <vector>

#include "sfcn/tensor.hpp"

namespace sfcn {

enum class ParamRole { Weight, Bias };

struct Param {
  Shape shape;
  ParamRole role = ParamRole::Weight;
  std::vector<double> value;
  std::vector<double> grad;      // accumulated, zeroed by the optimizer step
  std::vector<double> momentum;  // zero-initialized

  std::size_t numel() const { return value.size(); }
};

// Identifier-keyed parameter buffers. Layers referring to the same id share
// one buffer; each backward pass ADDS its gradient contribution, which is
// what makes hard weight sharing between the two streams correct.
class ParameterStore {
 public:
  Param& create(const std::string& id, Shape shape, ParamRole role);
  bool contains(const std::string& id) const { return entries_.count(id) != 0; }
  Param& at(const std::string& id);
  const Param& at(const std::string& id) const;

  // Adds g (same length as the parameter) into the gradient buffer.
  void accumulate_grad(const std::string& id, const std::vector<double>& g);

  void zero_grads();
  std::size_t total_params() const;

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  std::size_t count() const { return entries_.size(); }

 private:
  std::map<std::string, Param> entries_;  // ordered: deterministic iteration
};

struct OptimizerConfig {
  double lr_weight = 1e-2;
  double lr_bias = 2e-2;  // 2x the weight rate (common FCN practice)
  // The sum-loss fidelity setting is 0.99; with mean loss and desk-scale
  // iteration counts (~2e3, not ~2e5) that averaging window is ~5% of the
  // whole run and the model stalls at the dataset-mean road prior, so the
  // desk-scale default is 0.9.
  double momentum = 0.9;
  double decay = 5e-4;
};

// v <- mu*v - lr*(g + decay*p); p <- p + v; gradients zeroed afterwards.
void sgd_momentum_step(ParameterStore& store, const OptimizerConfig& cfg);

}  // namespace sfcn

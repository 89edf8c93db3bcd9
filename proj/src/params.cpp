#include "sfcn/params.hpp"

#include <stdexcept>

#include "sfcn/kernels.hpp"

namespace sfcn {

Param& ParameterStore::create(const std::string& id, Shape shape, ParamRole role) {
  auto [it, inserted] = entries_.try_emplace(id);
  if (!inserted) {
    if (it->second.shape != shape || it->second.role != role)
      throw ShapeError("parameter '" + id + "' re-registered with different shape/role");
    return it->second;
  }
  Param& p = it->second;
  p.shape = shape;
  p.role = role;
  p.value.assign(shape.numel(), 0.0);
  p.grad.assign(shape.numel(), 0.0);
  p.momentum.assign(shape.numel(), 0.0);
  return p;
}

Param& ParameterStore::at(const std::string& id) {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw std::out_of_range("unknown parameter '" + id + "'");
  return it->second;
}

const Param& ParameterStore::at(const std::string& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw std::out_of_range("unknown parameter '" + id + "'");
  return it->second;
}

void ParameterStore::accumulate_grad(const std::string& id, const std::vector<double>& g) {
  Param& p = at(id);
  if (g.size() != p.grad.size())
    throw ShapeError("gradient length mismatch for parameter '" + id + "'");
  kernels::active().axpy(p.grad.data(), g.data(), 1.0, g.size());
}

void ParameterStore::zero_grads() {
  for (auto& [id, p] : entries_) p.grad.assign(p.grad.size(), 0.0);
}

std::size_t ParameterStore::total_params() const {
  std::size_t total = 0;
  for (const auto& [id, p] : entries_) total += p.numel();
  return total;
}

void sgd_momentum_step(ParameterStore& store, const OptimizerConfig& cfg) {
  for (auto& [id, p] : store) {
    const double lr = p.role == ParamRole::Bias ? cfg.lr_bias : cfg.lr_weight;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      p.momentum[i] =
          cfg.momentum * p.momentum[i] - lr * (p.grad[i] + cfg.decay * p.value[i]);
      p.value[i] += p.momentum[i];
      p.grad[i] = 0.0;
    }
  }
}

}  // namespace sfcn

#include "ctxmatch/optim.hpp"

#include <cmath>

#include "ctxmatch/errors.hpp"

namespace ctxmatch {

void adadelta_update(std::span<double> x, std::span<const double> g, AdaDeltaSlot& slot, const AdaDeltaConfig& cfg,
                     std::string_view name) {
  if (g.size() != x.size()) throw DimensionError("gradient size differs from parameter " + std::string(name));
  for (double v : g) {
    if (!std::isfinite(v)) throw NumericError("non-finite gradient for parameter " + std::string(name));
  }
  if (slot.sq_grad.size() != x.size()) {
    slot.sq_grad.assign(x.size(), 0.0);
    slot.sq_update.assign(x.size(), 0.0);
  }
  const double rho = cfg.rho, eps = cfg.epsilon;
  for (std::size_t i = 0; i < x.size(); ++i) {
    slot.sq_grad[i] = rho * slot.sq_grad[i] + (1.0 - rho) * g[i] * g[i];
    const double dx = -std::sqrt(slot.sq_update[i] + eps) / std::sqrt(slot.sq_grad[i] + eps) * g[i];
    slot.sq_update[i] = rho * slot.sq_update[i] + (1.0 - rho) * dx * dx;
    x[i] += cfg.learning_rate * dx;
  }
}

void AdaDelta::step(const std::string& name, Tensor& param) {
  if (!param.requires_grad()) return;
  adadelta_update(param.data(), param.grad(), slots_[name], cfg_, name);
}

const AdaDeltaSlot* AdaDelta::slot(const std::string& name) const {
  const auto it = slots_.find(name);
  return it == slots_.end() ? nullptr : &it->second;
}

}  // namespace ctxmatch

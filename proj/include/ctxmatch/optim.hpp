#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctxmatch/tensor.hpp"

namespace ctxmatch {

struct AdaDeltaConfig {
  double rho = 0.95;
  double epsilon = 1e-6;
  double learning_rate = 0.08;  // multiplier on the AdaDelta update
};

/// Running averages E[g^2] and E[dx^2] of one parameter tensor.
struct AdaDeltaSlot {
  std::vector<double> sq_grad;
  std::vector<double> sq_update;
};

/// One AdaDelta update of `x` in place:
///   E[g^2]  <- rho E[g^2] + (1 - rho) g^2
///   dx       = -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
///   E[dx^2] <- rho E[dx^2] + (1 - rho) dx^2
///   x       <- x + lr * dx
/// Throws NumericError naming `name` on a non-finite gradient.
void adadelta_update(std::span<double> x, std::span<const double> g, AdaDeltaSlot& slot, const AdaDeltaConfig& cfg,
                     std::string_view name);

class AdaDelta {
 public:
  explicit AdaDelta(AdaDeltaConfig cfg = {}) : cfg_(cfg) {}

  const AdaDeltaConfig& config() const { return cfg_; }
  void step(const std::string& name, Tensor& param);
  const AdaDeltaSlot* slot(const std::string& name) const;

 private:
  AdaDeltaConfig cfg_;
  std::map<std::string, AdaDeltaSlot> slots_;
};

}  // namespace ctxmatch

#pragma once

// Finite-difference verification of reverse-mode gradients.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ctxmatch/config.hpp"
#include "ctxmatch/tensor.hpp"

namespace ctxmatch {

inline constexpr double kGradCheckStep = 1e-6;
inline constexpr double kGradCheckTolerance = 1e-5;

/// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

struct TensorCheck {
  std::string name;
  std::size_t entries = 0;
  double max_rel_error = 0;
};

struct GradCheckReport {
  std::string label;
  std::uint64_t seed = 0;
  std::vector<TensorCheck> tensors;
  double max_rel_error = 0;
  bool passed(double tol = kGradCheckTolerance) const { return max_rel_error < tol; }
};

/// m=6, d=4, n_max=3, every channel and hidden width <= 3, vocabulary of 10.
ModelConfig gradcheck_config();

/// Generic checker: `loss` evaluates the objective and, when its argument is
/// true, also accumulates analytic gradients into the parameters listed by
/// `params`. Entries whose name starts with "embedding" skip row 0 (PAD).
using LossFn = std::function<double(bool with_grad)>;
using ParamList = std::function<void(const std::function<void(const std::string&, Tensor&)>&)>;
GradCheckReport check_gradients(const LossFn& loss, const ParamList& params, double step = kGradCheckStep);

/// Full-model checks on random data. mt_hcnn / mt_hcnn_d use the squared-error
/// training loss, transfer the combined objective of the model update.
/// Parameters are re-initialised away from ReLU kinks for the check.
GradCheckReport grad_check(ModelKind kind, const ModelConfig& cfg, std::uint64_t seed);

}  // namespace ctxmatch

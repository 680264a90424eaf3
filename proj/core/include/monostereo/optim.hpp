#pragma once

#include <cstdint>
#include <vector>

#include "monostereo/network.hpp"

namespace monostereo {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::int64_t t = 0;

  static AdamState zeros_like(const Checkpoint& ckpt);
};

/// One bias-corrected Adam update of every parameter of `ckpt`, rounding the
/// results to float32 storage precision. Increments ckpt.step and
/// ckpt.revision. Throws kNonFinite naming the tensor if any gradient entry is
/// not finite; nothing is modified in that case.
void adam_step(Checkpoint& ckpt, const ParameterGradients& grads, AdamState& state, double lr,
               const AdamConfig& config = {});

}  // namespace monostereo

#include "monostereo/optim.hpp"

#include <cmath>

#include "monostereo/error.hpp"

namespace monostereo {

AdamState AdamState::zeros_like(const Checkpoint& ckpt) {
  AdamState s;
  for (const auto& p : ckpt.params) {
    s.m.emplace_back(p.values.size(), 0.0);
    s.v.emplace_back(p.values.size(), 0.0);
  }
  return s;
}

void adam_step(Checkpoint& ckpt, const ParameterGradients& grads, AdamState& state, double lr,
               const AdamConfig& config) {
  if (grads.size() != ckpt.params.size() || state.m.size() != ckpt.params.size() ||
      state.v.size() != ckpt.params.size()) {
    throw Error(ErrorCode::kShapeMismatch, "adam_step: gradient/state tensor count differs from parameters");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const auto& p = ckpt.params[i];
    if (grads[i].size() != p.values.size() || state.m[i].size() != p.values.size()) {
      throw Error(ErrorCode::kShapeMismatch, "adam_step: size mismatch for tensor " + p.name);
    }
    for (std::size_t k = 0; k < grads[i].size(); ++k) {
      if (!std::isfinite(grads[i][k])) {
        throw Error(ErrorCode::kNonFinite, "gradient of tensor " + p.name + " at element " + std::to_string(k) +
                                               " is " + std::to_string(grads[i][k]));
      }
    }
  }

  state.t += 1;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < grads.size(); ++i) {
    auto& values = ckpt.params[i].values;
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double g = grads[i][k];
      m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g;
      v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g * g;
      if (lr == 0.0) continue;
      const double step = lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + config.epsilon);
      values[k] = static_cast<double>(static_cast<float>(values[k] - step));
    }
  }
  ckpt.step += 1;
  ckpt.revision += 1;
}

}  // namespace monostereo

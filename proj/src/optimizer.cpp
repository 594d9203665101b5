#include "polab/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace polab {

void validate(const AdamConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (!(cfg.beta1 > 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 > 0.0 && cfg.beta2 < 1.0))
    throw std::invalid_argument("adam decay rates must lie in (0, 1)");
  if (!(cfg.eps > 0.0)) throw std::invalid_argument("adam eps must be positive");
}

void adam_step(std::span<double> params, std::span<const double> grad, OptimizerState& state,
               const AdamConfig& cfg) {
  if (params.size() != grad.size() || state.m.size() != params.size() || state.v.size() != params.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.eps);
  }
}

double l2_norm(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x * x;
  return std::sqrt(s);
}

double clip_grad_norm(std::span<double> a, std::span<double> b, double max_norm) {
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  const double norm = std::sqrt(na * na + nb * nb);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& x : a) x *= scale;
    for (double& x : b) x *= scale;
  }
  return norm;
}

}  // namespace polab

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace polab {

struct AdamConfig {
  double learning_rate = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

void validate(const AdamConfig& cfg);

/// First/second moment accumulators for one flat parameter block.
struct OptimizerState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  explicit OptimizerState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// One bias-corrected adaptive-moment descent step on `params` for loss gradient `grad`.
void adam_step(std::span<double> params, std::span<const double> grad, OptimizerState& state,
               const AdamConfig& cfg);

double l2_norm(std::span<const double> xs);

/// Scales both blocks in place so their joint L2 norm is at most max_norm.
/// Returns the norm before scaling.
double clip_grad_norm(std::span<double> a, std::span<double> b, double max_norm);

}  // namespace polab

#pragma once

namespace polab {

/// Probability that a policy centred at `theta` answers input `x` correctly:
/// (exp(-(x-θ)²) - exp(-0.25)) / (1 - exp(-0.25)). Zero at |x-θ| = 0.5, one at x = θ.
double toy_policy_quality(double theta, double x);

}  // namespace polab

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace polab {

struct GaeConfig {
  double gamma = 1.0;
  double lambda = 0.95;
};

struct GroupAdvConfig {
  double eps_std = 1e-6;
};

void validate(const GaeConfig& cfg);
void validate(const GroupAdvConfig& cfg);

/// δ_t = r_t + γ V_{t+1} - V_t. `values` carries the bootstrap value as its last entry.
std::vector<double> td_errors(std::span<const double> rewards, std::span<const double> values,
                              double gamma);

/// Backward recursion Â_t = δ_t + γλ Â_{t+1}, truncated at the end of the trajectory.
std::vector<double> gae(std::span<const double> deltas, double gamma, double lambda);

/// R_t = Σ_{t' ≥ t} γ^{t'-t} r_{t'}.
std::vector<double> discounted_returns(std::span<const double> rewards, double gamma);

/// Â_t + V_t, the critic regression target.
std::vector<double> value_targets(std::span<const double> advantages, std::span<const double> values);

/// (r_i - mean) / (population std + eps). Requires G >= 2.
std::vector<double> group_relative_advantages(std::span<const double> rewards,
                                              const GroupAdvConfig& cfg = {});

std::vector<double> broadcast_advantage(double adv, std::size_t length);

/// Zero mean, unit population std; constant input maps to zeros.
std::vector<double> whiten(std::span<const double> advantages, double eps = 1e-8);

}  // namespace polab

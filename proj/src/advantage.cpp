#include "polab/advantage.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace polab {

namespace {

void require_unit_interval(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
}

struct Moments {
  double mean;
  double std;
};

Moments population_moments(std::span<const double> xs) {
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / n)};
}

}  // namespace

void validate(const GaeConfig& cfg) {
  require_unit_interval(cfg.gamma, "gamma");
  require_unit_interval(cfg.lambda, "lambda");
}

void validate(const GroupAdvConfig& cfg) {
  if (!(cfg.eps_std > 0.0)) throw std::invalid_argument("eps_std must be positive");
}

std::vector<double> td_errors(std::span<const double> rewards, std::span<const double> values,
                              double gamma) {
  if (values.size() != rewards.size() + 1)
    throw std::invalid_argument("td_errors: values must have one more entry than rewards");
  std::vector<double> out(rewards.size());
  for (std::size_t t = 0; t < rewards.size(); ++t)
    out[t] = rewards[t] + gamma * values[t + 1] - values[t];
  return out;
}

std::vector<double> gae(std::span<const double> deltas, double gamma, double lambda) {
  std::vector<double> adv(deltas.size());
  const double decay = gamma * lambda;
  double running = 0.0;
  for (std::size_t t = deltas.size(); t-- > 0;) {
    running = deltas[t] + decay * running;
    adv[t] = running;
  }
  return adv;
}

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma) {
  std::vector<double> out(rewards.size());
  double running = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    running = rewards[t] + gamma * running;
    out[t] = running;
  }
  return out;
}

std::vector<double> value_targets(std::span<const double> advantages,
                                  std::span<const double> values) {
  if (advantages.size() != values.size())
    throw std::invalid_argument("value_targets: length mismatch");
  std::vector<double> out(values.size());
  for (std::size_t t = 0; t < values.size(); ++t) out[t] = advantages[t] + values[t];
  return out;
}

std::vector<double> group_relative_advantages(std::span<const double> rewards,
                                              const GroupAdvConfig& cfg) {
  if (rewards.size() < 2) throw std::invalid_argument("G < 2");
  validate(cfg);
  const auto [mean, sd] = population_moments(rewards);
  std::vector<double> out(rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / (sd + cfg.eps_std);
  return out;
}

std::vector<double> broadcast_advantage(double adv, std::size_t length) {
  if (length == 0) throw std::invalid_argument("broadcast_advantage: length must be positive");
  return std::vector<double>(length, adv);
}

std::vector<double> whiten(std::span<const double> advantages, double eps) {
  if (advantages.size() < 2) throw std::invalid_argument("whiten: need at least two entries");
  const auto [mean, sd] = population_moments(advantages);
  std::vector<double> out(advantages.size());
  for (std::size_t i = 0; i < advantages.size(); ++i) out[i] = (advantages[i] - mean) / (sd + eps);
  return out;
}

}  // namespace polab

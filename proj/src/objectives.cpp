#include "polab/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "polab/advantage.hpp"

namespace polab {

const char* to_string(AggregationMode mode) {
  return mode == AggregationMode::token_level ? "token_level" : "sample_level";
}

AggregationMode aggregation_mode_from_string(const std::string& name) {
  if (name == "token_level") return AggregationMode::token_level;
  if (name == "sample_level") return AggregationMode::sample_level;
  throw std::invalid_argument("unknown aggregation mode: " + name);
}

const char* to_string(BaselineMode mode) {
  return mode == BaselineMode::none ? "none" : "value_head";
}

BaselineMode baseline_mode_from_string(const std::string& name) {
  if (name == "none") return BaselineMode::none;
  if (name == "value_head") return BaselineMode::value_head;
  throw std::invalid_argument("unknown baseline mode: " + name);
}

void validate(const ClipRange& range) {
  if (!(range.eps_low >= 0.0) || !(range.eps_high >= 0.0))
    throw std::invalid_argument("clip epsilons must be non-negative");
  if (!(range.lower() > 0.0)) throw std::invalid_argument("1 - eps_low must be positive");
}

void validate(const LossCoeffs& c) {
  for (double v : {c.c1, c.c2, c.beta})
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("loss coefficients must be finite and >= 0");
}

double clip_ratio(double r, const ClipRange& range) {
  return std::min(std::max(r, range.lower()), range.upper());
}

double ppo_token_objective(double ratio, double adv, const ClipRange& range) {
  return std::min(ratio * adv, clip_ratio(ratio, range) * adv);
}

double ppo_token_objective_dlogp(double ratio, double adv, const ClipRange& range) {
  const double unclipped = ratio * adv;
  const double clipped = clip_ratio(ratio, range) * adv;
  // d ratio / d log π_θ = ratio
  return unclipped <= clipped ? unclipped : 0.0;
}

double kl_estimate_k3(double logp_theta, double logp_ref) {
  const double log_u = logp_ref - logp_theta;
  // expm1 keeps u - log u - 1 accurate near u = 1
  return std::max(std::expm1(log_u) - log_u, 0.0);
}

double kl_estimate_k3_dlogp(double logp_theta, double logp_ref) {
  return -std::expm1(logp_ref - logp_theta);
}

double shaped_token_reward(double base_reward, double logp_theta, double logp_ref, double beta) {
  return base_reward - beta * (logp_theta - logp_ref);
}

double entropy_bonus(const Policy& policy, std::span<const State> states) {
  if (states.empty()) throw std::invalid_argument("entropy_bonus: empty batch");
  double sum = 0.0;
  for (const auto& s : states) sum += policy.entropy(s.prompt, s.prefix);
  return sum / static_cast<double>(states.size());
}

double entropy_bonus(const Policy& policy, std::span<const Trajectory> batch) {
  return evaluate_entropy_bonus(policy, batch).entropy;
}

double critic_loss(std::span<const double> preds, std::span<const double> targets) {
  if (preds.size() != targets.size()) throw std::invalid_argument("critic_loss: length mismatch");
  if (preds.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) sum += (targets[i] - preds[i]) * (targets[i] - preds[i]);
  return sum / static_cast<double>(preds.size());
}

namespace {

struct ValueTerm {
  double loss;
  double dloss_dpred;
};

ValueTerm clipped_value_term(double pred, double old, double target, double eps_v) {
  const double plain = (pred - target) * (pred - target);
  if (!(eps_v > 0.0)) return {plain, 2.0 * (pred - target)};
  const double clipped_pred = std::clamp(pred, old - eps_v, old + eps_v);
  const double clipped = (clipped_pred - target) * (clipped_pred - target);
  if (plain >= clipped) return {plain, 2.0 * (pred - target)};
  // clipped branch is only larger when pred sits outside the band, where it is constant
  return {clipped, 0.0};
}

}  // namespace

double critic_loss_clipped(std::span<const double> preds, std::span<const double> old_preds,
                           std::span<const double> targets, double eps_v) {
  if (preds.size() != targets.size() || preds.size() != old_preds.size())
    throw std::invalid_argument("critic_loss_clipped: length mismatch");
  if (!(eps_v > 0.0)) throw std::invalid_argument("critic_loss_clipped: eps_v must be positive");
  if (preds.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    sum += clipped_value_term(preds[i], old_preds[i], targets[i], eps_v).loss;
  return sum / static_cast<double>(preds.size());
}

double ppo_total_loss(double policy_obj, double critic, double entropy, const LossCoeffs& c) {
  return -policy_obj + c.c1 * critic - c.c2 * entropy;
}

double kl_penalized_objective(std::span<const double> ratios, std::span<const double> advs,
                              double kl_value, double beta) {
  if (ratios.size() != advs.size()) throw std::invalid_argument("kl_penalized_objective: length mismatch");
  if (ratios.empty()) return -beta * kl_value;
  double sum = 0.0;
  for (std::size_t i = 0; i < ratios.size(); ++i) sum += ratios[i] * advs[i];
  return sum / static_cast<double>(ratios.size()) - beta * kl_value;
}

std::vector<double> aggregation_weights(AggregationMode mode, std::span<const std::size_t> lengths) {
  if (lengths.empty()) throw std::invalid_argument("aggregation_weights: empty group");
  if (std::find(lengths.begin(), lengths.end(), std::size_t{0}) != lengths.end())
    throw std::invalid_argument("aggregation_weights: zero-length response");
  std::vector<double> w(lengths.size());
  if (mode == AggregationMode::sample_level) {
    const double g = static_cast<double>(lengths.size());
    for (std::size_t i = 0; i < lengths.size(); ++i) w[i] = 1.0 / (g * static_cast<double>(lengths[i]));
  } else {
    const double total = static_cast<double>(std::accumulate(lengths.begin(), lengths.end(), std::size_t{0}));
    std::fill(w.begin(), w.end(), 1.0 / total);
  }
  return w;
}

namespace {

std::vector<std::size_t> member_lengths(const Group& g) {
  std::vector<std::size_t> lengths;
  lengths.reserve(g.members.size());
  for (const auto& m : g.members) lengths.push_back(m.length());
  return lengths;
}

void require_valid(const Group& group) {
  const auto errors = validate_group(group);
  if (!errors.empty()) throw std::invalid_argument("invalid group: " + errors.front());
}

}  // namespace

GroupObjective group_objective(const Group& group, const ClipRange& range, double beta,
                               AggregationMode mode) {
  require_valid(group);
  const auto lengths = member_lengths(group);
  const auto w = aggregation_weights(mode, lengths);
  GroupObjective out;
  double policy_part = 0.0;
  for (std::size_t i = 0; i < group.members.size(); ++i) {
    const auto& m = group.members[i];
    for (std::size_t t = 0; t < m.length(); ++t) {
      const double ratio = std::exp(m.logp_new[t] - m.logp_old[t]);
      policy_part += w[i] * ppo_token_objective(ratio, m.advantages[t], range);
      out.kl_term += w[i] * kl_estimate_k3(m.logp_new[t], m.logp_ref[t]);
    }
  }
  out.objective = policy_part - beta * out.kl_term;
  return out;
}

GroupObjective grpo_objective(const Group& group, const ClipRange& range, double beta) {
  return group_objective(group, range, beta, AggregationMode::sample_level);
}

double dapo_objective(const Group& group, const ClipRange& range) {
  return group_objective(group, range, 0.0, AggregationMode::token_level).objective;
}

SurrogateEval evaluate_group_surrogate(const Policy& policy, std::span<const Group> groups,
                                       const ClipRange& range, double beta, AggregationMode mode) {
  if (groups.empty()) throw std::invalid_argument("evaluate_group_surrogate: no groups");
  SurrogateEval out;
  out.grad.assign(policy.params().actor.size(), 0.0);
  const double per_group = 1.0 / static_cast<double>(groups.size());
  std::size_t clipped = 0;
  double kl_old_sum = 0.0;
  for (const auto& group : groups) {
    require_valid(group);
    const auto w = aggregation_weights(mode, member_lengths(group));
    for (std::size_t i = 0; i < group.members.size(); ++i) {
      const auto& m = group.members[i];
      const double wi = w[i] * per_group;
      for (std::size_t t = 0; t < m.length(); ++t) {
        const std::span<const Token> prefix(m.tokens.data(), t);
        const auto step = policy.step(m.prompt, prefix);
        const double lp = step.log_probs[m.tokens[t].id];
        const double ratio = std::exp(lp - m.logp_old[t]);
        const double adv = m.advantages[t];
        const double k3 = kl_estimate_k3(lp, m.logp_ref[t]);
        out.objective += wi * (ppo_token_objective(ratio, adv, range) - beta * k3);
        out.kl_term += wi * k3;
        const double coef =
            wi * (ppo_token_objective_dlogp(ratio, adv, range) - beta * kl_estimate_k3_dlogp(lp, m.logp_ref[t]));
        policy.add_grad_log_prob(out.grad, step, m.tokens[t], coef);
        if (ratio < range.lower() || ratio > range.upper()) ++clipped;
        kl_old_sum += kl_estimate_k3(lp, m.logp_old[t]);
        out.max_abs_ratio_dev = std::max(out.max_abs_ratio_dev, std::abs(ratio - 1.0));
        ++out.tokens;
      }
    }
  }
  if (out.tokens > 0) {
    out.clip_fraction = static_cast<double>(clipped) / static_cast<double>(out.tokens);
    out.approx_kl_old = kl_old_sum / static_cast<double>(out.tokens);
  }
  return out;
}

SurrogateEval evaluate_ppo_surrogate(const Policy& policy, std::span<const Trajectory> batch,
                                     const ClipRange& range) {
  SurrogateEval out;
  out.grad.assign(policy.params().actor.size(), 0.0);
  std::size_t total = 0;
  for (const auto& t : batch) total += t.length();
  if (total == 0) throw std::invalid_argument("evaluate_ppo_surrogate: empty batch");
  const double w = 1.0 / static_cast<double>(total);
  std::size_t clipped = 0;
  double kl_old_sum = 0.0;
  for (const auto& traj : batch) {
    for (std::size_t t = 0; t < traj.length(); ++t) {
      const std::span<const Token> prefix(traj.tokens.data(), t);
      const auto step = policy.step(traj.prompt, prefix);
      const double lp = step.log_probs[traj.tokens[t].id];
      const double ratio = std::exp(lp - traj.logp_old[t]);
      const double adv = traj.advantages[t];
      out.objective += w * ppo_token_objective(ratio, adv, range);
      out.kl_term += w * kl_estimate_k3(lp, traj.logp_ref[t]);
      policy.add_grad_log_prob(out.grad, step, traj.tokens[t], w * ppo_token_objective_dlogp(ratio, adv, range));
      if (ratio < range.lower() || ratio > range.upper()) ++clipped;
      kl_old_sum += kl_estimate_k3(lp, traj.logp_old[t]);
      out.max_abs_ratio_dev = std::max(out.max_abs_ratio_dev, std::abs(ratio - 1.0));
    }
  }
  out.tokens = total;
  out.clip_fraction = static_cast<double>(clipped) / static_cast<double>(total);
  out.approx_kl_old = kl_old_sum / static_cast<double>(total);
  return out;
}

EntropyEval evaluate_entropy_bonus(const Policy& policy, std::span<const Trajectory> batch) {
  EntropyEval out;
  out.grad.assign(policy.params().actor.size(), 0.0);
  std::size_t total = 0;
  for (const auto& t : batch) total += t.length();
  if (total == 0) throw std::invalid_argument("entropy_bonus: empty batch");
  const double w = 1.0 / static_cast<double>(total);
  for (const auto& traj : batch) {
    for (std::size_t t = 0; t < traj.length(); ++t) {
      const auto step = policy.step(traj.prompt, std::span<const Token>(traj.tokens.data(), t));
      double h = 0.0;
      for (double l : step.log_probs) h -= std::exp(l) * l;
      out.entropy += w * h;
      policy.add_grad_entropy(out.grad, step, w);
    }
  }
  return out;
}

CriticEval evaluate_critic_loss(const Policy& policy, std::span<const Trajectory> batch,
                                std::span<const std::vector<double>> targets, double eps_v) {
  if (targets.size() != batch.size()) throw std::invalid_argument("evaluate_critic_loss: length mismatch");
  CriticEval out;
  out.grad.assign(policy.params().critic.size(), 0.0);
  std::size_t total = 0;
  for (const auto& t : batch) total += t.length();
  if (total == 0) return out;
  const double w = 1.0 / static_cast<double>(total);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& traj = batch[b];
    if (targets[b].size() != traj.length()) throw std::invalid_argument("evaluate_critic_loss: length mismatch");
    for (std::size_t t = 0; t < traj.length(); ++t) {
      const std::span<const Token> prefix(traj.tokens.data(), t);
      const double pred = policy.value(traj.prompt, prefix);
      const auto term = clipped_value_term(pred, traj.values[t], targets[b][t], eps_v);
      out.loss += w * term.loss;
      policy.add_grad_value(out.grad, traj.prompt, prefix, w * term.dloss_dpred);
    }
  }
  return out;
}

ActorGradient score_function_gradient(const Policy& policy, std::span<const Trajectory> batch) {
  if (batch.empty()) throw std::invalid_argument("score_function_gradient: empty batch");
  ActorGradient grad(policy.params().actor.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const auto& traj : batch) {
    for (std::size_t t = 0; t < traj.length(); ++t) {
      policy.add_grad_log_prob(grad, traj.prompt, std::span<const Token>(traj.tokens.data(), t),
                               traj.tokens[t], inv_n * traj.advantages[t]);
    }
  }
  return grad;
}

std::vector<double> reinforce_advantages(const Policy& policy, const Trajectory& t, double gamma,
                                         BaselineMode baseline) {
  auto adv = discounted_returns(t.per_token_rewards, gamma);
  if (baseline == BaselineMode::value_head) {
    for (std::size_t i = 0; i < adv.size(); ++i)
      adv[i] -= policy.value(t.prompt, std::span<const Token>(t.tokens.data(), i));
  }
  return adv;
}

ActorGradient reinforce_gradient(const Policy& policy, std::span<const Trajectory> batch,
                                 BaselineMode baseline, double gamma) {
  std::vector<Trajectory> with_adv(batch.begin(), batch.end());
  for (auto& t : with_adv) t.advantages = reinforce_advantages(policy, t, gamma, baseline);
  return score_function_gradient(policy, with_adv);
}

}  // namespace polab

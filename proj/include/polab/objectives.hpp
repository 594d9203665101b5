#pragma once

#include <span>
#include <vector>

#include "polab/core.hpp"
#include "polab/policy.hpp"

namespace polab {

/// Ratio band [1 - eps_low, 1 + eps_high]. Symmetric for PPO/GRPO, wider on top for clip-higher.
struct ClipRange {
  double eps_low = 0.2;
  double eps_high = 0.2;

  double lower() const { return 1.0 - eps_low; }
  double upper() const { return 1.0 + eps_high; }
};

struct LossCoeffs {
  double c1 = 0.5;    // critic
  double c2 = 0.0;    // entropy bonus
  double beta = 0.0;  // KL
};

enum class AggregationMode { token_level, sample_level };

const char* to_string(AggregationMode mode);
AggregationMode aggregation_mode_from_string(const std::string& name);

void validate(const ClipRange& range);
void validate(const LossCoeffs& coeffs);

// Per-token pieces ------------------------------------------------------------

double clip_ratio(double r, const ClipRange& range);

/// min(r·A, clip(r)·A).
double ppo_token_objective(double ratio, double adv, const ClipRange& range);

/// Derivative of ppo_token_objective with respect to log π_θ at the sampled token.
/// Zero on the clipped branch; r·A where the unclipped term is the minimum.
double ppo_token_objective_dlogp(double ratio, double adv, const ClipRange& range);

/// With u = π_ref / π_θ: u - log u - 1. Never negative.
double kl_estimate_k3(double logp_theta, double logp_ref);
/// Derivative of kl_estimate_k3 with respect to logp_theta: 1 - u.
double kl_estimate_k3_dlogp(double logp_theta, double logp_ref);

/// r_t - β (log π_θ - log π_ref).
double shaped_token_reward(double base_reward, double logp_theta, double logp_ref, double beta);

// Batch-level scalars -----------------------------------------------------------

struct State {
  Prompt prompt;
  TokenSeq prefix;
};

/// Mean policy entropy over the given states.
double entropy_bonus(const Policy& policy, std::span<const State> states);
/// Mean policy entropy over every state visited by the trajectories.
double entropy_bonus(const Policy& policy, std::span<const Trajectory> batch);

/// mean (target - pred)².
double critic_loss(std::span<const double> preds, std::span<const double> targets);

/// mean max((V - T)², (clip(V, V_old - eps_v, V_old + eps_v) - T)²).
double critic_loss_clipped(std::span<const double> preds, std::span<const double> old_preds,
                           std::span<const double> targets, double eps_v);

/// -J + c1·critic - c2·entropy.
double ppo_total_loss(double policy_obj, double critic, double entropy, const LossCoeffs& c);

/// mean(r·A) - β·KL. Also the penalized trust-region surrogate when KL is taken against π_old.
double kl_penalized_objective(std::span<const double> ratios, std::span<const double> advs,
                              double kl_value, double beta);

/// Per-token weight for each response: 1/(G·|o_i|) at sample level, 1/Σ|o_i| at token level.
std::vector<double> aggregation_weights(AggregationMode mode, std::span<const std::size_t> lengths);

// Group objectives over stored log-probabilities ------------------------------------

struct GroupObjective {
  double objective = 0.0;
  double kl_term = 0.0;
};

/// Weighted clipped terms minus β times the weighted k3 estimate against π_ref.
GroupObjective group_objective(const Group& group, const ClipRange& range, double beta,
                               AggregationMode mode);

/// Sample-level aggregation with KL penalty.
GroupObjective grpo_objective(const Group& group, const ClipRange& range, double beta);

/// Token-level aggregation, no KL term.
double dapo_objective(const Group& group, const ClipRange& range);

// Differentiable evaluations at the policy's current parameters ------------------

/// Objective value, its gradient over the actor, and ratio diagnostics.
struct SurrogateEval {
  double objective = 0.0;
  double kl_term = 0.0;
  double clip_fraction = 0.0;
  double approx_kl_old = 0.0;
  double max_abs_ratio_dev = 0.0;
  std::size_t tokens = 0;
  ActorGradient grad;
};

/// Mean over groups of group_objective, with log π_θ recomputed from `policy`.
SurrogateEval evaluate_group_surrogate(const Policy& policy, std::span<const Group> groups,
                                       const ClipRange& range, double beta, AggregationMode mode);

/// Token-mean clipped surrogate over a batch of trajectories (PPO).
SurrogateEval evaluate_ppo_surrogate(const Policy& policy, std::span<const Trajectory> batch,
                                     const ClipRange& range);

struct EntropyEval {
  double entropy = 0.0;
  ActorGradient grad;
};

EntropyEval evaluate_entropy_bonus(const Policy& policy, std::span<const Trajectory> batch);

struct CriticEval {
  double loss = 0.0;
  std::vector<double> grad;
};

/// Token-mean (clipped when eps_v > 0) value loss; `targets` parallels `batch`.
CriticEval evaluate_critic_loss(const Policy& policy, std::span<const Trajectory> batch,
                                std::span<const std::vector<double>> targets, double eps_v);

// REINFORCE -----------------------------------------------------------------------

enum class BaselineMode { none, value_head };

const char* to_string(BaselineMode mode);
BaselineMode baseline_mode_from_string(const std::string& name);

/// (1/N) Σ_τ Σ_t ∇log π(a_t|s_t) · Â_t using each trajectory's stored advantages.
ActorGradient score_function_gradient(const Policy& policy, std::span<const Trajectory> batch);

/// Â_t = R_t - b(s_t) from per-token rewards; b is zero or the critic.
std::vector<double> reinforce_advantages(const Policy& policy, const Trajectory& t, double gamma,
                                         BaselineMode baseline);

/// score_function_gradient with Â_t = R_t - b(s_t).
ActorGradient reinforce_gradient(const Policy& policy, std::span<const Trajectory> batch,
                                 BaselineMode baseline, double gamma = 1.0);

}  // namespace polab

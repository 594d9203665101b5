#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "polab/advantage.hpp"
#include "polab/envs/environment.hpp"
#include "polab/objectives.hpp"
#include "polab/optimizer.hpp"
#include "polab/policy.hpp"
#include "polab/rollout.hpp"

namespace polab {

enum class Algorithm { ppo, grpo, dapo, vpg };

const char* to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& name);

struct CountdownEnvConfig {
  std::size_t k = 3;
  int max_target = 30;
  /// Size of the fixed prompt pool drawn from `dataset_seed`.
  std::size_t num_prompts = 16;
  std::uint64_t dataset_seed = 1234;
  /// Optional JSONL pool; overrides generation when set.
  std::string instances_path;
  countdown::RewardWeights weights;
};

struct BanditEnvConfig {
  std::size_t vocab_size = 4;
  std::size_t horizon = 3;
  std::uint64_t table_seed = 7;
};

/// Every knob of a training run. Use default_config() for algorithm-specific defaults.
struct TrainConfig {
  Algorithm algorithm = Algorithm::grpo;
  EnvKind env = EnvKind::countdown;
  std::size_t steps = 200;
  std::size_t prompts_per_step = 8;
  std::size_t group_size = 8;
  std::size_t max_len = 12;
  AdamConfig adam;
  GaeConfig gae;
  ClipRange clip;
  LossCoeffs coeffs;
  AggregationMode aggregation = AggregationMode::sample_level;
  DynamicSamplingConfig ds;
  GroupAdvConfig group_adv;
  BaselineMode baseline = BaselineMode::value_head;
  bool whiten_advantages = false;
  double eps_v = 0.2;
  std::size_t epochs_per_batch = 1;
  /// Groups (grpo/dapo) or trajectories (ppo/vpg) per minibatch; 0 means the whole batch.
  std::size_t minibatch_size = 0;
  double grad_clip = 10.0;
  std::size_t window = 2;
  std::uint64_t seed = 1;
  std::size_t moving_average_window = 20;
  /// Rollout threads. Output does not depend on this; deterministic mode pins it to 1.
  std::size_t workers = 1;
  CountdownEnvConfig countdown;
  BanditEnvConfig bandit;
};

TrainConfig default_config(Algorithm algorithm, EnvKind env = EnvKind::countdown);

/// Throws std::invalid_argument naming the offending field.
void validate(const TrainConfig& cfg);

std::unique_ptr<Environment> make_environment(const TrainConfig& cfg);

/// One row of the training log; field order is the CSV column order.
struct MetricsRecord {
  std::size_t step = 0;
  double mean_reward = 0.0;
  double accuracy = 0.0;
  double mean_entropy = 0.0;
  double approx_kl_old = 0.0;
  double approx_kl_ref = 0.0;
  double clip_fraction = 0.0;
  double mean_response_length = 0.0;
  double surrogate_objective = 0.0;
  double grad_norm = 0.0;
  double ds_overhead_fraction = 0.0;
};

/// Trailing mean over min(window, t + 1) points.
std::vector<double> moving_average(std::span<const double> series, std::size_t window);

/// Frozen copy of the parameters.
std::shared_ptr<const Policy> snapshot(const Policy& policy);

struct Batch {
  /// One group per kept prompt; ppo/vpg use the same layout with unnormalized members.
  std::vector<Group> groups;
  std::vector<Group> initial;
  RolloutStats stats;
};

/// Samples from `old_policy`, records logp_old/logp_ref/values and rewards.
/// ppo: terminal-token reward shaped per token by -β(log π_old - log π_ref).
/// grpo/dapo: group-relative advantages broadcast over each response.
Batch collect_batch(const TrainConfig& cfg, const Environment& env, const Policy& old_policy,
                    const Policy& reference, std::span<const Prompt> prompts, const Rng& rng);

struct TrainerState {
  OptimizerState actor_opt;
  OptimizerState critic_opt;
};

/// First-minibatch readings, taken before any parameter moves.
struct UpdateDiagnostics {
  double first_clip_fraction = 0.0;
  double first_approx_kl_old = 0.0;
  double first_max_ratio_dev = 0.0;
  ActorGradient first_policy_gradient;
  bool skipped = false;
};

struct UpdateResult {
  MetricsRecord metrics;
  UpdateDiagnostics diagnostics;
};

/// epochs_per_batch passes over shuffled minibatches, adaptive-moment steps on the
/// negated objective. Mutates `policy` and `state`; throws std::runtime_error on a
/// non-finite loss or gradient.
UpdateResult update(const TrainConfig& cfg, Policy& policy, Batch& batch, TrainerState& state,
                    std::size_t step);

/// Owns the environment, the live policy, and the fixed reference snapshot.
class Trainer {
 public:
  explicit Trainer(TrainConfig cfg);

  /// snapshot → collect → update once.
  MetricsRecord step();
  std::vector<MetricsRecord> run(const std::function<void(const MetricsRecord&, const Trainer&)>& on_step = {});

  const TrainConfig& config() const { return cfg_; }
  const Environment& env() const { return *env_; }
  const Policy& policy() const { return policy_; }
  const Policy& reference() const { return *reference_; }
  std::size_t steps_done() const { return step_; }
  const UpdateDiagnostics& last_diagnostics() const { return last_diag_; }

 private:
  std::vector<Prompt> choose_prompts(Rng& rng);

  TrainConfig cfg_;
  std::unique_ptr<Environment> env_;
  Policy policy_;
  std::shared_ptr<const Policy> reference_;
  TrainerState state_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::size_t step_ = 0;
  UpdateDiagnostics last_diag_;
};

std::vector<MetricsRecord> train(const TrainConfig& cfg);

}  // namespace polab

#pragma once

#include <span>
#include <vector>

#include "polab/core.hpp"
#include "polab/envs/environment.hpp"
#include "polab/objectives.hpp"
#include "polab/policy.hpp"
#include "polab/rng.hpp"

namespace polab {

struct DynamicSamplingConfig {
  bool enabled = false;
  std::size_t max_refill_rounds = 3;
};

void validate(const DynamicSamplingConfig& cfg);

struct RolloutStats {
  std::size_t groups_kept = 0;
  std::size_t groups_refilled = 0;
  std::size_t groups_dropped = 0;
  std::size_t base_samples = 0;
  std::size_t extra_samples = 0;
  /// extra_samples / base_samples.
  double wall_overhead_fraction = 0.0;

  // Over the first G draws of every prompt, before any filtering.
  std::size_t base_correct = 0;
  double base_reward_sum = 0.0;
  std::size_t base_tokens = 0;
};

/// Autoregressive draw until EOS (when the env stops there) or max_len tokens.
/// Fills tokens and logp_old (copied into logp_new); the reward is left unscored.
Trajectory sample_response(const Policy& policy, const Environment& env, const Prompt& prompt,
                           std::size_t max_len, Rng& rng, double temperature = 1.0);

void score_trajectory(const Environment& env, Trajectory& t);

/// G scored draws for one prompt. Throws if G < 2.
Group sample_group(const Policy& policy, const Environment& env, const Prompt& prompt,
                   std::size_t group_size, std::size_t max_len, Rng& rng);

struct SampledBatch {
  std::vector<Group> groups;
  RolloutStats stats;
  /// The first G draws of every prompt, kept or not.
  std::vector<Group> initial;
};

/// One group per prompt. Prompt i draws from rng.fork(i), so the result does
/// not depend on `workers`.
///
/// With dynamic sampling enabled, homogeneous groups (all correct or all wrong)
/// get up to max_refill_rounds extra rounds of G draws. The first mixed subset
/// of size G is kept (earliest correct, earliest incorrect, then draw order);
/// groups that never mix are dropped.
SampledBatch sample_batch(const Policy& policy, const Environment& env,
                          std::span<const Prompt> prompts, std::size_t group_size,
                          std::size_t max_len, const DynamicSamplingConfig& ds, const Rng& rng,
                          std::size_t workers = 1);

/// sample_batch with filtering on; throws std::runtime_error("no informative groups")
/// when every group was dropped.
SampledBatch dynamic_sample(const Policy& policy, const Environment& env,
                            std::span<const Prompt> prompts, std::size_t group_size,
                            std::size_t max_len, const DynamicSamplingConfig& cfg, const Rng& rng,
                            std::size_t workers = 1);

/// Share of ratios strictly outside [1 - eps_low, 1 + eps_high].
double clip_fraction(std::span<const double> ratios, const ClipRange& range);

/// Mean k3 estimate of KL between the new and old policy over tokens.
double approx_kl(std::span<const double> logp_new, std::span<const double> logp_old);

/// Runs fn(i) for i in [0, n) on up to `workers` threads.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn);

}  // namespace polab

#include "polab/detail/parallel_for.hpp"

#include "polab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace polab {

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::ppo: return "ppo";
    case Algorithm::grpo: return "grpo";
    case Algorithm::dapo: return "dapo";
    case Algorithm::vpg: return "vpg";
  }
  return "unknown";
}

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "ppo") return Algorithm::ppo;
  if (name == "grpo") return Algorithm::grpo;
  if (name == "dapo") return Algorithm::dapo;
  if (name == "vpg") return Algorithm::vpg;
  throw std::invalid_argument("unknown algorithm: " + name);
}

TrainConfig default_config(Algorithm algorithm, EnvKind env) {
  TrainConfig cfg;
  cfg.algorithm = algorithm;
  cfg.env = env;
  switch (algorithm) {
    case Algorithm::ppo:
      cfg.epochs_per_batch = 4;
      cfg.adam.learning_rate = 0.02;
      cfg.coeffs.beta = 0.01;
      cfg.aggregation = AggregationMode::token_level;
      break;
    case Algorithm::grpo:
      cfg.coeffs.beta = 0.01;
      cfg.aggregation = AggregationMode::sample_level;
      break;
    case Algorithm::dapo:
      cfg.clip = ClipRange{0.2, 0.28};
      cfg.coeffs.beta = 0.0;
      cfg.aggregation = AggregationMode::token_level;
      break;
    case Algorithm::vpg:
      cfg.coeffs.beta = 0.0;
      cfg.aggregation = AggregationMode::token_level;
      break;
  }
  return cfg;
}

namespace {

bool uses_groups(Algorithm a) { return a == Algorithm::grpo || a == Algorithm::dapo; }

[[noreturn]] void bad(const std::string& msg) { throw std::invalid_argument(msg); }

}  // namespace

void validate(const TrainConfig& cfg) {
  if (cfg.steps < 1) bad("steps must be at least 1");
  if (cfg.prompts_per_step < 1) bad("prompts_per_step must be at least 1");
  if (uses_groups(cfg.algorithm) && cfg.group_size < 2) bad("G < 2");
  if (cfg.group_size < 1) bad("group_size must be at least 1");
  if (cfg.max_len < 1) bad("max_len must be at least 1");
  validate(cfg.adam);
  validate(cfg.gae);
  validate(cfg.clip);
  validate(cfg.coeffs);
  validate(cfg.group_adv);
  if (cfg.ds.enabled) {
    validate(cfg.ds);
    if (!uses_groups(cfg.algorithm)) bad("dynamic sampling needs a group-based algorithm (grpo or dapo)");
  }
  if (cfg.algorithm == Algorithm::dapo && cfg.coeffs.beta != 0.0) bad("dapo has no KL term; beta must be 0");
  if (!(cfg.eps_v >= 0.0)) bad("eps_v must be non-negative");
  if (cfg.epochs_per_batch < 1) bad("epochs_per_batch must be at least 1");
  if (!(cfg.grad_clip >= 0.0)) bad("grad_clip must be non-negative");
  if (cfg.window < 1) bad("window must be at least 1");
  if (cfg.moving_average_window < 1) bad("moving_average_window must be at least 1");
  if (cfg.workers < 1) bad("workers must be at least 1");
  if (cfg.env == EnvKind::countdown) {
    if (cfg.countdown.k < 3 || cfg.countdown.k > 4) bad("countdown.k must be 3 or 4");
    if (cfg.countdown.max_target < 1 || cfg.countdown.max_target > 100) bad("countdown.max_target must lie in [1, 100]");
    if (cfg.countdown.num_prompts < 1) bad("countdown.num_prompts must be at least 1");
    countdown::validate(cfg.countdown.weights);
  } else {
    if (cfg.bandit.vocab_size < 2) bad("bandit.vocab_size must be at least 2");
    if (cfg.bandit.horizon < 1) bad("bandit.horizon must be at least 1");
    if (std::pow(static_cast<double>(cfg.bandit.vocab_size), static_cast<double>(cfg.bandit.horizon)) > 1e6)
      bad("bandit table exceeds 10^6 sequences");
  }
}

std::unique_ptr<Environment> make_environment(const TrainConfig& cfg) {
  if (cfg.env == EnvKind::seqbandit) {
    return std::make_unique<BanditEnv>(
        bandit::make_bandit_table(cfg.bandit.table_seed, cfg.bandit.vocab_size, cfg.bandit.horizon));
  }
  std::vector<CountdownInstance> pool;
  if (!cfg.countdown.instances_path.empty()) {
    pool = countdown::read_instances_jsonl(cfg.countdown.instances_path);
  } else {
    Rng rng(cfg.countdown.dataset_seed, 0xc0de);
    for (std::size_t i = 0; i < cfg.countdown.num_prompts; ++i)
      pool.push_back(countdown::generate_countdown_instance(rng, cfg.countdown.k, cfg.countdown.max_target));
  }
  return std::make_unique<CountdownEnv>(std::move(pool), cfg.countdown.weights, cfg.max_len);
}

std::vector<double> moving_average(std::span<const double> series, std::size_t window) {
  if (window < 1) throw std::invalid_argument("moving_average: window must be at least 1");
  std::vector<double> out(series.size());
  double sum = 0.0;
  for (std::size_t t = 0; t < series.size(); ++t) {
    sum += series[t];
    if (t >= window) sum -= series[t - window];
    out[t] = sum / static_cast<double>(std::min(window, t + 1));
  }
  return out;
}

std::shared_ptr<const Policy> snapshot(const Policy& policy) {
  return std::make_shared<const Policy>(policy);
}

namespace {

void fill_reference(const Policy& reference, Trajectory& t) {
  t.logp_ref = reference.sequence_log_probs(t.prompt, t.tokens);
}

void fill_rewards(const TrainConfig& cfg, Trajectory& t) {
  t.per_token_rewards.assign(t.length(), 0.0);
  t.per_token_rewards.back() = t.scalar_reward;
  if (cfg.algorithm == Algorithm::ppo && cfg.coeffs.beta != 0.0) {
    for (std::size_t i = 0; i < t.length(); ++i)
      t.per_token_rewards[i] =
          shaped_token_reward(t.per_token_rewards[i], t.logp_old[i], t.logp_ref[i], cfg.coeffs.beta);
  }
}

void fill_values(const Policy& old_policy, Trajectory& t) {
  for (std::size_t i = 0; i < t.length(); ++i)
    t.values[i] = old_policy.value(t.prompt, std::span<const Token>(t.tokens.data(), i));
}

}  // namespace

Batch collect_batch(const TrainConfig& cfg, const Environment& env, const Policy& old_policy,
                    const Policy& reference, std::span<const Prompt> prompts, const Rng& rng) {
  Batch batch;
  const std::size_t max_len = env.max_len();
  if (uses_groups(cfg.algorithm)) {
    auto sampled = sample_batch(old_policy, env, prompts, cfg.group_size, max_len, cfg.ds, rng, cfg.workers);
    batch.groups = std::move(sampled.groups);
    batch.initial = std::move(sampled.initial);
    batch.stats = sampled.stats;
  } else {
    std::vector<Group> groups(prompts.size());
    parallel_for(prompts.size(), cfg.workers, [&](std::size_t i) {
      Rng local = rng.fork(i);
      groups[i].prompt = prompts[i];
      for (std::size_t j = 0; j < cfg.group_size; ++j) {
        groups[i].members.push_back(sample_response(old_policy, env, prompts[i], max_len, local));
        score_trajectory(env, groups[i].members.back());
      }
    });
    for (const auto& g : groups) {
      for (const auto& m : g.members) {
        ++batch.stats.base_samples;
        batch.stats.base_correct += m.correct ? 1 : 0;
        batch.stats.base_reward_sum += m.scalar_reward;
        batch.stats.base_tokens += m.length();
      }
    }
    batch.stats.groups_kept = groups.size();
    batch.initial = groups;
    batch.groups = std::move(groups);
  }

  for (auto& g : batch.initial)
    for (auto& m : g.members) fill_reference(reference, m);

  for (auto& g : batch.groups) {
    for (auto& m : g.members) {
      fill_reference(reference, m);
      fill_rewards(cfg, m);
      if (!uses_groups(cfg.algorithm)) fill_values(old_policy, m);
    }
    if (uses_groups(cfg.algorithm)) {
      std::vector<double> rewards;
      for (const auto& m : g.members) rewards.push_back(m.scalar_reward);
      const auto adv = group_relative_advantages(rewards, cfg.group_adv);
      for (std::size_t i = 0; i < g.members.size(); ++i)
        g.members[i].advantages = broadcast_advantage(adv[i], g.members[i].length());
    }
  }
  return batch;
}

namespace {

void require_finite(double v, const char* what, std::size_t step) {
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os << "non-finite " << what << " at step " << step;
    throw std::runtime_error(os.str());
  }
}

void require_finite(std::span<const double> xs, const char* what, std::size_t step) {
  for (double x : xs) require_finite(x, what, step);
}

std::vector<std::vector<std::size_t>> make_minibatches(std::size_t n, std::size_t size, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  if (size == 0 || size >= n) return {idx};
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < n; start += size)
    out.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(start),
                     idx.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + size)));
  return out;
}

template <typename T>
std::vector<T> pick(const std::vector<T>& xs, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(xs[i]);
  return out;
}

/// Per-trajectory GAE (ppo) or return-minus-baseline (vpg); also the critic targets.
void prepare_token_advantages(const TrainConfig& cfg, const Policy& policy, std::vector<Trajectory>& trajs,
                              std::vector<std::vector<double>>& targets) {
  targets.clear();
  for (auto& t : trajs) {
    if (cfg.algorithm == Algorithm::ppo) {
      std::vector<double> values = t.values;
      values.push_back(0.0);  // every episode terminates
      const auto deltas = td_errors(t.per_token_rewards, values, cfg.gae.gamma);
      t.advantages = gae(deltas, cfg.gae.gamma, cfg.gae.lambda);
      targets.push_back(value_targets(t.advantages, t.values));
    } else {
      targets.push_back(discounted_returns(t.per_token_rewards, cfg.gae.gamma));
      t.advantages = reinforce_advantages(policy, t, cfg.gae.gamma, cfg.baseline);
    }
  }
  if (cfg.algorithm == Algorithm::ppo && cfg.whiten_advantages) {
    std::vector<double> flat;
    for (const auto& t : trajs) flat.insert(flat.end(), t.advantages.begin(), t.advantages.end());
    if (flat.size() >= 2) {
      const auto w = whiten(flat);
      std::size_t k = 0;
      for (auto& t : trajs)
        for (double& a : t.advantages) a = w[k++];
    }
  }
}

}  // namespace

UpdateResult update(const TrainConfig& cfg, Policy& policy, Batch& batch, TrainerState& state,
                    std::size_t step) {
  UpdateResult result;
  MetricsRecord& rec = result.metrics;
  rec.step = step;
  if (batch.groups.empty()) {
    result.diagnostics.skipped = true;
    return result;
  }
  if (state.actor_opt.m.size() != policy.params().actor.size())
    state.actor_opt = OptimizerState(policy.params().actor.size());
  if (state.critic_opt.m.size() != policy.params().critic.size())
    state.critic_opt = OptimizerState(policy.params().critic.size());

  const bool grouped = uses_groups(cfg.algorithm);
  const double beta = cfg.algorithm == Algorithm::grpo ? cfg.coeffs.beta : 0.0;
  const bool train_critic = cfg.algorithm == Algorithm::ppo ||
                            (cfg.algorithm == Algorithm::vpg && cfg.baseline == BaselineMode::value_head);

  std::vector<Trajectory> trajs;
  std::vector<std::vector<double>> targets;
  if (!grouped) {
    for (const auto& g : batch.groups) trajs.insert(trajs.end(), g.members.begin(), g.members.end());
    prepare_token_advantages(cfg, policy, trajs, targets);
  }

  Rng shuffle_rng = Rng(cfg.seed).fork(step).fork(2);
  const std::size_t units = grouped ? batch.groups.size() : trajs.size();
  bool first = true;
  double grad_norm_sum = 0.0;
  std::size_t grad_norm_count = 0;
  const ClipRange vpg_range{1.0 - 1e-12, 1e12};

  for (std::size_t epoch = 0; epoch < cfg.epochs_per_batch; ++epoch) {
    const bool final_epoch = epoch + 1 == cfg.epochs_per_batch;
    for (const auto& mb : make_minibatches(units, cfg.minibatch_size, shuffle_rng)) {
      SurrogateEval sur;
      std::vector<Trajectory> mb_trajs;
      if (grouped) {
        const auto mb_groups = pick(batch.groups, mb);
        sur = evaluate_group_surrogate(policy, mb_groups, cfg.clip, beta, cfg.aggregation);
        for (const auto& g : mb_groups) mb_trajs.insert(mb_trajs.end(), g.members.begin(), g.members.end());
      } else {
        mb_trajs = pick(trajs, mb);
        sur = evaluate_ppo_surrogate(policy, mb_trajs, cfg.algorithm == Algorithm::vpg ? vpg_range : cfg.clip);
      }
      require_finite(sur.objective, "surrogate objective", step);
      require_finite(sur.grad, "policy gradient", step);

      if (first) {
        result.diagnostics.first_clip_fraction = sur.clip_fraction;
        result.diagnostics.first_approx_kl_old = sur.approx_kl_old;
        result.diagnostics.first_max_ratio_dev = sur.max_abs_ratio_dev;
        result.diagnostics.first_policy_gradient = sur.grad;
        first = false;
      }
      if (final_epoch) {
        grad_norm_sum += l2_norm(sur.grad);
        ++grad_norm_count;
      }

      // descent direction on the loss -J + c1·critic - c2·entropy
      ActorGradient actor_grad(sur.grad.size());
      for (std::size_t i = 0; i < actor_grad.size(); ++i) actor_grad[i] = -sur.grad[i];
      if (cfg.coeffs.c2 > 0.0) {
        const auto ent = evaluate_entropy_bonus(policy, mb_trajs);
        require_finite(ent.entropy, "entropy", step);
        for (std::size_t i = 0; i < actor_grad.size(); ++i) actor_grad[i] -= cfg.coeffs.c2 * ent.grad[i];
      }
      std::vector<double> critic_grad(policy.params().critic.size(), 0.0);
      if (train_critic) {
        const auto mb_targets = pick(targets, mb);
        const double eps_v = cfg.algorithm == Algorithm::ppo ? cfg.eps_v : 0.0;
        const auto critic = evaluate_critic_loss(policy, mb_trajs, mb_targets, eps_v);
        require_finite(critic.loss, "critic loss", step);
        for (std::size_t i = 0; i < critic_grad.size(); ++i) critic_grad[i] = cfg.coeffs.c1 * critic.grad[i];
      }
      clip_grad_norm(actor_grad, critic_grad, cfg.grad_clip);
      adam_step(policy.params().actor, actor_grad, state.actor_opt, cfg.adam);
      if (train_critic) adam_step(policy.params().critic, critic_grad, state.critic_opt, cfg.adam);
      if (!policy.params().all_finite()) throw std::runtime_error("non-finite parameters after step " + std::to_string(step));
    }
  }

  // how far the update moved the policy, measured on the whole batch
  SurrogateEval after = grouped
      ? evaluate_group_surrogate(policy, batch.groups, cfg.clip, beta, cfg.aggregation)
      : evaluate_ppo_surrogate(policy, trajs, cfg.algorithm == Algorithm::vpg ? vpg_range : cfg.clip);
  // the clipped policy term alone; the KL penalty is reported through approx_kl_ref
  rec.surrogate_objective = after.objective + beta * after.kl_term;
  rec.clip_fraction = after.clip_fraction;
  rec.approx_kl_old = after.approx_kl_old;
  rec.grad_norm = grad_norm_count ? grad_norm_sum / static_cast<double>(grad_norm_count) : 0.0;
  return result;
}

Trainer::Trainer(TrainConfig cfg)
    : cfg_(std::move(cfg)),
      env_((validate(cfg_), make_environment(cfg_))),
      policy_(env_->layout(cfg_.window)),
      reference_(snapshot(policy_)) {
  state_.actor_opt = OptimizerState(policy_.params().actor.size());
  state_.critic_opt = OptimizerState(policy_.params().critic.size());
  order_.resize(env_->num_prompts());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  cursor_ = order_.size();
}

std::vector<Prompt> Trainer::choose_prompts(Rng& rng) {
  std::vector<Prompt> prompts;
  prompts.reserve(cfg_.prompts_per_step);
  while (prompts.size() < cfg_.prompts_per_step) {
    if (cursor_ >= order_.size()) {
      for (std::size_t i = order_.size(); i > 1; --i) std::swap(order_[i - 1], order_[rng.below(i)]);
      cursor_ = 0;
    }
    prompts.push_back(env_->prompt(order_[cursor_++]));
  }
  return prompts;
}

MetricsRecord Trainer::step() {
  const Rng step_rng = Rng(cfg_.seed).fork(step_);
  Rng prompt_rng = step_rng.fork(0);
  const auto prompts = choose_prompts(prompt_rng);
  const auto old_policy = snapshot(policy_);
  Batch batch = collect_batch(cfg_, *env_, *old_policy, *reference_, prompts, step_rng.fork(1));

  double entropy_sum = 0.0;
  double kl_ref_sum = 0.0;
  std::size_t tokens = 0;
  for (const auto& g : batch.initial) {
    for (const auto& m : g.members) {
      for (std::size_t t = 0; t < m.length(); ++t) {
        entropy_sum += old_policy->entropy(m.prompt, std::span<const Token>(m.tokens.data(), t));
        kl_ref_sum += kl_estimate_k3(m.logp_old[t], m.logp_ref[t]);
        ++tokens;
      }
    }
  }

  auto result = update(cfg_, policy_, batch, state_, step_);
  last_diag_ = std::move(result.diagnostics);
  MetricsRecord rec = result.metrics;
  const double n = static_cast<double>(std::max<std::size_t>(batch.stats.base_samples, 1));
  rec.mean_reward = batch.stats.base_reward_sum / n;
  rec.accuracy = static_cast<double>(batch.stats.base_correct) / n;
  rec.mean_response_length = static_cast<double>(batch.stats.base_tokens) / n;
  rec.mean_entropy = tokens ? entropy_sum / static_cast<double>(tokens) : 0.0;
  rec.approx_kl_ref = tokens ? kl_ref_sum / static_cast<double>(tokens) : 0.0;
  rec.ds_overhead_fraction = batch.stats.wall_overhead_fraction;
  ++step_;
  return rec;
}

std::vector<MetricsRecord> Trainer::run(
    const std::function<void(const MetricsRecord&, const Trainer&)>& on_step) {
  std::vector<MetricsRecord> records;
  records.reserve(cfg_.steps);
  while (step_ < cfg_.steps) {
    records.push_back(step());
    if (on_step) on_step(records.back(), *this);
  }
  return records;
}

std::vector<MetricsRecord> train(const TrainConfig& cfg) { return Trainer(cfg).run(); }

}  // namespace polab

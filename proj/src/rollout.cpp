#include "polab/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace polab {

void validate(const DynamicSamplingConfig& cfg) {
  if (cfg.max_refill_rounds < 1) throw std::invalid_argument("max_refill_rounds must be at least 1");
}

Trajectory sample_response(const Policy& policy, const Environment& env, const Prompt& prompt,
                           std::size_t max_len, Rng& rng, double temperature) {
  if (max_len < 1) throw std::invalid_argument("max_len must be at least 1");
  TokenSeq tokens;
  std::vector<double> logp;
  while (tokens.size() < max_len) {
    const Token tok = policy.sample_token(prompt, tokens, rng, temperature);
    logp.push_back(policy.log_prob(prompt, tokens, tok));
    tokens.push_back(tok);
    if (env.stops_at_eos() && tok == kEos) break;
  }
  Trajectory t = make_trajectory(prompt, std::move(tokens));
  t.logp_old = logp;
  t.logp_new = std::move(logp);
  return t;
}

void score_trajectory(const Environment& env, Trajectory& t) {
  const Score s = env.score(t.prompt, t.tokens);
  t.scalar_reward = s.reward;
  t.format_ok = s.format_ok;
  t.correct = s.correct;
}

Group sample_group(const Policy& policy, const Environment& env, const Prompt& prompt,
                   std::size_t group_size, std::size_t max_len, Rng& rng) {
  if (group_size < 2) throw std::invalid_argument("G < 2");
  Group g;
  g.prompt = prompt;
  g.members.reserve(group_size);
  for (std::size_t i = 0; i < group_size; ++i) {
    g.members.push_back(sample_response(policy, env, prompt, max_len, rng));
    score_trajectory(env, g.members.back());
  }
  return g;
}

namespace {

bool is_mixed(const std::vector<Trajectory>& draws) {
  bool any_correct = false;
  bool any_wrong = false;
  for (const auto& t : draws) (t.correct ? any_correct : any_wrong) = true;
  return any_correct && any_wrong;
}

std::vector<Trajectory> select_mixed(std::vector<Trajectory>& draws, std::size_t group_size) {
  const auto first_correct = static_cast<std::size_t>(
      std::find_if(draws.begin(), draws.end(), [](const Trajectory& t) { return t.correct; }) - draws.begin());
  const auto first_wrong = static_cast<std::size_t>(
      std::find_if(draws.begin(), draws.end(), [](const Trajectory& t) { return !t.correct; }) - draws.begin());
  std::vector<bool> take(draws.size(), false);
  take[first_correct] = take[first_wrong] = true;
  std::size_t count = 2;
  for (std::size_t i = 0; i < draws.size() && count < group_size; ++i) {
    if (!take[i]) {
      take[i] = true;
      ++count;
    }
  }
  std::vector<Trajectory> out;
  out.reserve(group_size);
  for (std::size_t i = 0; i < draws.size(); ++i)
    if (take[i]) out.push_back(std::move(draws[i]));
  return out;
}

struct PromptOutcome {
  std::optional<Group> group;
  Group initial;
  bool refilled = false;
  std::size_t extra = 0;
  std::size_t base_correct = 0;
  double base_reward = 0.0;
  std::size_t base_tokens = 0;
};

}  // namespace

SampledBatch sample_batch(const Policy& policy, const Environment& env,
                          std::span<const Prompt> prompts, std::size_t group_size,
                          std::size_t max_len, const DynamicSamplingConfig& ds, const Rng& rng,
                          std::size_t workers) {
  if (group_size < 2) throw std::invalid_argument("G < 2");
  if (ds.enabled) validate(ds);
  std::vector<PromptOutcome> outcomes(prompts.size());
  parallel_for(prompts.size(), workers, [&](std::size_t i) {
    Rng local = rng.fork(i);
    PromptOutcome& out = outcomes[i];
    Group g = sample_group(policy, env, prompts[i], group_size, max_len, local);
    for (const auto& m : g.members) {
      out.base_correct += m.correct ? 1 : 0;
      out.base_reward += m.scalar_reward;
      out.base_tokens += m.length();
    }
    out.initial = g;
    if (!ds.enabled || is_mixed(g.members)) {
      out.group = std::move(g);
      return;
    }
    out.refilled = true;
    std::vector<Trajectory> draws = std::move(g.members);
    for (std::size_t round = 0; round < ds.max_refill_rounds; ++round) {
      Group more = sample_group(policy, env, prompts[i], group_size, max_len, local);
      out.extra += group_size;
      for (auto& m : more.members) draws.push_back(std::move(m));
      if (is_mixed(draws)) {
        out.group = Group{prompts[i], select_mixed(draws, group_size)};
        return;
      }
    }
  });

  SampledBatch batch;
  for (auto& out : outcomes) {
    batch.stats.base_samples += group_size;
    batch.stats.extra_samples += out.extra;
    batch.stats.base_correct += out.base_correct;
    batch.stats.base_reward_sum += out.base_reward;
    batch.stats.base_tokens += out.base_tokens;
    if (out.refilled) ++batch.stats.groups_refilled;
    batch.initial.push_back(std::move(out.initial));
    if (out.group) {
      ++batch.stats.groups_kept;
      batch.groups.push_back(std::move(*out.group));
    } else {
      ++batch.stats.groups_dropped;
    }
  }
  if (batch.stats.base_samples > 0)
    batch.stats.wall_overhead_fraction =
        static_cast<double>(batch.stats.extra_samples) / static_cast<double>(batch.stats.base_samples);
  return batch;
}

SampledBatch dynamic_sample(const Policy& policy, const Environment& env,
                            std::span<const Prompt> prompts, std::size_t group_size,
                            std::size_t max_len, const DynamicSamplingConfig& cfg, const Rng& rng,
                            std::size_t workers) {
  if (!cfg.enabled) throw std::invalid_argument("dynamic_sample requires an enabled config");
  auto batch = sample_batch(policy, env, prompts, group_size, max_len, cfg, rng, workers);
  if (batch.groups.empty()) throw std::runtime_error("no informative groups");
  return batch;
}

double clip_fraction(std::span<const double> ratios, const ClipRange& range) {
  if (ratios.empty()) throw std::invalid_argument("clip_fraction: empty list");
  const auto n = std::count_if(ratios.begin(), ratios.end(), [&](double r) {
    return r < range.lower() || r > range.upper();
  });
  return static_cast<double>(n) / static_cast<double>(ratios.size());
}

double approx_kl(std::span<const double> logp_new, std::span<const double> logp_old) {
  if (logp_new.size() != logp_old.size()) throw std::invalid_argument("approx_kl: length mismatch");
  if (logp_new.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < logp_new.size(); ++i) sum += kl_estimate_k3(logp_new[i], logp_old[i]);
  return sum / static_cast<double>(logp_new.size());
}

}  // namespace polab

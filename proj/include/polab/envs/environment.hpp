#pragma once

#include <memory>
#include <vector>

#include "polab/core.hpp"
#include "polab/envs/bandit.hpp"
#include "polab/envs/countdown.hpp"
#include "polab/policy.hpp"

namespace polab {

struct Score {
  double reward = 0.0;
  bool format_ok = false;
  bool correct = false;
};

/// A fixed prompt pool with a verifiable reward.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual EnvKind kind() const = 0;
  virtual std::size_t vocab_size() const = 0;
  virtual std::size_t max_len() const = 0;
  /// Whether sampling stops at EOS; fixed-horizon environments ignore it.
  virtual bool stops_at_eos() const = 0;
  virtual std::size_t num_prompts() const = 0;
  virtual const Prompt& prompt(std::size_t i) const = 0;
  virtual Score score(const Prompt& prompt, const TokenSeq& response) const = 0;

  FeatureLayout layout(std::size_t window) const { return {num_prompts(), vocab_size(), window}; }
};

class CountdownEnv final : public Environment {
 public:
  CountdownEnv(std::vector<CountdownInstance> pool, countdown::RewardWeights weights,
               std::size_t max_len);

  EnvKind kind() const override { return EnvKind::countdown; }
  std::size_t vocab_size() const override { return vocab_.size(); }
  std::size_t max_len() const override { return max_len_; }
  bool stops_at_eos() const override { return true; }
  std::size_t num_prompts() const override { return prompts_.size(); }
  const Prompt& prompt(std::size_t i) const override { return prompts_.at(i); }
  Score score(const Prompt& prompt, const TokenSeq& response) const override;

  const countdown::Vocabulary& vocabulary() const { return vocab_; }
  const std::vector<CountdownInstance>& pool() const { return pool_; }

 private:
  std::vector<CountdownInstance> pool_;
  std::vector<Prompt> prompts_;
  countdown::RewardWeights weights_;
  countdown::Vocabulary vocab_;
  std::size_t max_len_;
};

/// Single-prompt sequence bandit. "Correct" means the response is the optimal sequence.
class BanditEnv final : public Environment {
 public:
  explicit BanditEnv(bandit::BanditTable table);

  EnvKind kind() const override { return EnvKind::seqbandit; }
  std::size_t vocab_size() const override { return table_.vocab_size; }
  std::size_t max_len() const override { return table_.horizon; }
  bool stops_at_eos() const override { return false; }
  std::size_t num_prompts() const override { return 1; }
  const Prompt& prompt(std::size_t i) const override;
  Score score(const Prompt& prompt, const TokenSeq& response) const override;

  const bandit::BanditTable& table() const { return table_; }
  const bandit::Optimum& optimum() const { return optimum_; }

 private:
  bandit::BanditTable table_;
  bandit::Optimum optimum_;
  Prompt prompt_;
};

}  // namespace polab

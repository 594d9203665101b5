#include "polab/envs/environment.hpp"

#include <stdexcept>

namespace polab {

CountdownEnv::CountdownEnv(std::vector<CountdownInstance> pool, countdown::RewardWeights weights,
                           std::size_t max_len)
    : pool_(std::move(pool)),
      weights_(weights),
      vocab_(pool_.empty() ? 3 : pool_.front().numbers.size()),
      max_len_(max_len) {
  if (pool_.empty()) throw std::invalid_argument("countdown pool is empty");
  if (max_len_ < 1) throw std::invalid_argument("max_len must be at least 1");
  countdown::validate(weights_);
  for (std::size_t i = 0; i < pool_.size(); ++i) {
    if (pool_[i].numbers.size() != vocab_.k())
      throw std::invalid_argument("all countdown instances in a pool need the same k");
    prompts_.push_back(Prompt{EnvKind::countdown, i, pool_[i]});
  }
}

Score CountdownEnv::score(const Prompt& prompt, const TokenSeq& response) const {
  const auto& inst = std::get<CountdownInstance>(prompt.payload);
  const auto r = countdown::countdown_reward(inst, response, weights_);
  return {r.reward, r.format_ok, r.correct};
}

BanditEnv::BanditEnv(bandit::BanditTable table)
    : table_(std::move(table)),
      optimum_(bandit::bandit_optimum(table_)),
      prompt_{EnvKind::seqbandit, 0, BanditRef{table_.seed}} {}

const Prompt& BanditEnv::prompt(std::size_t i) const {
  if (i != 0) throw std::out_of_range("bandit env has a single prompt");
  return prompt_;
}

Score BanditEnv::score(const Prompt&, const TokenSeq& response) const {
  const double r = bandit::bandit_reward(table_, response);
  return {r, true, response == optimum_.sequence};
}

}  // namespace polab

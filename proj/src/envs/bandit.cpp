#include "polab/envs/bandit.hpp"

#include <cmath>
#include <stdexcept>

#include "polab/rng.hpp"

namespace polab::bandit {

namespace {

constexpr std::size_t kMaxTableSize = 1'000'000;

std::size_t table_size(std::size_t vocab_size, std::size_t horizon) {
  std::size_t n = 1;
  for (std::size_t t = 0; t < horizon; ++t) {
    n *= vocab_size;
    if (n > kMaxTableSize) throw std::invalid_argument("bandit table exceeds 10^6 sequences");
  }
  return n;
}

void expected_rec(const BanditTable& table, const Policy& policy, const Prompt& prompt,
                  TokenSeq& prefix, double prob, std::size_t index, double& acc) {
  if (prefix.size() == table.horizon) {
    acc += prob * table.rewards[index];
    return;
  }
  const auto lp = policy.log_probs(prompt, prefix);
  for (std::size_t a = 0; a < table.vocab_size; ++a) {
    prefix.push_back(Token{static_cast<std::uint32_t>(a)});
    expected_rec(table, policy, prompt, prefix, prob * std::exp(lp[a]),
                 index * table.vocab_size + a, acc);
    prefix.pop_back();
  }
}

}  // namespace

std::size_t BanditTable::index_of(const TokenSeq& seq) const {
  if (seq.size() != horizon) throw std::invalid_argument("bandit response has wrong length");
  std::size_t idx = 0;
  for (Token t : seq) {
    if (t.id >= vocab_size) throw std::out_of_range("bandit token outside vocabulary");
    idx = idx * vocab_size + t.id;
  }
  return idx;
}

TokenSeq BanditTable::sequence_at(std::size_t index) const {
  TokenSeq seq(horizon);
  for (std::size_t t = horizon; t-- > 0;) {
    seq[t] = Token{static_cast<std::uint32_t>(index % vocab_size)};
    index /= vocab_size;
  }
  return seq;
}

BanditTable make_bandit_table(std::uint64_t seed, std::size_t vocab_size, std::size_t horizon) {
  if (vocab_size < 2 || horizon < 1) throw std::invalid_argument("bandit needs V >= 2 and T >= 1");
  BanditTable table;
  table.horizon = horizon;
  table.vocab_size = vocab_size;
  table.seed = seed;
  Rng rng(seed, 0xba4d17);
  table.rewards.resize(table_size(vocab_size, horizon));
  for (double& r : table.rewards) r = rng.uniform();
  return table;
}

double bandit_reward(const BanditTable& table, const TokenSeq& response) {
  return table.rewards.at(table.index_of(response));
}

Optimum bandit_optimum(const BanditTable& table) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < table.rewards.size(); ++i)
    if (table.rewards[i] > table.rewards[best]) best = i;
  return {table.sequence_at(best), table.rewards[best]};
}

double expected_reward(const BanditTable& table, const Policy& policy, const Prompt& prompt) {
  if (policy.vocab_size() != table.vocab_size)
    throw std::invalid_argument("policy vocabulary does not match the bandit table");
  TokenSeq prefix;
  double acc = 0.0;
  expected_rec(table, policy, prompt, prefix, 1.0, 0, acc);
  return acc;
}

}  // namespace polab::bandit

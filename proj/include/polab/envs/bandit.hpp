#pragma once

#include <cstdint>
#include <vector>

#include "polab/core.hpp"
#include "polab/policy.hpp"

namespace polab::bandit {

/// Reward for every length-`horizon` sequence over `vocab_size` symbols.
/// Sequences index the table in base-V, first token most significant.
struct BanditTable {
  std::size_t horizon = 0;
  std::size_t vocab_size = 0;
  std::uint64_t seed = 0;
  std::vector<double> rewards;

  std::size_t index_of(const TokenSeq& seq) const;
  TokenSeq sequence_at(std::size_t index) const;
};

/// Rewards drawn uniformly from [0, 1) with the given seed.
BanditTable make_bandit_table(std::uint64_t seed, std::size_t vocab_size, std::size_t horizon);

double bandit_reward(const BanditTable& table, const TokenSeq& response);

struct Optimum {
  TokenSeq sequence;
  double reward = 0.0;
};

Optimum bandit_optimum(const BanditTable& table);

/// Σ over all sequences of π(sequence) · reward, by exhaustive enumeration.
double expected_reward(const BanditTable& table, const Policy& policy, const Prompt& prompt);

}  // namespace polab::bandit

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace polab {

/// Index into an environment's vocabulary. Id 0 is reserved for EOS everywhere.
struct Token {
  std::uint32_t id = 0;

  friend constexpr auto operator<=>(const Token&, const Token&) = default;
};

inline constexpr Token kEos{0};

using TokenSeq = std::vector<Token>;

enum class EnvKind { countdown, seqbandit };

const char* to_string(EnvKind kind);
EnvKind env_kind_from_string(const std::string& name);

struct CountdownInstance {
  std::vector<int> numbers;
  int target = 0;

  friend bool operator==(const CountdownInstance&, const CountdownInstance&) = default;
};

struct BanditRef {
  std::uint64_t table_id = 0;

  friend bool operator==(const BanditRef&, const BanditRef&) = default;
};

/// A question q. `slot` selects the prompt block of the state features.
struct Prompt {
  EnvKind env_kind = EnvKind::countdown;
  std::size_t slot = 0;
  std::variant<CountdownInstance, BanditRef> payload;

  friend bool operator==(const Prompt&, const Prompt&) = default;
};

/// One sampled response o with everything the objectives need per position.
struct Trajectory {
  Prompt prompt;
  TokenSeq tokens;
  std::vector<double> logp_new;
  std::vector<double> logp_old;
  std::vector<double> logp_ref;
  std::vector<double> values;
  std::vector<double> per_token_rewards;
  std::vector<double> advantages;
  double scalar_reward = 0.0;
  bool format_ok = false;
  bool correct = false;

  std::size_t length() const { return tokens.size(); }
};

struct Group {
  Prompt prompt;
  std::vector<Trajectory> members;

  std::size_t size() const { return members.size(); }
};

/// Actor θ is a [vocab_size x feature_dim] row-major matrix; critic φ has feature_dim entries.
struct PolicyParams {
  std::size_t vocab_size = 0;
  std::size_t feature_dim = 0;
  std::vector<double> actor;
  std::vector<double> critic;

  static PolicyParams zeros(std::size_t vocab_size, std::size_t feature_dim);

  double& actor_at(std::size_t token, std::size_t feature) { return actor[token * feature_dim + feature]; }
  double actor_at(std::size_t token, std::size_t feature) const { return actor[token * feature_dim + feature]; }

  bool all_finite() const;

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;
};

/// Every invariant violation found; empty when the trajectory is valid.
std::vector<std::string> validate_trajectory(const Trajectory& t);

/// Checks G >= 2 and that every member answers the group's prompt.
std::vector<std::string> validate_group(const Group& g);

/// Fills all per-token arrays with zeros of the token length.
Trajectory make_trajectory(Prompt prompt, TokenSeq tokens);

}  // namespace polab

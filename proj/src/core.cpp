#include "polab/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace polab {

const char* to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::countdown: return "countdown";
    case EnvKind::seqbandit: return "seqbandit";
  }
  return "unknown";
}

EnvKind env_kind_from_string(const std::string& name) {
  if (name == "countdown") return EnvKind::countdown;
  if (name == "seqbandit") return EnvKind::seqbandit;
  throw std::invalid_argument("unknown env: " + name);
}

PolicyParams PolicyParams::zeros(std::size_t vocab_size, std::size_t feature_dim) {
  PolicyParams p;
  p.vocab_size = vocab_size;
  p.feature_dim = feature_dim;
  p.actor.assign(vocab_size * feature_dim, 0.0);
  p.critic.assign(feature_dim, 0.0);
  return p;
}

bool PolicyParams::all_finite() const {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(actor.begin(), actor.end(), finite) &&
         std::all_of(critic.begin(), critic.end(), finite);
}

namespace {

bool payload_matches(const Prompt& p) {
  switch (p.env_kind) {
    case EnvKind::countdown: return std::holds_alternative<CountdownInstance>(p.payload);
    case EnvKind::seqbandit: return std::holds_alternative<BanditRef>(p.payload);
  }
  return false;
}

}  // namespace

std::vector<std::string> validate_trajectory(const Trajectory& t) {
  std::vector<std::string> errors;
  const std::size_t n = t.tokens.size();
  if (n == 0) errors.emplace_back("empty response");
  if (!payload_matches(t.prompt)) errors.emplace_back("prompt payload does not match env kind");

  const std::pair<const char*, const std::vector<double>*> arrays[] = {
      {"logp_new", &t.logp_new},   {"logp_old", &t.logp_old},
      {"logp_ref", &t.logp_ref},   {"values", &t.values},
      {"per_token_rewards", &t.per_token_rewards}, {"advantages", &t.advantages}};
  for (const auto& [name, arr] : arrays) {
    if (arr->size() != n) errors.push_back(std::string("length mismatch: ") + name);
    if (std::any_of(arr->begin(), arr->end(), [](double v) { return !std::isfinite(v); }))
      errors.push_back(std::string("non-finite entry: ") + name);
  }
  for (const auto* arr : {&t.logp_new, &t.logp_old, &t.logp_ref}) {
    if (std::any_of(arr->begin(), arr->end(), [](double v) { return v > 0.0; })) {
      errors.emplace_back("positive log-prob");
      break;
    }
  }
  if (!(t.scalar_reward >= 0.0)) errors.emplace_back("negative scalar reward");
  if (t.correct && !t.format_ok) errors.emplace_back("correct response without valid format");
  return errors;
}

std::vector<std::string> validate_group(const Group& g) {
  std::vector<std::string> errors;
  if (g.members.size() < 2) errors.emplace_back("G < 2");
  for (const auto& m : g.members) {
    if (!(m.prompt == g.prompt)) {
      errors.emplace_back("prompt mismatch");
      break;
    }
  }
  return errors;
}

Trajectory make_trajectory(Prompt prompt, TokenSeq tokens) {
  Trajectory t;
  t.prompt = std::move(prompt);
  t.tokens = std::move(tokens);
  const std::size_t n = t.tokens.size();
  for (auto* arr : {&t.logp_new, &t.logp_old, &t.logp_ref, &t.values, &t.per_token_rewards,
                    &t.advantages})
    arr->assign(n, 0.0);
  return t;
}

}  // namespace polab

#include "polab/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace polab {

ActiveFeatures active_features(const FeatureLayout& layout, const Prompt& prompt,
                               std::span<const Token> prefix) {
  if (prompt.slot >= layout.prompt_slots) throw std::out_of_range("prompt slot outside layout");
  ActiveFeatures active;
  active.push_back(prompt.slot);
  for (std::size_t j = 0; j < layout.window && j < prefix.size(); ++j) {
    const Token tok = prefix[prefix.size() - 1 - j];
    if (tok.id >= layout.vocab_size) throw std::out_of_range("token id outside vocabulary");
    active.push_back(layout.prompt_slots + j * layout.vocab_size + tok.id);
  }
  return active;
}

FeatureVector featurize(const FeatureLayout& layout, const Prompt& prompt,
                        std::span<const Token> prefix) {
  FeatureVector f(layout.dim(), 0.0);
  for (std::size_t idx : active_features(layout, prompt, prefix)) f[idx] = 1.0;
  return f;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - mx);
  const double lse = mx + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = std::min(logits[i] - lse, 0.0);
  return out;
}

Policy::Policy(FeatureLayout layout)
    : Policy(layout, PolicyParams::zeros(layout.vocab_size, layout.dim())) {}

Policy::Policy(FeatureLayout layout, PolicyParams params)
    : layout_(layout), params_(std::move(params)) {
  if (params_.vocab_size != layout_.vocab_size || params_.feature_dim != layout_.dim() ||
      params_.actor.size() != layout_.vocab_size * layout_.dim() ||
      params_.critic.size() != layout_.dim())
    throw std::invalid_argument("policy parameters do not match the feature layout");
}

std::vector<double> Policy::logits_from(const ActiveFeatures& active) const {
  const std::size_t v = layout_.vocab_size;
  const std::size_t f = params_.feature_dim;
  std::vector<double> z(v, 0.0);
  for (std::size_t a = 0; a < v; ++a) {
    const double* row = params_.actor.data() + a * f;
    for (std::size_t idx : active) z[a] += row[idx];
    if (!std::isfinite(z[a])) throw std::domain_error("non-finite policy parameters");
  }
  return z;
}

std::vector<double> Policy::logits(const Prompt& prompt, std::span<const Token> prefix) const {
  return logits_from(active_features(layout_, prompt, prefix));
}

std::vector<double> Policy::log_probs(const Prompt& prompt, std::span<const Token> prefix) const {
  return log_softmax(logits(prompt, prefix));
}

double Policy::log_prob(const Prompt& prompt, std::span<const Token> prefix, Token token) const {
  if (token.id >= layout_.vocab_size) throw std::out_of_range("token id outside vocabulary");
  return log_probs(prompt, prefix)[token.id];
}

Token Policy::sample_token(const Prompt& prompt, std::span<const Token> prefix, Rng& rng,
                           double temperature) const {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  const auto z = logits(prompt, prefix);
  if (temperature < 1e-6) {
    return Token{static_cast<std::uint32_t>(std::max_element(z.begin(), z.end()) - z.begin())};
  }
  std::vector<double> scaled(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) scaled[i] = z[i] / temperature;
  const auto lp = log_softmax(scaled);
  const double u = rng.uniform();
  double cum = 0.0;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    cum += std::exp(lp[i]);
    if (u < cum) return Token{static_cast<std::uint32_t>(i)};
  }
  // u landed in the rounding slack above the last cumulative sum
  std::size_t last = lp.size() - 1;
  while (last > 0 && lp[last] == -std::numeric_limits<double>::infinity()) --last;
  return Token{static_cast<std::uint32_t>(last)};
}

std::vector<double> Policy::sequence_log_probs(const Prompt& prompt,
                                               std::span<const Token> response) const {
  if (response.empty()) throw std::invalid_argument("response must be non-empty");
  std::vector<double> out(response.size());
  for (std::size_t t = 0; t < response.size(); ++t)
    out[t] = log_prob(prompt, response.first(t), response[t]);
  return out;
}

double Policy::entropy(const Prompt& prompt, std::span<const Token> prefix) const {
  const auto lp = log_probs(prompt, prefix);
  double h = 0.0;
  for (double l : lp) {
    const double p = std::exp(l);
    if (p > 0.0) h -= p * l;
  }
  return h;
}

ActorGradient Policy::grad_log_prob(const Prompt& prompt, std::span<const Token> prefix,
                                    Token token) const {
  ActorGradient g(params_.actor.size(), 0.0);
  add_grad_log_prob(g, prompt, prefix, token, 1.0);
  return g;
}

StepEval Policy::step(const Prompt& prompt, std::span<const Token> prefix) const {
  StepEval s;
  s.active = active_features(layout_, prompt, prefix);
  s.log_probs = log_softmax(logits_from(s.active));
  return s;
}

void Policy::add_grad_log_prob(ActorGradient& grad, const StepEval& step, Token token,
                               double coef) const {
  if (coef == 0.0) return;
  const std::size_t f = params_.feature_dim;
  for (std::size_t a = 0; a < step.log_probs.size(); ++a) {
    const double d = coef * ((a == token.id ? 1.0 : 0.0) - std::exp(step.log_probs[a]));
    for (std::size_t idx : step.active) grad[a * f + idx] += d;
  }
}

void Policy::add_grad_entropy(ActorGradient& grad, const StepEval& step, double coef) const {
  if (coef == 0.0) return;
  double h = 0.0;
  for (double l : step.log_probs) h -= std::exp(l) * l;
  const std::size_t f = params_.feature_dim;
  // dH/dz_a = -π_a (log π_a + H)
  for (std::size_t a = 0; a < step.log_probs.size(); ++a) {
    const double d = -coef * std::exp(step.log_probs[a]) * (step.log_probs[a] + h);
    for (std::size_t idx : step.active) grad[a * f + idx] += d;
  }
}

void Policy::add_grad_log_prob(ActorGradient& grad, const Prompt& prompt,
                               std::span<const Token> prefix, Token token, double coef) const {
  if (coef == 0.0) return;
  add_grad_log_prob(grad, step(prompt, prefix), token, coef);
}

void Policy::add_grad_entropy(ActorGradient& grad, const Prompt& prompt,
                              std::span<const Token> prefix, double coef) const {
  if (coef == 0.0) return;
  add_grad_entropy(grad, step(prompt, prefix), coef);
}

double Policy::value(const Prompt& prompt, std::span<const Token> prefix) const {
  double v = 0.0;
  for (std::size_t idx : active_features(layout_, prompt, prefix)) v += params_.critic[idx];
  return v;
}

std::vector<double> Policy::grad_value(const Prompt& prompt, std::span<const Token> prefix) const {
  return featurize(layout_, prompt, prefix);
}

void Policy::add_grad_value(std::vector<double>& grad, const Prompt& prompt,
                            std::span<const Token> prefix, double coef) const {
  for (std::size_t idx : active_features(layout_, prompt, prefix)) grad[idx] += coef;
}

}  // namespace polab

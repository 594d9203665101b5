#pragma once

#include <span>
#include <vector>

#include <boost/container/small_vector.hpp>

#include "polab/core.hpp"
#include "polab/rng.hpp"

namespace polab {

/// Shape of the state encoding: one prompt block plus `window` one-hot token blocks.
struct FeatureLayout {
  std::size_t prompt_slots = 1;
  std::size_t vocab_size = 0;
  std::size_t window = 2;

  std::size_t dim() const { return prompt_slots + window * vocab_size; }
};

using FeatureVector = std::vector<double>;
/// Indices of the 1-entries of a FeatureVector.
using ActiveFeatures = boost::container::small_vector<std::size_t, 4>;
/// Same layout as PolicyParams::actor.
using ActorGradient = std::vector<double>;

/// Depends only on the prompt slot and the last `window` prefix tokens.
ActiveFeatures active_features(const FeatureLayout& layout, const Prompt& prompt,
                               std::span<const Token> prefix);
FeatureVector featurize(const FeatureLayout& layout, const Prompt& prompt,
                        std::span<const Token> prefix);

/// Active features and log-softmax at one state, reusable across accumulators.
struct StepEval {
  ActiveFeatures active;
  std::vector<double> log_probs;
};

/// Linear-softmax autoregressive actor with a linear critic over shared features.
class Policy {
 public:
  explicit Policy(FeatureLayout layout);
  Policy(FeatureLayout layout, PolicyParams params);

  const FeatureLayout& layout() const { return layout_; }
  const PolicyParams& params() const { return params_; }
  PolicyParams& params() { return params_; }
  std::size_t vocab_size() const { return layout_.vocab_size; }

  /// Throws std::domain_error if any logit is non-finite.
  std::vector<double> logits(const Prompt& prompt, std::span<const Token> prefix) const;
  /// Log-softmax over the whole vocabulary, in nats.
  std::vector<double> log_probs(const Prompt& prompt, std::span<const Token> prefix) const;
  double log_prob(const Prompt& prompt, std::span<const Token> prefix, Token token) const;

  /// Inverse-CDF draw from softmax(logits / temperature); argmax below 1e-6.
  Token sample_token(const Prompt& prompt, std::span<const Token> prefix, Rng& rng,
                     double temperature = 1.0) const;

  /// Element t is log π(response[t] | prompt, response[0..t)).
  std::vector<double> sequence_log_probs(const Prompt& prompt, std::span<const Token> response) const;

  double entropy(const Prompt& prompt, std::span<const Token> prefix) const;

  /// (onehot(token) - softmax) ⊗ features, dense over the actor matrix.
  ActorGradient grad_log_prob(const Prompt& prompt, std::span<const Token> prefix, Token token) const;

  double value(const Prompt& prompt, std::span<const Token> prefix) const;
  std::vector<double> grad_value(const Prompt& prompt, std::span<const Token> prefix) const;

  StepEval step(const Prompt& prompt, std::span<const Token> prefix) const;

  // Sparse accumulators used by the objectives: grad += coef * d/dθ(...).
  void add_grad_log_prob(ActorGradient& grad, const StepEval& step, Token token, double coef) const;
  void add_grad_entropy(ActorGradient& grad, const StepEval& step, double coef) const;
  void add_grad_log_prob(ActorGradient& grad, const Prompt& prompt, std::span<const Token> prefix,
                         Token token, double coef) const;
  void add_grad_entropy(ActorGradient& grad, const Prompt& prompt, std::span<const Token> prefix,
                        double coef) const;
  void add_grad_value(std::vector<double>& grad, const Prompt& prompt,
                      std::span<const Token> prefix, double coef) const;

 private:
  std::vector<double> logits_from(const ActiveFeatures& active) const;

  FeatureLayout layout_;
  PolicyParams params_;
};

/// Numerically stable log-softmax.
std::vector<double> log_softmax(std::span<const double> logits);

}  // namespace polab

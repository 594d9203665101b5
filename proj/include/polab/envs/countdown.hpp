#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "polab/core.hpp"
#include "polab/rng.hpp"

namespace polab::countdown {

using Rational = boost::rational<std::int64_t>;

/// Token layout for an instance with k numbers:
///   0 = EOS, 1..k = number slots, then + - × ÷ ( ).
class Vocabulary {
 public:
  explicit Vocabulary(std::size_t k);

  std::size_t k() const { return k_; }
  std::size_t size() const { return k_ + 7; }

  Token slot(std::size_t i) const { return Token{static_cast<std::uint32_t>(1 + i)}; }
  Token op(char op) const;
  Token lparen() const { return Token{static_cast<std::uint32_t>(k_ + 5)}; }
  Token rparen() const { return Token{static_cast<std::uint32_t>(k_ + 6)}; }

  bool is_slot(Token t) const { return t.id >= 1 && t.id <= k_; }
  std::size_t slot_index(Token t) const { return t.id - 1; }
  /// '+', '-', '*', '/' for operator tokens, 0 otherwise.
  char op_char(Token t) const;

 private:
  std::size_t k_;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Immutable expression tree. Leaves reference a number slot of the instance.
struct Expr {
  enum class Kind { leaf, binary };
  Kind kind = Kind::leaf;
  std::size_t slot = 0;
  int value = 0;
  char op = 0;  // one of + - * /
  ExprPtr lhs;
  ExprPtr rhs;

  static ExprPtr leaf(std::size_t slot, int value);
  static ExprPtr binary(char op, ExprPtr lhs, ExprPtr rhs);
};

bool equal(const Expr& a, const Expr& b);
/// S-expression form, e.g. "(+ (* 2 3) 4)".
std::string to_sexpr(const Expr& e);
/// Infix form with minimal parentheses, e.g. "2×3+4".
std::string to_infix(const Expr& e);
/// Canonical token form; parses back to an equal tree.
TokenSeq serialize(const Expr& e, const Vocabulary& vocab);

struct ParseError {
  std::size_t position = 0;
  std::string message;
};

struct ParseResult {
  ExprPtr ast;
  std::optional<ParseError> error;

  explicit operator bool() const { return ast != nullptr; }
};

/// E → T (('+'|'-') T)* ; T → F (('×'|'÷') F)* ; F → number | '(' E ')'.
/// Trailing tokens after a complete expression are an error.
ParseResult parse_expression(const TokenSeq& tokens, const Vocabulary& vocab,
                             const std::vector<int>& numbers);

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exact rational value; throws EvalError on division by zero.
Rational evaluate_expression(const Expr& e);

/// True when no number slot appears twice in the tree.
bool uses_slots_at_most_once(const Expr& e);

/// Maps text such as "2×3+4" or "(2+3)*4" onto tokens. Each digit takes the
/// first unused slot holding that value; unknown characters throw.
TokenSeq tokenize(const std::string& text, const CountdownInstance& instance);

struct RewardWeights {
  double w_format = 0.1;
  double w_correct = 1.0;
};

void validate(const RewardWeights& w);

struct RewardOutcome {
  double reward = 0.0;
  bool format_ok = false;
  bool correct = false;
};

/// A single trailing EOS is stripped before parsing.
RewardOutcome countdown_reward(const CountdownInstance& instance, const TokenSeq& response,
                               const RewardWeights& w);

/// Every expression over every non-empty subset, ordering, operator choice and
/// parenthesization (k ≤ 4).
std::vector<ExprPtr> enumerate_expressions(const CountdownInstance& instance);
std::vector<ExprPtr> enumerate_solutions(const CountdownInstance& instance);
bool is_solvable(const CountdownInstance& instance);

/// Numbers uniform in [1,9], target uniform in [1,max_target]; redrawn until solvable.
CountdownInstance generate_countdown_instance(Rng& rng, std::size_t k, int max_target);

std::vector<CountdownInstance> read_instances_jsonl(const std::string& path);
void write_instances_jsonl(const std::string& path, const std::vector<CountdownInstance>& instances);

}  // namespace polab::countdown

#include "polab/envs/countdown.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace polab::countdown {

Vocabulary::Vocabulary(std::size_t k) : k_(k) {
  if (k < 1 || k > 4) throw std::invalid_argument("countdown instances use 1 to 4 numbers");
}

Token Vocabulary::op(char op) const {
  switch (op) {
    case '+': return Token{static_cast<std::uint32_t>(k_ + 1)};
    case '-': return Token{static_cast<std::uint32_t>(k_ + 2)};
    case '*': return Token{static_cast<std::uint32_t>(k_ + 3)};
    case '/': return Token{static_cast<std::uint32_t>(k_ + 4)};
  }
  throw std::invalid_argument(std::string("unknown operator: ") + op);
}

char Vocabulary::op_char(Token t) const {
  if (t.id == k_ + 1) return '+';
  if (t.id == k_ + 2) return '-';
  if (t.id == k_ + 3) return '*';
  if (t.id == k_ + 4) return '/';
  return 0;
}

ExprPtr Expr::leaf(std::size_t slot, int value) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::leaf;
  e->slot = slot;
  e->value = value;
  return e;
}

ExprPtr Expr::binary(char op, ExprPtr lhs, ExprPtr rhs) {
  auto e = std::make_shared<Expr>();
  e->kind = Kind::binary;
  e->op = op;
  e->lhs = std::move(lhs);
  e->rhs = std::move(rhs);
  return e;
}

bool equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  if (a.kind == Expr::Kind::leaf) return a.slot == b.slot && a.value == b.value;
  return a.op == b.op && equal(*a.lhs, *b.lhs) && equal(*a.rhs, *b.rhs);
}

namespace {

const char* pretty_op(char op) {
  switch (op) {
    case '+': return "+";
    case '-': return "-";
    case '*': return "×";
    case '/': return "÷";
  }
  return "?";
}

int precedence(const Expr& e) {
  if (e.kind == Expr::Kind::leaf) return 3;
  return (e.op == '+' || e.op == '-') ? 1 : 2;
}

// Left operands need parentheses only when they bind looser; right operands
// also when they bind equally, since the grammar is left-associative.
bool needs_parens(const Expr& parent, const Expr& child, bool right) {
  return right ? precedence(child) <= precedence(parent) : precedence(child) < precedence(parent);
}

void infix_into(const Expr& e, std::string& out) {
  if (e.kind == Expr::Kind::leaf) {
    out += std::to_string(e.value);
    return;
  }
  auto side = [&](const Expr& child, bool right) {
    const bool p = needs_parens(e, child, right);
    if (p) out += '(';
    infix_into(child, out);
    if (p) out += ')';
  };
  side(*e.lhs, false);
  out += pretty_op(e.op);
  side(*e.rhs, true);
}

void serialize_into(const Expr& e, const Vocabulary& vocab, TokenSeq& out) {
  if (e.kind == Expr::Kind::leaf) {
    out.push_back(vocab.slot(e.slot));
    return;
  }
  auto side = [&](const Expr& child, bool right) {
    const bool p = needs_parens(e, child, right);
    if (p) out.push_back(vocab.lparen());
    serialize_into(child, vocab, out);
    if (p) out.push_back(vocab.rparen());
  };
  side(*e.lhs, false);
  out.push_back(vocab.op(e.op));
  side(*e.rhs, true);
}

class Parser {
 public:
  Parser(const TokenSeq& tokens, const Vocabulary& vocab, const std::vector<int>& numbers)
      : tokens_(tokens), vocab_(vocab), numbers_(numbers) {}

  ParseResult run() {
    ParseResult result;
    ExprPtr e = expr();
    if (!error_ && pos_ != tokens_.size()) fail("unexpected trailing token");
    if (error_) {
      result.error = std::move(error_);
    } else {
      result.ast = std::move(e);
    }
    return result;
  }

 private:
  bool at_end() const { return pos_ >= tokens_.size(); }
  char peek_op() const { return at_end() ? 0 : vocab_.op_char(tokens_[pos_]); }

  void fail(std::string message) {
    if (!error_) error_ = ParseError{pos_, std::move(message)};
  }

  ExprPtr expr() {
    ExprPtr lhs = term();
    while (!error_ && (peek_op() == '+' || peek_op() == '-')) {
      const char op = peek_op();
      ++pos_;
      ExprPtr rhs = term();
      if (error_) return nullptr;
      lhs = Expr::binary(op, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  ExprPtr term() {
    ExprPtr lhs = factor();
    while (!error_ && (peek_op() == '*' || peek_op() == '/')) {
      const char op = peek_op();
      ++pos_;
      ExprPtr rhs = factor();
      if (error_) return nullptr;
      lhs = Expr::binary(op, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  ExprPtr factor() {
    if (at_end()) {
      fail("unexpected end of input");
      return nullptr;
    }
    const Token t = tokens_[pos_];
    if (vocab_.is_slot(t)) {
      const std::size_t slot = vocab_.slot_index(t);
      if (slot >= numbers_.size()) {
        fail("number slot outside instance");
        return nullptr;
      }
      ++pos_;
      return Expr::leaf(slot, numbers_[slot]);
    }
    if (t == vocab_.lparen()) {
      ++pos_;
      ExprPtr inner = expr();
      if (error_) return nullptr;
      if (at_end() || tokens_[pos_] != vocab_.rparen()) {
        fail("expected ')'");
        return nullptr;
      }
      ++pos_;
      return inner;
    }
    fail("expected number or '('");
    return nullptr;
  }

  const TokenSeq& tokens_;
  const Vocabulary& vocab_;
  const std::vector<int>& numbers_;
  std::size_t pos_ = 0;
  std::optional<ParseError> error_;
};

void collect_slots(const Expr& e, std::vector<std::size_t>& out) {
  if (e.kind == Expr::Kind::leaf) {
    out.push_back(e.slot);
    return;
  }
  collect_slots(*e.lhs, out);
  collect_slots(*e.rhs, out);
}

std::optional<Rational> try_evaluate(const Expr& e) {
  if (e.kind == Expr::Kind::leaf) return Rational(e.value);
  const auto l = try_evaluate(*e.lhs);
  if (!l) return std::nullopt;
  const auto r = try_evaluate(*e.rhs);
  if (!r) return std::nullopt;
  switch (e.op) {
    case '+': return *l + *r;
    case '-': return *l - *r;
    case '*': return *l * *r;
    case '/':
      if (r->numerator() == 0) return std::nullopt;
      return *l / *r;
  }
  return std::nullopt;
}

}  // namespace

std::string to_sexpr(const Expr& e) {
  if (e.kind == Expr::Kind::leaf) return std::to_string(e.value);
  return std::string("(") + e.op + " " + to_sexpr(*e.lhs) + " " + to_sexpr(*e.rhs) + ")";
}

std::string to_infix(const Expr& e) {
  std::string out;
  infix_into(e, out);
  return out;
}

TokenSeq serialize(const Expr& e, const Vocabulary& vocab) {
  TokenSeq out;
  serialize_into(e, vocab, out);
  return out;
}

ParseResult parse_expression(const TokenSeq& tokens, const Vocabulary& vocab,
                             const std::vector<int>& numbers) {
  return Parser(tokens, vocab, numbers).run();
}

Rational evaluate_expression(const Expr& e) {
  auto v = try_evaluate(e);
  if (!v) throw EvalError("division by zero");
  return *v;
}

bool uses_slots_at_most_once(const Expr& e) {
  std::vector<std::size_t> slots;
  collect_slots(e, slots);
  std::sort(slots.begin(), slots.end());
  return std::adjacent_find(slots.begin(), slots.end()) == slots.end();
}

TokenSeq tokenize(const std::string& text, const CountdownInstance& instance) {
  const Vocabulary vocab(instance.numbers.size());
  std::vector<bool> used(instance.numbers.size(), false);
  TokenSeq out;
  auto starts_with = [&](std::size_t i, std::string_view s) {
    return text.compare(i, s.size(), s) == 0;
  };
  for (std::size_t i = 0; i < text.size();) {
    const char c = text[i];
    if (c == ' ') {
      ++i;
    } else if (c >= '0' && c <= '9') {
      const int v = c - '0';
      std::size_t slot = instance.numbers.size();
      for (std::size_t s = 0; s < instance.numbers.size(); ++s) {
        if (instance.numbers[s] == v && !used[s]) {
          slot = s;
          break;
        }
      }
      if (slot == instance.numbers.size()) {
        // reuse is a format error, not a tokenization error
        auto it = std::find(instance.numbers.begin(), instance.numbers.end(), v);
        if (it == instance.numbers.end())
          throw std::invalid_argument("number not in instance: " + std::string(1, c));
        slot = static_cast<std::size_t>(it - instance.numbers.begin());
      }
      used[slot] = true;
      out.push_back(vocab.slot(slot));
      ++i;
    } else if (c == '+') {
      out.push_back(vocab.op('+'));
      ++i;
    } else if (c == '-') {
      out.push_back(vocab.op('-'));
      ++i;
    } else if (c == '*' || c == 'x') {
      out.push_back(vocab.op('*'));
      ++i;
    } else if (c == '/') {
      out.push_back(vocab.op('/'));
      ++i;
    } else if (c == '(') {
      out.push_back(vocab.lparen());
      ++i;
    } else if (c == ')') {
      out.push_back(vocab.rparen());
      ++i;
    } else if (starts_with(i, "×")) {
      out.push_back(vocab.op('*'));
      i += std::string_view("×").size();
    } else if (starts_with(i, "÷")) {
      out.push_back(vocab.op('/'));
      i += std::string_view("÷").size();
    } else if (starts_with(i, "−")) {
      out.push_back(vocab.op('-'));
      i += std::string_view("−").size();
    } else {
      throw std::invalid_argument("unexpected character in expression: " + text.substr(i, 1));
    }
  }
  return out;
}

void validate(const RewardWeights& w) {
  if (!(w.w_format >= 0.0)) throw std::invalid_argument("w_format must be non-negative");
  if (!(w.w_correct > 0.0)) throw std::invalid_argument("w_correct must be positive");
}

RewardOutcome countdown_reward(const CountdownInstance& instance, const TokenSeq& response,
                               const RewardWeights& w) {
  RewardOutcome out;
  const Vocabulary vocab(instance.numbers.size());
  TokenSeq body = response;
  if (!body.empty() && body.back() == kEos) body.pop_back();
  const auto parsed = parse_expression(body, vocab, instance.numbers);
  if (!parsed) return out;
  out.format_ok = uses_slots_at_most_once(*parsed.ast);
  if (out.format_ok) {
    const auto v = try_evaluate(*parsed.ast);
    out.correct = v.has_value() && *v == Rational(instance.target);
  }
  out.reward = (out.format_ok ? w.w_format : 0.0) + (out.correct ? w.w_correct : 0.0);
  return out;
}

std::vector<ExprPtr> enumerate_expressions(const CountdownInstance& instance) {
  const std::size_t k = instance.numbers.size();
  if (k < 1 || k > 4) throw std::invalid_argument("enumeration supports 1 to 4 numbers");
  const unsigned full = (1u << k) - 1;
  std::vector<std::vector<ExprPtr>> by_mask(full + 1);
  // masks in increasing popcount order guarantee sub-masks are ready
  std::vector<unsigned> masks;
  for (unsigned m = 1; m <= full; ++m) masks.push_back(m);
  std::stable_sort(masks.begin(), masks.end(),
                   [](unsigned a, unsigned b) { return __builtin_popcount(a) < __builtin_popcount(b); });
  for (unsigned mask : masks) {
    auto& trees = by_mask[mask];
    if (__builtin_popcount(mask) == 1) {
      const auto slot = static_cast<std::size_t>(__builtin_ctz(mask));
      trees.push_back(Expr::leaf(slot, instance.numbers[slot]));
      continue;
    }
    for (unsigned left = (mask - 1) & mask; left != 0; left = (left - 1) & mask) {
      const unsigned right = mask ^ left;
      for (const auto& l : by_mask[left])
        for (const auto& r : by_mask[right])
          for (char op : {'+', '-', '*', '/'}) trees.push_back(Expr::binary(op, l, r));
    }
  }
  std::vector<ExprPtr> all;
  for (unsigned mask : masks) all.insert(all.end(), by_mask[mask].begin(), by_mask[mask].end());
  return all;
}

std::vector<ExprPtr> enumerate_solutions(const CountdownInstance& instance) {
  std::vector<ExprPtr> out;
  const Rational target(instance.target);
  for (auto& e : enumerate_expressions(instance)) {
    const auto v = try_evaluate(*e);
    if (v && *v == target) out.push_back(std::move(e));
  }
  return out;
}

bool is_solvable(const CountdownInstance& instance) {
  return !enumerate_solutions(instance).empty();
}

CountdownInstance generate_countdown_instance(Rng& rng, std::size_t k, int max_target) {
  if (max_target < 1) throw std::invalid_argument("max_target must be at least 1");
  if (k < 1 || k > 4) throw std::invalid_argument("k must be in [1, 4]");
  for (;;) {
    CountdownInstance inst;
    for (std::size_t i = 0; i < k; ++i) inst.numbers.push_back(rng.between(1, 9));
    inst.target = rng.between(1, max_target);
    if (is_solvable(inst)) return inst;
  }
}

std::vector<CountdownInstance> read_instances_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance file: " + path);
  std::vector<CountdownInstance> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      CountdownInstance inst;
      inst.numbers = j.at("numbers").get<std::vector<int>>();
      inst.target = j.at("target").get<int>();
      if (inst.numbers.size() < 3 || inst.numbers.size() > 4)
        throw std::invalid_argument("expected 3 or 4 numbers");
      for (int n : inst.numbers)
        if (n < 1 || n > 9) throw std::invalid_argument("numbers must lie in [1, 9]");
      if (inst.target < 1 || inst.target > 100) throw std::invalid_argument("target must lie in [1, 100]");
      out.push_back(std::move(inst));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_instances_jsonl(const std::string& path, const std::vector<CountdownInstance>& instances) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write instance file: " + path);
  for (const auto& inst : instances) {
    nlohmann::json j;
    j["numbers"] = inst.numbers;
    j["target"] = inst.target;
    out << j.dump() << '\n';
  }
}

}  // namespace polab::countdown

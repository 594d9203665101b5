// Independent reference implementations and generators shared by the test binaries.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "polab/core.hpp"
#include "polab/policy.hpp"

namespace oracle {

using Gen = std::mt19937_64;

inline double uniform(Gen& g, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(g); }
inline double normal(Gen& g, double sd = 1.0) { return std::normal_distribution<double>(0.0, sd)(g); }
inline std::size_t index(Gen& g, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(g); }

inline std::vector<double> normals(Gen& g, std::size_t n, double sd = 1.0) {
  std::vector<double> out(n);
  for (auto& x : out) x = normal(g, sd);
  return out;
}

/// Central differences of f around x, one coordinate at a time.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

inline double norm(const std::vector<double>& a) {
  double s = 0;
  for (double x : a) s += x * x;
  return std::sqrt(s);
}

/// ‖a − b‖ / max(‖a‖, ‖b‖), or the absolute gap when both are ~0.
inline double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  d = std::sqrt(d);
  const double scale = std::max(norm(a), norm(b));
  return scale < 1e-8 ? d : d / scale;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline polab::PolicyParams random_params(Gen& g, const polab::FeatureLayout& layout, double sd) {
  auto p = polab::PolicyParams::zeros(layout.vocab_size, layout.dim());
  for (auto& x : p.actor) x = normal(g, sd);
  for (auto& x : p.critic) x = normal(g, sd);
  return p;
}

inline polab::TokenSeq random_tokens(Gen& g, std::size_t vocab, std::size_t len) {
  polab::TokenSeq out;
  for (std::size_t i = 0; i < len; ++i) out.push_back(polab::Token{static_cast<std::uint32_t>(index(g, vocab))});
  return out;
}

/// Direct-sum GAE: Σ_l (γλ)^l δ_{t+l}, no recursion.
inline std::vector<double> gae_direct(const std::vector<double>& rewards, const std::vector<double>& values,
                                      double gamma, double lambda) {
  const std::size_t T = rewards.size();
  std::vector<double> out(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    double coef = 1.0;
    for (std::size_t l = t; l < T; ++l) {
      out[t] += coef * (rewards[l] + gamma * values[l + 1] - values[l]);
      coef *= gamma * lambda;
    }
  }
  return out;
}

/// Population-std standardization computed in two passes.
inline std::vector<double> standardize(const std::vector<double>& r, double eps) {
  double mean = 0;
  for (double x : r) mean += x;
  mean /= static_cast<double>(r.size());
  double var = 0;
  for (double x : r) var += (x - mean) * (x - mean);
  var /= static_cast<double>(r.size());
  std::vector<double> out;
  for (double x : r) out.push_back((x - mean) / (std::sqrt(var) + eps));
  return out;
}

/// Countdown token string → exact value by shunting-yard, with its own grammar checks.
/// Token ids: 0 EOS, 1..k number slots, then + - * / ( ).
struct InfixVerdict {
  bool valid = false;
  boost::rational<long long> value{0};
};

inline InfixVerdict evaluate_infix(const polab::TokenSeq& raw, const std::vector<int>& numbers) {
  using R = boost::rational<long long>;
  const std::uint32_t k = static_cast<std::uint32_t>(numbers.size());
  polab::TokenSeq toks = raw;
  if (!toks.empty() && toks.back().id == 0) toks.pop_back();
  InfixVerdict bad;
  if (toks.empty()) return bad;
  std::vector<bool> used(k, false);
  std::vector<R> vals;
  std::vector<char> ops;
  auto prec = [](char c) { return (c == '+' || c == '-') ? 1 : (c == '*' || c == '/') ? 2 : 0; };
  bool div_zero = false;
  auto reduce = [&]() -> bool {
    if (vals.size() < 2 || ops.empty()) return false;
    const R b = vals.back();
    vals.pop_back();
    const R a = vals.back();
    vals.pop_back();
    const char op = ops.back();
    ops.pop_back();
    switch (op) {
      case '+': vals.push_back(a + b); break;
      case '-': vals.push_back(a - b); break;
      case '*': vals.push_back(a * b); break;
      case '/':
        if (b == R(0)) {
          div_zero = true;
          vals.push_back(R(0));
        } else {
          vals.push_back(a / b);
        }
        break;
      default: return false;
    }
    return true;
  };
  // state: expecting an operand (true) or an operator/closing paren (false)
  bool want_operand = true;
  int depth = 0;
  for (auto t : toks) {
    const std::uint32_t id = t.id;
    if (id == 0) return bad;
    if (id <= k) {
      if (!want_operand || used[id - 1]) return bad;
      used[id - 1] = true;
      vals.push_back(R(numbers[id - 1]));
      want_operand = false;
      continue;
    }
    const std::uint32_t sym = id - k - 1;  // 0..5
    if (sym > 5) return bad;
    if (sym == 4) {  // (
      if (!want_operand) return bad;
      ops.push_back('(');
      ++depth;
      continue;
    }
    if (sym == 5) {  // )
      if (want_operand || depth == 0) return bad;
      while (!ops.empty() && ops.back() != '(')
        if (!reduce()) return bad;
      ops.pop_back();
      --depth;
      continue;
    }
    if (want_operand) return bad;
    const char op = "+-*/"[sym];
    while (!ops.empty() && ops.back() != '(' && prec(ops.back()) >= prec(op))
      if (!reduce()) return bad;
    ops.push_back(op);
    want_operand = true;
  }
  if (want_operand || depth != 0) return bad;
  while (!ops.empty())
    if (!reduce()) return bad;
  if (vals.size() != 1 || div_zero) return bad;
  return InfixVerdict{true, vals.back()};
}

}  // namespace oracle

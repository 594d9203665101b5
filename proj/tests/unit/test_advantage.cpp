#include "doctest.h"

#include <cmath>

#include "polab/advantage.hpp"
#include "support/oracles.hpp"

using namespace polab;

TEST_CASE("td errors and the terminal bootstrap") {
  const std::vector<double> r{1, 0, 2};
  const std::vector<double> v{0.5, 0.25, 1.0, 0.0};
  const auto d = td_errors(r, v, 0.9);
  CHECK(d[0] == doctest::Approx(1 + 0.9 * 0.25 - 0.5));
  CHECK(d[2] == doctest::Approx(2 - 1.0));
  CHECK_THROWS(td_errors(r, std::vector<double>{1, 2, 3}, 0.9));
}

TEST_CASE("gae matches the direct double sum") {
  oracle::Gen g(21);
  for (int c = 0; c < 500; ++c) {
    const std::size_t T = 1 + oracle::index(g, 12);
    const auto r = oracle::normals(g, T);
    auto v = oracle::normals(g, T + 1);
    const double gamma = oracle::uniform(g, 0, 1), lambda = oracle::uniform(g, 0, 1);
    const auto a = gae(td_errors(r, v, gamma), gamma, lambda);
    CHECK(oracle::max_abs_diff(a, oracle::gae_direct(r, v, gamma, lambda)) < 1e-12);
  }
}

TEST_CASE("discounted returns and value targets") {
  const std::vector<double> r{1, 2, 3};
  const auto ret = discounted_returns(r, 0.5);
  CHECK(ret[0] == doctest::Approx(1 + 0.5 * 2 + 0.25 * 3));
  CHECK(ret[2] == 3);
  const auto tg = value_targets(std::vector<double>{1, -1}, std::vector<double>{0.5, 0.5});
  CHECK(tg == std::vector<double>{1.5, -0.5});
  CHECK_THROWS(value_targets(std::vector<double>{1}, std::vector<double>{1, 2}));
}

TEST_CASE("group-relative advantages") {
  const auto a = group_relative_advantages(std::vector<double>{2, 4, 6, 8});
  CHECK(a[0] == doctest::Approx(-1.3416).epsilon(1e-3));
  CHECK(a[1] == doctest::Approx(-0.4472).epsilon(1e-3));
  CHECK(a[3] == doctest::Approx(1.3416).epsilon(1e-3));
  // a constant group carries no signal
  for (double x : group_relative_advantages(std::vector<double>{1, 1, 1})) CHECK(x == 0.0);
  CHECK_THROWS_WITH(group_relative_advantages(std::vector<double>{1}), "G < 2");
}

TEST_CASE("property: group advantages are shift and positive-scale invariant") {
  oracle::Gen g(22);
  for (int c = 0; c < 300; ++c) {
    const auto r = oracle::normals(g, 2 + oracle::index(g, 10));
    const auto a = group_relative_advantages(r, GroupAdvConfig{1e-12});
    const double shift = oracle::normal(g, 10), scale = oracle::uniform(g, 0.1, 10);
    std::vector<double> moved = r;
    for (double& x : moved) x = scale * x + shift;
    CHECK(oracle::max_abs_diff(a, group_relative_advantages(moved, GroupAdvConfig{1e-12})) < 1e-8);
    CHECK(oracle::max_abs_diff(a, oracle::standardize(r, 1e-12)) < 1e-12);
  }
}

TEST_CASE("whitening") {
  oracle::Gen g(23);
  const auto x = oracle::normals(g, 50, 3.0);
  const auto w = whiten(x);
  double mean = 0, var = 0;
  for (double v : w) mean += v / 50;
  for (double v : w) var += (v - mean) * (v - mean) / 50;
  CHECK(std::abs(mean) < 1e-12);
  CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
  for (double v : whiten(std::vector<double>{4, 4, 4})) CHECK(v == 0.0);
  CHECK(broadcast_advantage(0.5, 3) == std::vector<double>{0.5, 0.5, 0.5});
}

TEST_CASE("config validation") {
  CHECK_THROWS(validate(GaeConfig{1.5, 0.9}));
  CHECK_THROWS(validate(GaeConfig{0.9, -0.1}));
  CHECK_NOTHROW(validate(GaeConfig{1.0, 1.0}));
  CHECK_THROWS(validate(GroupAdvConfig{0.0}));
}

#include "doctest.h"

#include <cmath>

#include "polab/optimizer.hpp"
#include "support/oracles.hpp"

using namespace polab;

TEST_CASE("first Adam step moves each coordinate by about the learning rate") {
  std::vector<double> x{1.0, -2.0, 0.5};
  const std::vector<double> g{0.3, -4.0, 1e-3};
  OptimizerState s(3);
  adam_step(x, g, s, AdamConfig{0.1, 0.9, 0.999, 1e-8});
  // bias correction makes the first step lr·g/|g|
  CHECK(x[0] == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(x[1] == doctest::Approx(-1.9).epsilon(1e-6));
  CHECK(x[2] == doctest::Approx(0.4).epsilon(1e-4));
  CHECK(s.step == 1);
}

TEST_CASE("Adam against a hand-rolled reference") {
  oracle::Gen gen(51);
  const AdamConfig cfg{0.01, 0.8, 0.95, 1e-6};
  std::vector<double> x = oracle::normals(gen, 5), ref = x, m(5, 0.0), v(5, 0.0);
  OptimizerState s(5);
  for (int t = 1; t <= 50; ++t) {
    const auto g = oracle::normals(gen, 5);
    adam_step(x, g, s, cfg);
    for (std::size_t i = 0; i < 5; ++i) {
      m[i] = 0.8 * m[i] + 0.2 * g[i];
      v[i] = 0.95 * v[i] + 0.05 * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(0.8, t)), vh = v[i] / (1 - std::pow(0.95, t));
      ref[i] -= 0.01 * mh / (std::sqrt(vh) + 1e-6);
    }
  }
  CHECK(oracle::max_abs_diff(x, ref) < 1e-12);
}

TEST_CASE("Adam minimizes a quadratic") {
  std::vector<double> x{5.0, -3.0};
  OptimizerState s(2);
  for (int i = 0; i < 2000; ++i) {
    const std::vector<double> g{2 * (x[0] - 1), 2 * (x[1] + 2)};
    adam_step(x, g, s, AdamConfig{0.05});
  }
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(x[1] == doctest::Approx(-2.0).epsilon(1e-3));
}

TEST_CASE("joint gradient clipping") {
  std::vector<double> a{3.0, 0.0}, b{4.0};
  CHECK(clip_grad_norm(a, b, 1.0) == doctest::Approx(5.0));
  CHECK(l2_norm(a) * l2_norm(a) + l2_norm(b) * l2_norm(b) == doctest::Approx(1.0));
  CHECK(a[0] / b[0] == doctest::Approx(0.75));
  std::vector<double> c{0.1}, d{0.2};
  clip_grad_norm(c, d, 1.0);
  CHECK(c[0] == 0.1);
}

TEST_CASE("config and shape validation") {
  CHECK_THROWS(validate(AdamConfig{0.0}));
  CHECK_THROWS(validate(AdamConfig{0.1, 1.0}));
  std::vector<double> x(2);
  OptimizerState s(3);
  CHECK_THROWS(adam_step(x, std::vector<double>{1, 2}, s, AdamConfig{}));
}

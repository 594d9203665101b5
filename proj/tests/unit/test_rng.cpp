#include "doctest.h"

#include <cmath>
#include <set>
#include <vector>

#include "polab/rng.hpp"

using polab::Rng;

TEST_CASE("same seed and stream replay the same draws") {
  Rng a(42, 3), b(42, 3);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(a.position() == b.position());
}

TEST_CASE("streams and forks are distinct") {
  Rng a(42, 0), b(42, 1);
  CHECK(a.next_u64() != b.next_u64());
  const Rng parent(9);
  Rng c1 = parent.fork(1), c2 = parent.fork(2), c1_again = parent.fork(1);
  const auto x = c1.next_u64();
  CHECK(x != c2.next_u64());
  CHECK(x == c1_again.next_u64());
}

TEST_CASE("fork does not advance the parent") {
  Rng a(5), b(5);
  (void)a.fork(7);
  CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("uniform lies in [0, 1) with the right mean") {
  Rng r(1);
  double sum = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.005);
}

TEST_CASE("below and between cover their ranges evenly") {
  Rng r(2);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[r.below(7)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  std::set<int> seen;
  for (int i = 0; i < 1000; ++i) {
    const int v = r.between(-2, 2);
    REQUIRE(v >= -2);
    REQUIRE(v <= 2);
    seen.insert(v);
  }
  CHECK(seen.size() == 5);
  CHECK_THROWS(r.below(0));
  CHECK_THROWS(r.between(3, 2));
}

#include "doctest.h"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "polab/core.hpp"

using namespace polab;

namespace {

Trajectory sample_trajectory() {
  Prompt p{EnvKind::countdown, 0, CountdownInstance{{2, 3, 4}, 10}};
  auto t = make_trajectory(p, TokenSeq{Token{1}, Token{4}, Token{2}});
  t.logp_new = {-0.1, -0.2, -0.3};
  t.logp_old = t.logp_new;
  t.logp_ref = t.logp_new;
  return t;
}

}  // namespace

TEST_CASE("make_trajectory sizes every per-token array") {
  const auto t = sample_trajectory();
  CHECK(t.length() == 3);
  CHECK(t.values.size() == 3);
  CHECK(t.advantages.size() == 3);
  CHECK(validate_trajectory(t).empty());
}

TEST_CASE("trajectory invariants are reported") {
  auto t = sample_trajectory();
  SUBCASE("length mismatch") {
    t.values.pop_back();
    CHECK(validate_trajectory(t).front() == "length mismatch: values");
  }
  SUBCASE("positive log-prob") {
    t.logp_old[1] = 0.5;
    CHECK(validate_trajectory(t).front() == "positive log-prob");
  }
  SUBCASE("non-finite advantage") {
    t.advantages[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK(validate_trajectory(t).front() == "non-finite entry: advantages");
  }
  SUBCASE("correct implies format") {
    t.correct = true;
    CHECK(validate_trajectory(t).front() == "correct response without valid format");
  }
  SUBCASE("payload kind") {
    t.prompt.payload = BanditRef{};
    CHECK(validate_trajectory(t).front() == "prompt payload does not match env kind");
  }
  SUBCASE("empty response") {
    t = make_trajectory(t.prompt, {});
    CHECK(validate_trajectory(t).front() == "empty response");
  }
}

TEST_CASE("groups need two members answering the same prompt") {
  Group g;
  g.prompt = sample_trajectory().prompt;
  g.members.push_back(sample_trajectory());
  CHECK(validate_group(g).front() == "G < 2");
  g.members.push_back(sample_trajectory());
  CHECK(validate_group(g).empty());
  g.members[1].prompt.slot = 3;
  CHECK_FALSE(validate_group(g).empty());
}

TEST_CASE("env kind names round-trip") {
  for (EnvKind k : {EnvKind::countdown, EnvKind::seqbandit}) CHECK(env_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(env_kind_from_string("atari"), std::invalid_argument);
}

TEST_CASE("parameter finiteness") {
  auto p = PolicyParams::zeros(3, 4);
  CHECK(p.actor.size() == 12);
  CHECK(p.all_finite());
  p.actor_at(2, 3) = std::numeric_limits<double>::infinity();
  CHECK(p.actor[11] == std::numeric_limits<double>::infinity());
  CHECK_FALSE(p.all_finite());
}

#include "doctest.h"

#include <cmath>

#include "polab/envs/environment.hpp"
#include "polab/rollout.hpp"
#include "support/oracles.hpp"

using namespace polab;

namespace {

CountdownEnv small_countdown() {
  return CountdownEnv({{{2, 3, 4}, 10}, {{1, 5, 6}, 11}}, countdown::RewardWeights{}, 6);
}

}  // namespace

TEST_CASE("responses stop at EOS or max_len and record their log-probs") {
  const auto env = small_countdown();
  oracle::Gen g(41);
  const Policy p(env.layout(2), oracle::random_params(g, env.layout(2), 1.0));
  Rng rng(1);
  for (int c = 0; c < 200; ++c) {
    auto t = sample_response(p, env, env.prompt(c % 2), env.max_len(), rng);
    REQUIRE(t.length() >= 1);
    CHECK(t.length() <= env.max_len());
    for (std::size_t k = 0; k + 1 < t.length(); ++k) CHECK(t.tokens[k] != kEos);
    if (t.length() < env.max_len()) CHECK(t.tokens.back() == kEos);
    CHECK(oracle::max_abs_diff(t.logp_old, p.sequence_log_probs(t.prompt, t.tokens)) < 1e-12);
    CHECK(t.logp_new == t.logp_old);
    score_trajectory(env, t);
    CHECK(validate_trajectory(t).empty());
  }
}

TEST_CASE("fixed-horizon environments ignore EOS") {
  const BanditEnv env(bandit::make_bandit_table(3, 4, 3));
  const Policy p(env.layout(2));
  Rng rng(2);
  for (int c = 0; c < 100; ++c) CHECK(sample_response(p, env, env.prompt(0), 3, rng).length() == 3);
}

TEST_CASE("groups need at least two draws") {
  const auto env = small_countdown();
  const Policy p(env.layout(2));
  Rng rng(3);
  CHECK_THROWS_WITH(sample_group(p, env, env.prompt(0), 1, 6, rng), "G < 2");
  CHECK(sample_group(p, env, env.prompt(0), 4, 6, rng).size() == 4);
}

TEST_CASE("batches are reproducible and independent of the worker count") {
  const auto env = small_countdown();
  oracle::Gen g(42);
  const Policy p(env.layout(2), oracle::random_params(g, env.layout(2), 1.0));
  std::vector<Prompt> prompts;
  for (int i = 0; i < 12; ++i) prompts.push_back(env.prompt(i % 2));
  const DynamicSamplingConfig ds{true, 3};
  const auto a = sample_batch(p, env, prompts, 4, 6, ds, Rng(7), 1);
  const auto b = sample_batch(p, env, prompts, 4, 6, ds, Rng(7), 4);
  REQUIRE(a.groups.size() == b.groups.size());
  for (std::size_t i = 0; i < a.groups.size(); ++i)
    for (std::size_t j = 0; j < a.groups[i].size(); ++j)
      CHECK(a.groups[i].members[j].tokens == b.groups[i].members[j].tokens);
  CHECK(a.stats.extra_samples == b.stats.extra_samples);
}

TEST_CASE("dynamic sampling keeps only mixed groups and accounts for extra draws") {
  // π(optimum) = q on a one-step bandit
  const BanditEnv env(bandit::make_bandit_table(5, 4, 1));
  auto params = PolicyParams::zeros(4, env.layout(2).dim());
  const double q = 0.2;
  params.actor_at(env.optimum().sequence[0].id, 0) = std::log(3 * q / (1 - q));
  const Policy p(env.layout(2), params);
  CHECK(std::exp(p.log_prob(env.prompt(0), {}, env.optimum().sequence[0])) == doctest::Approx(q));
  std::vector<Prompt> prompts(500, env.prompt(0));
  const DynamicSamplingConfig ds{true, 2};
  const auto batch = sample_batch(p, env, prompts, 4, 1, ds, Rng(8), 1);
  const auto& s = batch.stats;
  CHECK(s.groups_kept + s.groups_dropped == 500);
  CHECK(batch.groups.size() == s.groups_kept);
  CHECK(batch.initial.size() == 500);
  CHECK(s.base_samples == 2000);
  CHECK(s.extra_samples % 4 == 0);
  CHECK(s.wall_overhead_fraction == doctest::Approx(double(s.extra_samples) / 2000));
  for (const auto& grp : batch.groups) {
    CHECK(grp.size() == 4);
    bool c = false, w = false;
    for (const auto& m : grp.members) (m.correct ? c : w) = true;
    CHECK((c && w));
  }
  // without filtering every prompt keeps its group and nothing extra is drawn
  const auto plain = sample_batch(p, env, prompts, 4, 1, DynamicSamplingConfig{}, Rng(8), 1);
  CHECK(plain.groups.size() == 500);
  CHECK(plain.stats.extra_samples == 0);
}

TEST_CASE("dynamic_sample fails loudly when nothing is informative") {
  const BanditEnv env(bandit::make_bandit_table(5, 4, 1));
  auto params = PolicyParams::zeros(4, env.layout(2).dim());
  const auto worst = (env.optimum().sequence[0].id + 1) % 4;
  params.actor_at(worst, 0) = 60.0;  // never picks the optimum
  const Policy p(env.layout(2), params);
  std::vector<Prompt> prompts(3, env.prompt(0));
  CHECK_THROWS_WITH(dynamic_sample(p, env, prompts, 4, 1, DynamicSamplingConfig{true, 2}, Rng(1)),
                    "no informative groups");
  CHECK_THROWS(dynamic_sample(p, env, prompts, 4, 1, DynamicSamplingConfig{false, 2}, Rng(1)));
}

TEST_CASE("ratio diagnostics") {
  const std::vector<double> r{0.7, 0.9, 1.0, 1.25, 1.3};
  CHECK(clip_fraction(r, ClipRange{0.2, 0.28}) == doctest::Approx(2.0 / 5));
  CHECK(clip_fraction(r, ClipRange{0.2, 0.2}) == doctest::Approx(3.0 / 5));
  const std::vector<double> lp{-1.0, -2.0};
  CHECK(approx_kl(lp, lp) == 0.0);
  CHECK(approx_kl(lp, std::vector<double>{-1.5, -1.5}) > 0.0);
}

TEST_CASE("parallel_for visits every index once") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 8, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
}

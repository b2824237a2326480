// Copyright 2026 The Karma Economies Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <Eigen/Dense>
#include <random>

#include "doctest.h"
#include "karma/equilibrium.h"
#include "karma/markov.h"
#include "karma/mdp.h"
#include "oracles.h"
#include "test_util.h"

namespace karma {
namespace {

TEST_CASE("value iteration: zero rewards give zero values") {
  const SparseMatrix p = DenseToSparse(std::vector<double>{0, 1, 1, 0}, 2, 2);
  const std::vector<double> reward = {0.0, 0.0}, discount = {1.0, 0.98};
  const std::vector<StateBlock> blocks = {{1, 2}, {0, 1}};
  const ValueIterationResult v =
      ValueIteration(p, reward, discount, blocks, std::vector<double>{5.0, -3.0}, 1e-12, 100000);
  CHECK(v.value[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(v.value[1] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("value iteration: single state geometric series") {
  const SparseMatrix p = DenseToSparse(std::vector<double>{1.0}, 1, 1);
  const std::vector<StateBlock> blocks = {{0, 1}};
  const ValueIterationResult v = ValueIteration(p, std::vector<double>{1.0},
                                                std::vector<double>{0.98}, blocks,
                                                std::vector<double>{0.0}, 1e-12, 100000);
  CHECK(v.value[0] == doctest::Approx(50.0).epsilon(1e-10));
}

TEST_CASE("value iteration: two-state daily cycle") {
  const SparseMatrix p = DenseToSparse(std::vector<double>{0, 1, 1, 0}, 2, 2);
  const std::vector<double> reward = {1.0, 2.0}, discount = {1.0, 0.98};
  const std::vector<StateBlock> blocks = {{1, 2}, {0, 1}};
  const ValueIterationResult v =
      ValueIteration(p, reward, discount, blocks, std::vector<double>{0.0, 0.0}, 1e-12, 100000);
  // V0 = 1 + V1 and V1 = 2 + 0.98 V0 give 0.02 V0 = 3.
  CHECK(v.value[0] == doctest::Approx(150.0).epsilon(1e-10));
  CHECK(v.value[1] == doctest::Approx(149.0).epsilon(1e-10));
  const std::vector<double> oracle =
      testing::DenseValueSolve(p, reward, discount);
  CHECK(oracle[0] == doctest::Approx(150.0).epsilon(1e-10));
  CHECK(oracle[1] == doctest::Approx(149.0).epsilon(1e-10));
  // One backup is consistent with V.
  CHECK(BellmanResidual(p, reward, discount, v.value) <= 1e-9);
}

TEST_CASE("value iteration reports non-convergence") {
  const SparseMatrix p = DenseToSparse(std::vector<double>{1.0}, 1, 1);
  const std::vector<StateBlock> blocks = {{0, 1}};
  CHECK_THROWS_AS(ValueIteration(p, std::vector<double>{1.0}, std::vector<double>{0.999}, blocks,
                                 std::vector<double>{0.0}, 1e-12, 10),
                  NonConvergence);
}

TEST_CASE("value iteration matches a dense linear solve on random day-cyclic chains") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unif;
  for (int trial = 0; trial < 20; ++trial) {
    const int per_block = 10 + trial * 4;  // up to 86 per block, 172 states
    const int n = 2 * per_block;
    std::vector<double> dense(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
      const int target = i < per_block ? per_block : 0;
      double total = 0.0;
      for (int j = 0; j < per_block; ++j) {
        const double w = unif(rng) < 0.3 ? unif(rng) : 0.0;
        dense[static_cast<std::size_t>(i) * n + target + j] = w;
        total += w;
      }
      if (total == 0.0) {
        dense[static_cast<std::size_t>(i) * n + target] = total = 1.0;
      }
      for (int j = 0; j < per_block; ++j) dense[static_cast<std::size_t>(i) * n + target + j] /= total;
    }
    const SparseMatrix p = DenseToSparse(dense, n, n);
    std::vector<double> reward(n), discount(n, 1.0);
    for (double& r : reward) r = 10.0 * unif(rng) - 3.0;
    for (int i = per_block; i < n; ++i) discount[i] = 0.9;
    const std::vector<StateBlock> blocks = {{per_block, n}, {0, per_block}};
    const ValueIterationResult v = ValueIteration(p, reward, discount, blocks,
                                                  std::vector<double>(n, 0.0), 1e-12, 1000000);
    const std::vector<double> oracle = testing::DenseValueSolve(p, reward, discount);
    for (int i = 0; i < n; ++i) REQUIRE(std::abs(v.value[i] - oracle[i]) <= 1e-8);
  }
}

TEST_CASE("policy evaluation matches a dense linear solve on small economies") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 6; ++trial) {
    EconomyConfig cfg = testing::RandomConfig(rng);
    for (auto& r : cfg.resources) {
      r.karma_max = 3;
      r.karma_mean = 1;
    }
    const Economy economy(cfg);
    REQUIRE(economy.space().num_states() <= 200);
    const SocialState social = testing::RandomSocialState(economy, rng);
    const FieldQuantities field = ComputeField(economy, social);
    for (int tau = 0; tau < economy.num_types(); ++tau) {
      const ValueFunction vf =
          EvaluatePolicy(economy, tau, social.policy[tau], field, 1e-12, 1000000);
      const SparseMatrix p = PolicyTransitionMatrix(economy, tau, social.policy[tau], field);
      const std::vector<double> oracle = testing::DenseValueSolve(
          p, ExpectedRewards(economy, tau, social.policy[tau], field), StateDiscounts(economy));
      for (int x = 0; x < economy.space().num_states(); ++x) {
        REQUIRE(std::abs(vf.value[x] - oracle[x]) <= 1e-8);
      }
      // Q-V consistency: the best action is weakly better than the mixture.
      const StateSpace& space = economy.space();
      for (int x = 0; x < space.num_states(); ++x) {
        const auto off = space.ActionOffset(x);
        double best = -1e300, mixed = 0.0;
        for (int a = 0; a < space.NumActions(x); ++a) {
          best = std::max(best, vf.q[off + a]);
          mixed += social.policy[tau][off + a] * vf.q[off + a];
        }
        REQUIRE(best >= mixed - 1e-9);
        REQUIRE(std::abs(mixed - vf.value[x]) <= 1e-8);
      }
    }
  }
}

TEST_CASE("day sweep contracts by the day-boundary discount") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unif(-50.0, 50.0);
  EconomyConfig cfg = testing::SmallConfig();
  const Economy economy(cfg);
  const SocialState social = testing::RandomSocialState(economy, rng);
  const FieldQuantities field = ComputeField(economy, social);
  const SparseMatrix p = PolicyTransitionMatrix(economy, 0, social.policy[0], field);
  const std::vector<double> reward = ExpectedRewards(economy, 0, social.policy[0], field);
  const std::vector<double> discount = StateDiscounts(economy);
  const std::vector<StateBlock> blocks = DaySweepOrder(economy.space());
  const double alpha = cfg.resources.back().discount;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(economy.space().num_states()), w(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = unif(rng);
      w[i] = unif(rng);
    }
    double before = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) before = std::max(before, std::abs(v[i] - w[i]));
    ValueSweep(p, reward, discount, blocks, v);
    ValueSweep(p, reward, discount, blocks, w);
    double after = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) after = std::max(after, std::abs(v[i] - w[i]));
    REQUIRE(after <= alpha * before + 1e-9);
  }
}

TEST_CASE("expected rewards") {
  const Economy economy(testing::SmallConfig());
  const StateSpace& space = economy.space();
  SocialState social = InitialSocialState(economy);
  const FieldQuantities field = ComputeField(economy, social);
  // Always abstain.
  std::vector<double> abstain(space.total_actions(), 0.0);
  for (int x = 0; x < space.num_states(); ++x) abstain[space.ActionOffset(x)] = 1.0;
  for (double r : ExpectedRewards(economy, 0, abstain, field)) CHECK(r == 0.0);
  // Half abstain, half bid 0: linear in the policy.
  std::vector<double> half(space.total_actions(), 0.0);
  for (int x = 0; x < space.num_states(); ++x) {
    half[space.ActionOffset(x)] = 0.5;
    half[space.ActionOffset(x) + 1] = 0.5;
  }
  const std::vector<double> r = ExpectedRewards(economy, 0, half, field);
  for (int x = 0; x < space.num_states(); ++x) {
    const StateSpace::State s = space.Decode(x);
    const ResourceField& rf = field.resources[s.resource];
    const double full = ImmediatePayoff(economy.config().urgencies[s.urgency], 0, rf.Psi(0),
                                        rf.delay, economy.config().nominal_payoff);
    REQUIRE(r[x] == doctest::Approx(0.5 * full));
  }
}

TEST_CASE("best response set") {
  CHECK(BestResponseSet(std::vector<double>{1.0, 3.0, 2.0}) == std::vector<int>{1});
  CHECK(BestResponseSet(std::vector<double>{2.0, 2.0, 1.0}) == std::vector<int>{0, 1});
  CHECK(BestResponseSet(std::vector<double>{1.000, 0.995, 0.5}, 0.01) == std::vector<int>{0, 1});
}

TEST_CASE("stationary distribution matches the dense null space on small chains") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unif;
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 3 + trial * 2;  // up to 51 -> keep <= 50
    const int size = std::min(n, 50);
    std::vector<double> dense(static_cast<std::size_t>(size) * size);
    for (int i = 0; i < size; ++i) {
      double total = 0.0;
      for (int j = 0; j < size; ++j) {
        total += dense[static_cast<std::size_t>(i) * size + j] = unif(rng) < 0.4 ? unif(rng) : 0.0;
      }
      dense[static_cast<std::size_t>(i) * size + (i + 1) % size] += 0.1;
      total += 0.1;
      for (int j = 0; j < size; ++j) dense[static_cast<std::size_t>(i) * size + j] /= total;
    }
    const SparseMatrix p = DenseToSparse(dense, size, size);
    const StationaryResult got =
        PowerIteration(p, std::vector<double>(size, 1.0 / size), 1e-13, 1000000);
    const std::vector<double> oracle = testing::DenseStationary(dense, size);
    REQUIRE(TotalVariation(got.distribution, oracle) <= 1e-8);
  }
}

TEST_CASE("toy three-state chain") {
  const std::vector<double> dense = {0.5, 0.5, 0.0, 0.25, 0.5, 0.25, 0.0, 0.5, 0.5};
  const StationaryResult got = PowerIteration(DenseToSparse(dense, 3, 3),
                                              std::vector<double>{1, 0, 0}, 1e-14, 100000);
  CHECK(got.distribution[0] == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(got.distribution[1] == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(got.distribution[2] == doctest::Approx(0.25).epsilon(1e-10));
}

TEST_CASE("economy stationary distribution matches the dense null space") {
  std::mt19937_64 rng(41);
  EconomyConfig cfg = testing::SmallConfig(Redistribution::kToAll, ExchangeMatrix::Unit(2), 2, 1);
  cfg.resources[1].karma_max = 1;
  cfg.resources[1].karma_mean = 1;
  const Economy economy(cfg);
  const StateSpace& space = economy.space();
  REQUIRE(space.num_states() <= 54);
  const SocialState social = testing::RandomSocialState(economy, rng);
  const FieldQuantities field = ComputeField(economy, social);
  const EconomyStationary st = StationaryDistribution(economy, social, field, 1e-14, 1000000);
  for (int tau = 0; tau < economy.num_types(); ++tau) {
    const SparseMatrix p = PolicyTransitionMatrix(economy, tau, social.policy[tau], field);
    std::vector<double> dense(static_cast<std::size_t>(p.rows) * p.cols, 0.0);
    for (int i = 0; i < p.rows; ++i) {
      for (auto e = p.row_ptr[i]; e < p.row_ptr[i + 1]; ++e) {
        dense[static_cast<std::size_t>(i) * p.cols + p.col[e]] += p.val[e];
      }
    }
    std::vector<double> oracle = testing::DenseStationary(dense, p.rows);
    // The full chain puts 1 / n_r on each resource block.
    for (double& v : oracle) v *= space.num_resources();
    CHECK(TotalVariation(st.distribution[tau], oracle) / space.num_resources() <= 1e-8);
  }
}

TEST_CASE("deterministic chain with abstaining users keeps karma at the endowment") {
  const Economy economy(testing::SmallConfig());
  SocialState social = InitialSocialState(economy);
  const StateSpace& space = economy.space();
  for (auto& pi : social.policy) {
    std::fill(pi.begin(), pi.end(), 0.0);
    for (int x = 0; x < space.num_states(); ++x) pi[space.ActionOffset(x)] = 1.0;
  }
  const FieldQuantities field = ComputeField(economy, social);
  const EconomyStationary st = StationaryDistribution(economy, social, field, 1e-14, 100000);
  const int k0 = space.KarmaIndex(std::vector<int>{2, 2});
  for (int tau = 0; tau < economy.num_types(); ++tau) {
    for (int r = 0; r < 2; ++r) {
      for (int u = 0; u < 3; ++u) {
        CHECK(st.distribution[tau][space.Index(r, u, k0)] ==
              doctest::Approx(economy.UrgencyMarginals(tau)[r][u]).epsilon(1e-12));
      }
    }
  }
}

}  // namespace
}  // namespace karma

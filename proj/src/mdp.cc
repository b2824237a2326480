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

#include "karma/mdp.h"

#include <algorithm>
#include <limits>

namespace karma {

std::vector<double> ExpectedRewards(const Economy& economy, int /*tau*/,
                                    std::span<const double> policy,
                                    const FieldQuantities& field) {
  const EconomyConfig& cfg = economy.config();
  const StateSpace& space = economy.space();
  std::vector<double> reward(space.num_states(), 0.0);
  for (int x = 0; x < space.num_states(); ++x) {
    const StateSpace::State s = space.Decode(x);
    const ResourceField& rf = field.resources[s.resource];
    const double u = cfg.urgencies[s.urgency];
    const double* pi = policy.data() + space.ActionOffset(x);
    double total = 0.0;
    for (int a = 1; a < space.NumActions(x); ++a) {
      if (pi[a] == 0.0) continue;
      const int b = BidOfAction(a);
      total += pi[a] * ImmediatePayoff(u, b, rf.Psi(b), rf.delay, cfg.nominal_payoff);
    }
    reward[x] = total;
  }
  return reward;
}

SparseMatrix PolicyTransitionMatrix(const Economy& economy, int tau,
                                    std::span<const double> policy,
                                    const KernelTable& kernels) {
  const StateSpace& space = economy.space();
  SparseMatrix p;
  p.cols = space.num_states();
  SparseRowBuilder row(space.num_states());
  for (int x = 0; x < space.num_states(); ++x) {
    const double* pi = policy.data() + space.ActionOffset(x);
    for (int a = 0; a < space.NumActions(x); ++a) {
      if (pi[a] == 0.0) continue;
      const double weight = pi[a];
      ForEachTransition(economy, tau, x, BidOfAction(a), kernels,
                        [&](int next, double prob) { row.Add(next, weight * prob); });
    }
    row.Flush(p);
  }
  return p;
}

SparseMatrix PolicyTransitionMatrix(const Economy& economy, int tau,
                                    std::span<const double> policy,
                                    const FieldQuantities& field) {
  return PolicyTransitionMatrix(economy, tau, policy, KernelTable(economy, field));
}

std::vector<double> StateDiscounts(const Economy& economy) {
  const StateSpace& space = economy.space();
  std::vector<double> discount(space.num_states());
  for (int x = 0; x < space.num_states(); ++x) {
    discount[x] = economy.config().resources[space.Decode(x).resource].discount;
  }
  return discount;
}

std::vector<StateBlock> DaySweepOrder(const StateSpace& space) {
  std::vector<StateBlock> blocks;
  for (int r = space.num_resources() - 1; r >= 0; --r) {
    const int begin = space.Index(r, 0, 0);
    blocks.push_back({begin, begin + space.states_per_resource()});
  }
  return blocks;
}

std::vector<double> QValues(const Economy& economy, int tau, const KernelTable& kernels,
                            std::span<const double> value) {
  const EconomyConfig& cfg = economy.config();
  const StateSpace& space = economy.space();
  std::vector<double> q(space.total_actions());
  for (int x = 0; x < space.num_states(); ++x) {
    const StateSpace::State s = space.Decode(x);
    const ResourceField& rf = kernels.field().resources[s.resource];
    const double u = cfg.urgencies[s.urgency];
    const double alpha = cfg.resources[s.resource].discount;
    double* qx = q.data() + space.ActionOffset(x);
    for (int a = 0; a < space.NumActions(x); ++a) {
      const int b = BidOfAction(a);
      double continuation = 0.0;
      ForEachTransition(economy, tau, x, b, kernels,
                        [&](int next, double prob) { continuation += prob * value[next]; });
      qx[a] = ImmediatePayoff(u, b, rf.Psi(b), rf.delay, cfg.nominal_payoff) +
              alpha * continuation;
    }
  }
  return q;
}

std::vector<double> QValues(const Economy& economy, int tau, const FieldQuantities& field,
                            std::span<const double> value) {
  return QValues(economy, tau, KernelTable(economy, field), value);
}

ValueFunction EvaluatePolicy(const Economy& economy, int tau, std::span<const double> policy,
                             const FieldQuantities& field, double tol, int max_sweeps,
                             std::span<const double> warm_start) {
  const StateSpace& space = economy.space();
  const KernelTable kernels(economy, field);
  const SparseMatrix p = PolicyTransitionMatrix(economy, tau, policy, kernels);
  const std::vector<double> reward = ExpectedRewards(economy, tau, policy, field);
  const std::vector<double> discount = StateDiscounts(economy);
  const std::vector<StateBlock> blocks = DaySweepOrder(space);
  std::vector<double> init(space.num_states(), 0.0);
  if (!warm_start.empty()) init.assign(warm_start.begin(), warm_start.end());

  ValueIterationResult solved =
      ValueIteration(p, reward, discount, blocks, init, tol, max_sweeps);
  ValueFunction vf;
  vf.value = std::move(solved.value);
  vf.residual = solved.residual;
  vf.sweeps = solved.sweeps;
  vf.q = QValues(economy, tau, kernels, vf.value);
  return vf;
}

std::vector<int> BestResponseSet(std::span<const double> q, double tie) {
  const double best = *std::max_element(q.begin(), q.end());
  std::vector<int> set;
  for (int a = 0; a < static_cast<int>(q.size()); ++a) {
    if (q[a] >= best - tie) set.push_back(a);
  }
  return set;
}

double OptimalityGap(std::span<const double> q, std::span<const double> pi) {
  double best = -std::numeric_limits<double>::infinity();
  double mixed = 0.0;
  for (std::size_t a = 0; a < q.size(); ++a) {
    best = std::max(best, q[a]);
    mixed += pi[a] * q[a];
  }
  return best - mixed;
}

double MaxOptimalityGap(const StateSpace& space, std::span<const double> q,
                        std::span<const double> policy) {
  double gap = 0.0;
  for (int x = 0; x < space.num_states(); ++x) {
    const auto offset = space.ActionOffset(x);
    const auto n = static_cast<std::size_t>(space.NumActions(x));
    gap = std::max(gap, OptimalityGap(q.subspan(offset, n), policy.subspan(offset, n)));
  }
  return gap;
}

}  // namespace karma

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

// A user type's decision problem for a fixed social state: expected
// rewards, policy transition matrix, policy value and Q-values. Discounting
// is state dependent: only transitions out of the last resource of the day
// are discounted.

#ifndef KARMA_MDP_H_
#define KARMA_MDP_H_

#include <span>
#include <vector>

#include "karma/markov.h"
#include "karma/mean_field.h"
#include "karma/model.h"

namespace karma {

inline constexpr double kDefaultTieTolerance = 1e-9;

// R_tau[x] = sum_b pi[b | x] * sigma[r, u, b].
std::vector<double> ExpectedRewards(const Economy& economy, int tau,
                                    std::span<const double> policy,
                                    const FieldQuantities& field);

// P_tau[x+ | x] = sum_b pi[b | x] * p_tau[x+ | x, b].
SparseMatrix PolicyTransitionMatrix(const Economy& economy, int tau,
                                    std::span<const double> policy,
                                    const FieldQuantities& field);
SparseMatrix PolicyTransitionMatrix(const Economy& economy, int tau,
                                    std::span<const double> policy,
                                    const KernelTable& kernels);

// alpha[r] for every state.
std::vector<double> StateDiscounts(const Economy& economy);

// Resource blocks from the last resource of the day back to the first.
std::vector<StateBlock> DaySweepOrder(const StateSpace& space);

struct ValueFunction {
  std::vector<double> value;  // V_tau[x]
  std::vector<double> q;      // Q_tau[x, b] over StateSpace action slots
  double residual = 0.0;      // Bellman residual of `value`
  int sweeps = 0;
};

// Value of `policy` by day sweeps; throws NonConvergence when the residual
// is still above tol after max_sweeps. Q-values are filled in as well.
ValueFunction EvaluatePolicy(const Economy& economy, int tau, std::span<const double> policy,
                             const FieldQuantities& field, double tol, int max_sweeps,
                             std::span<const double> warm_start = {});

// Q_tau[x, b] = sigma[r, u, b] + alpha[r] * sum_x+ p_tau[x+ | x, b] V[x+].
std::vector<double> QValues(const Economy& economy, int tau, const FieldQuantities& field,
                            std::span<const double> value);
std::vector<double> QValues(const Economy& economy, int tau, const KernelTable& kernels,
                            std::span<const double> value);

// Action slots whose value is within `tie` of the best one.
std::vector<int> BestResponseSet(std::span<const double> q, double tie = kDefaultTieTolerance);

// max_b Q[x, b] - sum_b pi[b | x] Q[x, b] for one state.
double OptimalityGap(std::span<const double> q, std::span<const double> pi);

// Largest optimality gap over all states.
double MaxOptimalityGap(const StateSpace& space, std::span<const double> q,
                        std::span<const double> policy);

}  // namespace karma

#endif  // KARMA_MDP_H_

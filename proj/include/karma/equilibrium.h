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

// Stationary Nash equilibrium computation.
//
// The solver alternates four steps on the social state (d, pi):
//   1. field quantities from (d, pi),
//   2. one step of the population dynamics d <- d P(d, pi),
//   3. policy evaluation and Q-values for every type,
//   4. a damped move towards the softmax response softmax(Q / lambda).
// Step 2 recomputes the field from the distribution it propagates, so the
// population's karma (in exchange-weighted units) is conserved along the
// iteration and the equilibrium keeps the endowment's karma level.

#ifndef KARMA_EQUILIBRIUM_H_
#define KARMA_EQUILIBRIUM_H_

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "karma/mdp.h"
#include "karma/mean_field.h"
#include "karma/model.h"

namespace karma {

enum class LambdaSchedule { kHarmonic, kGeometric };

struct SolverSettings {
  double step_size = 0.3;  // eta in (0, 1]
  // Once lambda sits at its floor, eta is halved (down to step_size_min)
  // after every window of stall_window iterations whose best Q-gap is not
  // at least half the previous window's.
  double step_size_min = 5e-3;
  int stall_window = 200;
  // Softmax temperature lambda_t = max(lambda_min, lambda_initial * f(t)) with
  // f(t) = 1 / (1 + t / T) (harmonic) or exp(-t / T) (geometric).
  LambdaSchedule lambda_schedule = LambdaSchedule::kGeometric;
  double lambda_initial = 0.5;
  double lambda_decay_iterations = 150.0;
  double lambda_min = 1e-3;
  double tol_stationarity = 1e-8;
  double tol_policy = 1e-4;
  // Q-optimality tolerance, as a multiple of the nominal payoff.
  double tol_q_relative = 1e-3;
  int max_iterations = 20000;
  int value_sweeps_per_iteration = 20;
  double value_tol = 1e-10;
  // Policy probabilities below this are dropped (and the rest renormalized).
  double prune_below = 1e-14;
  // Number of trailing iterations kept in the report's trace; 0 keeps all.
  int trace_limit = 0;

  std::vector<std::string> Validate() const;
};

struct IterationTrace {
  int iteration = 0;
  double stationarity = 0.0;
  double policy_movement = 0.0;
  double q_gap = 0.0;
  double lambda = 0.0;
  double step_size = 0.0;
  std::vector<double> welfare;  // endogenous average payoff per type
};

struct SolveReport {
  SocialState social;
  FieldQuantities field;
  std::vector<std::vector<double>> value;  // V_tau at return
  double stationarity_residual = 0.0;
  double policy_movement = 0.0;
  double q_gap = 0.0;
  double tol_q = 0.0;
  int iterations = 0;
  bool converged = false;
  // Population mean of each karma account at the first resource of the day.
  std::vector<double> karma_mean;
  double saturation_mass = 0.0;  // summed over resources at return
  std::vector<IterationTrace> trace;
};

// Stationary distribution of the linear chain induced by `social.policy`
// under a fixed field, by day-cyclic power iteration started from
// `social.distribution`.
struct EconomyStationary {
  std::vector<std::vector<double>> distribution;
  double residual = 0.0;
  int iterations = 0;
};
EconomyStationary StationaryDistribution(const Economy& economy, const SocialState& social,
                                         const FieldQuantities& field, double tol,
                                         int max_iter);

// max over types of 0.5 * ||d P(d, pi) - d||_1 with the field recomputed
// from (d, pi).
double StationarityResidual(const Economy& economy, const SocialState& social);

double ScheduledLambda(const SolverSettings& settings, int iteration);

// softmax(q / lambda) over one state's feasible actions; lambda == 0 gives
// the uniform distribution over exact maximizers.
void SoftmaxResponse(std::span<const double> q, double lambda, std::span<double> out);

// (1 - eta) * pi_old + eta * softmax(Q / lambda) for every state.
std::vector<double> SmoothedPolicyUpdate(const StateSpace& space,
                                         std::span<const double> policy,
                                         std::span<const double> q, double lambda,
                                         double step_size);

std::vector<double> KarmaMeans(const Economy& economy, const SocialState& social, int r = 0);

using TraceCallback = std::function<void(const IterationTrace&)>;

SolveReport SolveSne(const Economy& economy, const SolverSettings& settings,
                     std::optional<SocialState> init = std::nullopt,
                     const TraceCallback& on_iteration = nullptr);

// Independent check of a reported equilibrium: recomputes the field,
// evaluates every type's policy from scratch, and measures the Q-optimality
// gap and the stationarity residual.
struct Certificate {
  double q_gap = 0.0;
  double stationarity_residual = 0.0;
  double value_residual = 0.0;
  bool passed = false;
};
Certificate VerifyEquilibrium(const Economy& economy, const SocialState& social,
                              double tol_q, double tol_stationarity);

}  // namespace karma

#endif  // KARMA_EQUILIBRIUM_H_

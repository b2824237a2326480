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

#include "karma/equilibrium.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "karma/welfare.h"

namespace karma {

std::vector<std::string> SolverSettings::Validate() const {
  std::vector<std::string> problems;
  if (!(step_size > 0.0 && step_size <= 1.0)) problems.push_back("step size must lie in (0, 1]");
  if (!(lambda_initial >= 0.0 && lambda_min >= 0.0)) problems.push_back("lambda must be >= 0");
  if (!(lambda_decay_iterations > 0.0)) problems.push_back("lambda decay must be positive");
  if (!(tol_stationarity > 0.0 && tol_policy > 0.0 && tol_q_relative > 0.0 && value_tol > 0.0)) {
    problems.push_back("tolerances must be positive");
  }
  if (!(step_size_min > 0.0 && step_size_min <= step_size)) {
    problems.push_back("minimum step size must lie in (0, step size]");
  }
  if (max_iterations <= 0 || value_sweeps_per_iteration <= 0 || stall_window <= 0) {
    problems.push_back("iteration limits must be positive");
  }
  return problems;
}

EconomyStationary StationaryDistribution(const Economy& economy, const SocialState& social,
                                         const FieldQuantities& field, double tol,
                                         int max_iter) {
  EconomyStationary result;
  const KernelTable kernels(economy, field);
  for (int tau = 0; tau < economy.num_types(); ++tau) {
    const SparseMatrix p = PolicyTransitionMatrix(economy, tau, social.policy[tau], kernels);
    StationaryResult solved = PowerIteration(p, social.distribution[tau], tol, max_iter);
    result.residual = std::max(result.residual, solved.residual);
    result.iterations = std::max(result.iterations, solved.iterations);
    result.distribution.push_back(std::move(solved.distribution));
  }
  return result;
}

double StationarityResidual(const Economy& economy, const SocialState& social) {
  const FieldQuantities field = ComputeField(economy, social);
  double residual = 0.0;
  const KernelTable kernels(economy, field);
  for (int tau = 0; tau < economy.num_types(); ++tau) {
    const SparseMatrix p = PolicyTransitionMatrix(economy, tau, social.policy[tau], kernels);
    const std::vector<double> next = LeftMultiply(social.distribution[tau], p);
    residual = std::max(residual, TotalVariation(next, social.distribution[tau]));
  }
  return residual;
}

double ScheduledLambda(const SolverSettings& settings, int iteration) {
  const double t = iteration / settings.lambda_decay_iterations;
  const double factor =
      settings.lambda_schedule == LambdaSchedule::kGeometric ? std::exp(-t) : 1.0 / (1.0 + t);
  return std::max(settings.lambda_min, settings.lambda_initial * factor);
}

void SoftmaxResponse(std::span<const double> q, double lambda, std::span<double> out) {
  const double best = *std::max_element(q.begin(), q.end());
  double total = 0.0;
  for (std::size_t a = 0; a < q.size(); ++a) {
    if (lambda > 0.0) {
      out[a] = std::exp((q[a] - best) / lambda);
    } else {
      out[a] = q[a] == best ? 1.0 : 0.0;
    }
    total += out[a];
  }
  for (double& p : out) p /= total;
}

std::vector<double> SmoothedPolicyUpdate(const StateSpace& space,
                                         std::span<const double> policy,
                                         std::span<const double> q, double lambda,
                                         double step_size) {
  std::vector<double> updated(policy.size());
  std::vector<double> target;
  for (int x = 0; x < space.num_states(); ++x) {
    const auto offset = space.ActionOffset(x);
    const auto n = static_cast<std::size_t>(space.NumActions(x));
    target.resize(n);
    SoftmaxResponse(q.subspan(offset, n), lambda, target);
    for (std::size_t a = 0; a < n; ++a) {
      updated[offset + a] = (1.0 - step_size) * policy[offset + a] + step_size * target[a];
    }
  }
  return updated;
}

std::vector<double> KarmaMeans(const Economy& economy, const SocialState& social, int r) {
  const StateSpace& space = economy.space();
  const int n_r = space.num_resources();
  std::vector<double> means(n_r, 0.0);
  const int begin = space.Index(r, 0, 0);
  const int end = begin + space.states_per_resource();
  for (int tau = 0; tau < economy.num_types(); ++tau) {
    const double share = economy.config().types[tau].share;
    for (int x = begin; x < end; ++x) {
      const double m = share * social.distribution[tau][x];
      if (m == 0.0) continue;
      const int k = x % space.num_karma_vectors();
      for (int q = 0; q < n_r; ++q) means[q] += m * space.KarmaAt(k, q);
    }
  }
  return means;
}

namespace {

void Prune(const StateSpace& space, std::vector<double>& policy, double threshold) {
  if (threshold <= 0.0) return;
  for (int x = 0; x < space.num_states(); ++x) {
    double* pi = policy.data() + space.ActionOffset(x);
    const int n = space.NumActions(x);
    double total = 0.0;
    for (int a = 0; a < n; ++a) {
      if (pi[a] < threshold) pi[a] = 0.0;
      total += pi[a];
    }
    for (int a = 0; a < n; ++a) pi[a] /= total;
  }
}

double MaxPolicyMovement(const StateSpace& space, std::span<const double> before,
                         std::span<const double> after) {
  double movement = 0.0;
  for (int x = 0; x < space.num_states(); ++x) {
    const auto offset = space.ActionOffset(x);
    double l1 = 0.0;
    for (int a = 0; a < space.NumActions(x); ++a) {
      l1 += std::abs(after[offset + a] - before[offset + a]);
    }
    movement = std::max(movement, l1);
  }
  return movement;
}

}  // namespace

SolveReport SolveSne(const Economy& economy, const SolverSettings& settings,
                     std::optional<SocialState> init, const TraceCallback& on_iteration) {
  const auto problems = settings.Validate();
  if (!problems.empty()) throw std::invalid_argument("invalid solver settings: " + problems[0]);

  const EconomyConfig& cfg = economy.config();
  const StateSpace& space = economy.space();
  const int n_types = economy.num_types();
  const std::vector<double> discount = StateDiscounts(economy);
  const std::vector<StateBlock> blocks = DaySweepOrder(space);
  const double tol_q = settings.tol_q_relative * cfg.nominal_payoff;

  SolveReport report;
  report.tol_q = tol_q;
  SocialState social = init ? std::move(*init) : InitialSocialState(economy);
  std::vector<std::vector<double>> value(n_types,
                                         std::vector<double>(space.num_states(), 0.0));
  double movement = std::numeric_limits<double>::infinity();
  double step_size = settings.step_size;
  double window_best = std::numeric_limits<double>::infinity();
  double previous_best = std::numeric_limits<double>::infinity();
  int window_length = 0;

  for (int it = 0;; ++it) {
    const FieldQuantities field = ComputeField(economy, social);
    const KernelTable kernels(economy, field);
    double stationarity = 0.0;
    double gap = 0.0;
    double value_residual = 0.0;
    std::vector<std::vector<double>> next_d(n_types);
    std::vector<std::vector<double>> q(n_types);
    for (int tau = 0; tau < n_types; ++tau) {
      const SparseMatrix p = PolicyTransitionMatrix(economy, tau, social.policy[tau], kernels);
      next_d[tau] = LeftMultiply(social.distribution[tau], p);
      stationarity =
          std::max(stationarity, TotalVariation(next_d[tau], social.distribution[tau]));
      const std::vector<double> reward =
          ExpectedRewards(economy, tau, social.policy[tau], field);
      for (int sweep = 0; sweep < settings.value_sweeps_per_iteration; ++sweep) {
        if (ValueSweep(p, reward, discount, blocks, value[tau]) <= settings.value_tol) break;
      }
      value_residual =
          std::max(value_residual, BellmanResidual(p, reward, discount, value[tau]));
      q[tau] = QValues(economy, tau, kernels, value[tau]);
      gap = std::max(gap, MaxOptimalityGap(space, q[tau], social.policy[tau]));
    }

    const double lambda = ScheduledLambda(settings, it);
    IterationTrace trace{it, stationarity, movement, gap, lambda, step_size, {}};
    for (int tau = 0; tau < n_types; ++tau) {
      trace.welfare.push_back(
          AveragePayoff(economy, tau, social, field, InactivityMode::kEndogenous));
    }
    if (on_iteration) on_iteration(trace);
    report.trace.push_back(trace);
    if (settings.trace_limit > 0 &&
        static_cast<int>(report.trace.size()) > settings.trace_limit) {
      report.trace.erase(report.trace.begin());
    }

    const bool converged = stationarity <= settings.tol_stationarity && gap <= tol_q &&
                           movement <= settings.tol_policy &&
                           value_residual <= settings.value_tol;
    if (converged || it + 1 >= settings.max_iterations) {
      report.converged = converged;
      report.iterations = it + 1;
      report.stationarity_residual = stationarity;
      report.q_gap = gap;
      report.policy_movement = movement;
      report.field = field;
      report.value = value;
      report.karma_mean = KarmaMeans(economy, social);
      for (const ResourceField& rf : field.resources) report.saturation_mass += rf.saturation_mass;
      report.social = std::move(social);
      return report;
    }

    if (lambda <= settings.lambda_min) {
      window_best = std::min(window_best, gap);
      if (++window_length == settings.stall_window) {
        if (window_best > 0.5 * previous_best) {
          step_size = std::max(0.5 * step_size, settings.step_size_min);
        }
        previous_best = window_best;
        window_best = std::numeric_limits<double>::infinity();
        window_length = 0;
      }
    }

    double step_movement = 0.0;
    for (int tau = 0; tau < n_types; ++tau) {
      std::vector<double> updated =
          SmoothedPolicyUpdate(space, social.policy[tau], q[tau], lambda, step_size);
      Prune(space, updated, settings.prune_below);
      step_movement =
          std::max(step_movement, MaxPolicyMovement(space, social.policy[tau], updated));
      social.policy[tau] = std::move(updated);
      social.distribution[tau] = std::move(next_d[tau]);
    }
    movement = step_movement;
  }
}

Certificate VerifyEquilibrium(const Economy& economy, const SocialState& social,
                              double tol_q, double tol_stationarity) {
  Certificate cert;
  const FieldQuantities field = ComputeField(economy, social);
  const StateSpace& space = economy.space();
  for (int tau = 0; tau < economy.num_types(); ++tau) {
    const ValueFunction vf =
        EvaluatePolicy(economy, tau, social.policy[tau], field, 1e-11, 1'000'000);
    cert.value_residual = std::max(cert.value_residual, vf.residual);
    cert.q_gap = std::max(cert.q_gap, MaxOptimalityGap(space, vf.q, social.policy[tau]));
  }
  cert.stationarity_residual = StationarityResidual(economy, social);
  cert.passed = cert.q_gap <= tol_q && cert.stationarity_residual <= tol_stationarity;
  return cert;
}

}  // namespace karma

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

#include "karma/welfare.h"

#include <algorithm>
#include <cmath>

namespace karma {

NotParetoDominated::NotParetoDominated(int type, double gain)
    : WelfareError("benchmark not Pareto-dominated: type " + std::to_string(type) +
                   " gains " + std::to_string(gain)),
      type_(type),
      gain_(gain) {}

double AveragePayoff(const Economy& economy, int tau, const SocialState& social,
                     const FieldQuantities& field, InactivityMode mode) {
  const EconomyConfig& cfg = economy.config();
  const StateSpace& space = economy.space();
  const auto& d = social.distribution[tau];
  const auto& pi = social.policy[tau];
  const int first_action = mode == InactivityMode::kEndogenous ? 0 : 1;
  double payoff = 0.0;
  double steps = 0.0;
  for (int x = 0; x < space.num_states(); ++x) {
    if (d[x] == 0.0) continue;
    const StateSpace::State s = space.Decode(x);
    const ResourceField& rf = field.resources[s.resource];
    const double u = cfg.urgencies[s.urgency];
    const double* probs = pi.data() + space.ActionOffset(x);
    for (int a = first_action; a < space.NumActions(x); ++a) {
      const double m = d[x] * probs[a];
      if (m == 0.0) continue;
      const int b = BidOfAction(a);
      payoff += m * ImmediatePayoff(u, b, rf.Psi(b), rf.delay, cfg.nominal_payoff);
      steps += m;
    }
  }
  if (steps <= 0.0) {
    throw WelfareError("type " + cfg.types[tau].name +
                       " never acts; exogenous average payoff is undefined");
  }
  return payoff / steps;
}

BenchmarkPayoffs ComputeBenchmark(const Economy& economy) {
  const EconomyConfig& cfg = economy.config();
  const int n_r = cfg.num_resources();
  BenchmarkPayoffs bench;
  bench.demand.assign(n_r, 0.0);
  for (int tau = 0; tau < cfg.num_types(); ++tau) {
    const auto& marginals = economy.UrgencyMarginals(tau);
    for (int r = 0; r < n_r; ++r) {
      bench.demand[r] += cfg.types[tau].share * (1.0 - marginals[r][0]);
    }
  }
  for (int r = 0; r < n_r; ++r) {
    const double s_gp = cfg.resources[r].total_capacity;  // all capacity is general
    bench.delay.push_back(std::max((bench.demand[r] - s_gp) / s_gp, 0.0));
  }
  for (int tau = 0; tau < cfg.num_types(); ++tau) {
    const auto& marginals = economy.UrgencyMarginals(tau);
    double payoff = 0.0;
    double active = 0.0;
    for (int r = 0; r < n_r; ++r) {
      for (int u = 1; u < cfg.num_urgencies(); ++u) {
        payoff += marginals[r][u] * cfg.urgencies[u] * (cfg.nominal_payoff - bench.delay[r]);
        active += marginals[r][u];
      }
    }
    bench.endogenous.push_back(payoff / n_r);
    bench.exogenous.push_back(active > 0.0 ? payoff / active : 0.0);
  }
  return bench;
}

double NashWelfare(std::span<const double> payoff, std::span<const double> benchmark,
                   std::span<const double> shares) {
  double welfare = 0.0;
  for (std::size_t tau = 0; tau < payoff.size(); ++tau) {
    const double gain = payoff[tau] - benchmark[tau];
    if (!(gain > 0.0)) throw NotParetoDominated(static_cast<int>(tau), gain);
    welfare += shares[tau] * std::log(gain);
  }
  return welfare;
}

std::vector<double> TypeShares(const EconomyConfig& cfg) {
  std::vector<double> shares;
  for (const UserTypeSpec& t : cfg.types) shares.push_back(t.share);
  return shares;
}

WelfareReport EvaluateWelfare(const Economy& economy, const SocialState& social,
                              const FieldQuantities& field, const BenchmarkPayoffs& bench) {
  WelfareReport report;
  for (int tau = 0; tau < economy.num_types(); ++tau) {
    report.endogenous.push_back(
        AveragePayoff(economy, tau, social, field, InactivityMode::kEndogenous));
    report.exogenous.push_back(
        AveragePayoff(economy, tau, social, field, InactivityMode::kExogenous));
  }
  const std::vector<double> shares = TypeShares(economy.config());
  try {
    report.social_endogenous = NashWelfare(report.endogenous, bench.endogenous, shares);
  } catch (const NotParetoDominated&) {
  }
  try {
    report.social_exogenous = NashWelfare(report.exogenous, bench.exogenous, shares);
  } catch (const NotParetoDominated&) {
  }
  return report;
}

}  // namespace karma

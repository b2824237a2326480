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

#ifndef KARMA_WELFARE_H_
#define KARMA_WELFARE_H_

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "karma/mean_field.h"
#include "karma/model.h"

namespace karma {

// Whether abstaining time-steps count in the long-run average (endogenous)
// or are dropped from numerator and denominator (exogenous).
enum class InactivityMode { kEndogenous, kExogenous };

class WelfareError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by NashWelfare when some type does not gain over the benchmark.
class NotParetoDominated : public WelfareError {
 public:
  NotParetoDominated(int type, double gain);
  int type() const { return type_; }
  double gain() const { return gain_; }

 private:
  int type_;
  double gain_;
};

// Long-run expected average payoff of type tau. Every resource competition
// of the day weighs one time-step.
double AveragePayoff(const Economy& economy, int tau, const SocialState& social,
                     const FieldQuantities& field, InactivityMode mode);

// Uncontrolled allocation (no priority capacity): users with u > 0 take
// general-purpose access, users with u = 0 abstain.
struct BenchmarkPayoffs {
  std::vector<double> endogenous;  // per type
  std::vector<double> exogenous;   // per type
  std::vector<double> delay;       // per resource
  std::vector<double> demand;      // per resource
};
BenchmarkPayoffs ComputeBenchmark(const Economy& economy);

// sum_tau g_tau * log(payoff_tau - benchmark_tau), natural log.
double NashWelfare(std::span<const double> payoff, std::span<const double> benchmark,
                   std::span<const double> shares);

struct WelfareReport {
  std::vector<double> endogenous;
  std::vector<double> exogenous;
  std::optional<double> social_endogenous;  // empty when not Pareto dominating
  std::optional<double> social_exogenous;
};

WelfareReport EvaluateWelfare(const Economy& economy, const SocialState& social,
                              const FieldQuantities& field, const BenchmarkPayoffs& bench);

std::vector<double> TypeShares(const EconomyConfig& cfg);

}  // namespace karma

#endif  // KARMA_WELFARE_H_

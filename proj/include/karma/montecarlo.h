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

// Finite-population simulation of the karma protocol. Agents follow a fixed
// policy; priority goes to the top floor(s_pr * N) bids with uniform random
// tie-breaking, payments and redistribution are sampled in integer units.

#ifndef KARMA_MONTECARLO_H_
#define KARMA_MONTECARLO_H_

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "karma/mean_field.h"
#include "karma/model.h"

namespace karma {

class InvalidPolicy : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimulationSettings {
  int num_agents = 10000;
  int days = 10000;
  int burn_in_days = 100;
  std::uint64_t seed = 1;
  int batches = 20;
  // Draw initial states from the social state's distribution; otherwise
  // every account starts at its endowment.
  bool start_from_distribution = true;
  bool record_days = false;
};

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
};

// One resource competition of one day.
struct DayRecord {
  int day = 0;
  int resource = 0;
  int bidders = 0;
  int priority = 0;
  int general = 0;
  double delay = 0.0;
  std::int64_t paid = 0;          // sum of winning bids
  std::int64_t redistributed = 0; // karma credited
  std::int64_t capped = 0;        // units re-offered after hitting k^max
  std::int64_t unplaced = 0;      // units lost because nobody could take them
  std::vector<std::int64_t> karma_total;  // per account, after the step
};

struct SimulationResult {
  std::uint64_t seed = 0;
  int num_agents = 0;
  int days = 0;
  std::vector<int> agents_per_type;
  std::vector<Estimate> payoff_endogenous;  // per type
  std::vector<Estimate> payoff_exogenous;   // per type
  std::vector<Estimate> delay;              // per resource
  std::vector<Estimate> mean_bid;           // per resource, abstain counts 0
  std::vector<std::vector<Estimate>> bid_distribution;  // [r][action slot]
  std::vector<int> priority_limit;          // floor(s_pr * N) per resource
  int max_priority_grants = 0;              // largest over steps, all resources
  std::int64_t capped_units = 0;
  std::int64_t saturation_events = 0;       // steps with unplaced karma
  bool conservation_checked = false;        // integral exchange only
  std::int64_t conservation_violations = 0; // steps without saturation events
  std::vector<DayRecord> records;           // when record_days
};

// Throws InvalidPolicy when a policy row puts mass outside the feasible bids
// or does not sum to one.
void CheckPolicy(const Economy& economy, const SocialState& social);

SimulationResult RunSimulation(const Economy& economy, const SocialState& social,
                               const SimulationSettings& settings);

}  // namespace karma

#endif  // KARMA_MONTECARLO_H_

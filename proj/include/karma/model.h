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

#ifndef KARMA_MODEL_H_
#define KARMA_MODEL_H_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace karma {

// Bid value used for "does not compete" (abstain). Numeric bids are >= 0.
inline constexpr int kAbstain = -1;

// Actions are stored densely per state: slot 0 is abstain, slot b + 1 is
// the numeric bid b.
inline constexpr int ActionOfBid(int bid) { return bid + 1; }
inline constexpr int BidOfAction(int action) { return action - 1; }

// Tolerance used to snap floating-point karma amounts onto integers before
// floor/ceil, so that e.g. 24 * (2/3) counts as 16.
inline constexpr double kIntegerSnap = 1e-9;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StateBudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Redistribution { kToActive, kToAll };

std::string ToString(Redistribution rule);
Redistribution ParseRedistribution(const std::string& text);

struct ResourceSpec {
  std::string name;
  double total_capacity = 0.0;     // s[r], fraction of the population
  double priority_capacity = 0.0;  // s^pr[r]
  int karma_max = 0;
  int karma_mean = 0;  // initial endowment and population mean of k[r]
  double discount = 1.0;

  double general_capacity() const {
    return total_capacity - priority_capacity;
  }
};

struct UserTypeSpec {
  std::string name;
  double share = 0.0;
  // Row-major transition matrix over (resource, urgency) pairs with pair
  // index r * num_urgencies + u; size (n_r * n_u)^2.
  std::vector<double> chain;
};

enum class ExchangeRegime { kNoExchange, kUnit, kNonUnit, kInconsistent };

std::string ToString(ExchangeRegime regime);

// chi(r, r') is the rate at which karma of account r' counts towards bids
// for resource r.
class ExchangeMatrix {
 public:
  ExchangeMatrix() = default;
  explicit ExchangeMatrix(int num_resources);  // no-exchange (identity)

  static ExchangeMatrix NoExchange(int num_resources);
  static ExchangeMatrix Unit(int num_resources);
  // Two-resource non-unit regime: chi(0,1) = rate, chi(1,0) = 1 / rate.
  static ExchangeMatrix Pairwise(double rate);

  int size() const { return n_; }
  double operator()(int r, int r_other) const { return rates_[r * n_ + r_other]; }
  void Set(int r, int r_other, double rate) { rates_[r * n_ + r_other] = rate; }

  ExchangeRegime Regime() const;
  bool IsIntegral() const;  // every rate is 0 or 1

 private:
  int n_ = 0;
  std::vector<double> rates_;
};

struct EconomyConfig {
  std::vector<ResourceSpec> resources;
  std::vector<double> urgencies;  // shared urgency set; urgencies[0] == 0
  std::vector<UserTypeSpec> types;
  ExchangeMatrix exchange;
  Redistribution redistribution = Redistribution::kToAll;
  double nominal_payoff = 0.0;
  double epsilon = 1e-4;
  std::int64_t max_states_per_type = 1'000'000;

  int num_resources() const { return static_cast<int>(resources.size()); }
  int num_urgencies() const { return static_cast<int>(urgencies.size()); }
  int num_types() const { return static_cast<int>(types.size()); }
  int num_pairs() const { return num_resources() * num_urgencies(); }

  // phi_tau[r_next, u_next | r, u].
  double Chain(int tau, int r, int u, int r_next, int u_next) const {
    const int n = num_pairs();
    return types[tau].chain[(r * num_urgencies() + u) * n +
                            r_next * num_urgencies() + u_next];
  }
  int NextResource(int r) const { return r + 1 == num_resources() ? 0 : r + 1; }
  int PreviousResource(int r) const {
    return r == 0 ? num_resources() - 1 : r - 1;
  }
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

ValidationReport ValidateConfig(const EconomyConfig& cfg);

// floor(sum_r' chi[r, r'] * k[r']).
int MaxBid(int r, std::span<const int> karma, const ExchangeMatrix& chi);

// floor/ceil of a real amount after snapping values within kIntegerSnap of an
// integer onto that integer.
int SnappedFloor(double value);

// Enumeration of x = [r, u, K], shared by all types. Karma vectors are
// flattened with account 0 varying slowest.
class StateSpace {
 public:
  struct State {
    int resource;
    int urgency;  // index into EconomyConfig::urgencies
    int karma;    // flattened karma-vector index
  };

  explicit StateSpace(const EconomyConfig& cfg);

  int num_states() const { return num_states_; }
  int num_resources() const { return num_resources_; }
  int num_urgencies() const { return num_urgencies_; }
  int num_karma_vectors() const { return num_karma_; }
  int states_per_resource() const { return num_urgencies_ * num_karma_; }

  int Index(int r, int u, int karma_index) const {
    return (r * num_urgencies_ + u) * num_karma_ + karma_index;
  }
  State Decode(int x) const {
    const int karma = x % num_karma_;
    const int pair = x / num_karma_;
    return {pair / num_urgencies_, pair % num_urgencies_, karma};
  }

  int KarmaIndex(std::span<const int> karma) const;
  std::vector<int> KarmaVector(int karma_index) const;
  int KarmaAt(int karma_index, int account) const {
    return (karma_index / strides_[account]) % (karma_max_[account] + 1);
  }
  // Index of the karma vector with account `account` replaced by `value`.
  int WithKarma(int karma_index, int account, int value) const {
    return karma_index +
           (value - KarmaAt(karma_index, account)) * strides_[account];
  }
  int karma_max(int account) const { return karma_max_[account]; }

  int MaxBid(int r, int karma_index) const {
    return max_bid_[r * num_karma_ + karma_index];
  }
  // Largest b^max over all karma vectors for resource r.
  int MaxBidOverall(int r) const { return max_bid_overall_[r]; }
  int NumActions(int x) const {
    return static_cast<int>(action_offset_[x + 1] - action_offset_[x]);
  }
  std::int64_t ActionOffset(int x) const { return action_offset_[x]; }
  std::int64_t total_actions() const { return action_offset_.back(); }

 private:
  int num_resources_ = 0;
  int num_urgencies_ = 0;
  int num_karma_ = 0;
  int num_states_ = 0;
  std::vector<int> karma_max_;
  std::vector<int> strides_;
  std::vector<int> max_bid_;
  std::vector<int> max_bid_overall_;
  std::vector<std::int64_t> action_offset_;
};

// One step of a type's resource-urgency chain; the next resource is implied.
struct ChainStep {
  int urgency;
  double prob;
};

// Validated configuration together with its state space and the sparse
// successor lists of every type's resource-urgency chain. Immutable.
class Economy {
 public:
  // Throws ConfigError listing every violation when `cfg` is invalid and
  // StateBudgetExceeded when the state space is too large.
  explicit Economy(EconomyConfig cfg);

  const EconomyConfig& config() const { return cfg_; }
  const StateSpace& space() const { return space_; }
  int num_types() const { return cfg_.num_types(); }

  std::span<const ChainStep> ChainSuccessors(int tau, int r, int u) const {
    const auto& steps = successors_[(tau * cfg_.num_resources() + r) *
                                        cfg_.num_urgencies() + u];
    return steps;
  }

  // Long-run urgency distribution of type tau conditional on resource r,
  // as a [r][u] table.
  const std::vector<std::vector<double>>& UrgencyMarginals(int tau) const {
    return marginals_[tau];
  }

 private:
  EconomyConfig cfg_;
  StateSpace space_;
  std::vector<std::vector<ChainStep>> successors_;
  std::vector<std::vector<std::vector<double>>> marginals_;
};

}  // namespace karma

#endif  // KARMA_MODEL_H_

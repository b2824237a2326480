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

#include "karma/model.h"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace karma {
namespace {

constexpr double kRowSumTolerance = 1e-12;
constexpr double kRateTolerance = 1e-9;

std::string Describe(const std::string& what, int index) {
  std::ostringstream out;
  out << what << " " << index;
  return out.str();
}

}  // namespace

std::string ToString(Redistribution rule) {
  return rule == Redistribution::kToActive ? "to_active" : "to_all";
}

Redistribution ParseRedistribution(const std::string& text) {
  if (text == "to_active" || text == "ToActive") return Redistribution::kToActive;
  if (text == "to_all" || text == "ToAll") return Redistribution::kToAll;
  throw ConfigError("unknown redistribution rule '" + text + "'");
}

std::string ToString(ExchangeRegime regime) {
  switch (regime) {
    case ExchangeRegime::kNoExchange:
      return "no_exchange";
    case ExchangeRegime::kUnit:
      return "unit";
    case ExchangeRegime::kNonUnit:
      return "non_unit";
    case ExchangeRegime::kInconsistent:
      return "inconsistent";
  }
  return "inconsistent";
}

ExchangeMatrix::ExchangeMatrix(int num_resources)
    : n_(num_resources), rates_(num_resources * num_resources, 0.0) {
  for (int r = 0; r < n_; ++r) rates_[r * n_ + r] = 1.0;
}

ExchangeMatrix ExchangeMatrix::NoExchange(int num_resources) {
  return ExchangeMatrix(num_resources);
}

ExchangeMatrix ExchangeMatrix::Unit(int num_resources) {
  ExchangeMatrix chi(num_resources);
  std::fill(chi.rates_.begin(), chi.rates_.end(), 1.0);
  return chi;
}

ExchangeMatrix ExchangeMatrix::Pairwise(double rate) {
  ExchangeMatrix chi(2);
  chi.Set(0, 1, rate);
  chi.Set(1, 0, 1.0 / rate);
  return chi;
}

ExchangeRegime ExchangeMatrix::Regime() const {
  bool all_zero = true;
  bool all_one = true;
  bool reciprocal = true;
  for (int r = 0; r < n_; ++r) {
    for (int q = 0; q < n_; ++q) {
      if (q == r) continue;
      const double rate = (*this)(r, q);
      if (rate != 0.0) all_zero = false;
      if (std::abs(rate - 1.0) > kRateTolerance) all_one = false;
      if (std::abs(rate * (*this)(q, r) - 1.0) > kRateTolerance) {
        reciprocal = false;
      }
    }
  }
  if (all_zero) return ExchangeRegime::kNoExchange;
  if (all_one) return ExchangeRegime::kUnit;
  if (reciprocal) return ExchangeRegime::kNonUnit;
  return ExchangeRegime::kInconsistent;
}

bool ExchangeMatrix::IsIntegral() const {
  return std::all_of(rates_.begin(), rates_.end(),
                     [](double v) { return v == 0.0 || v == 1.0; });
}

ValidationReport ValidateConfig(const EconomyConfig& cfg) {
  ValidationReport report;
  auto fail = [&report](std::string message) {
    report.violations.push_back(std::move(message));
  };

  const int n_r = cfg.num_resources();
  const int n_u = cfg.num_urgencies();
  if (n_r == 0) fail("at least one resource is required");
  if (n_u == 0) fail("at least one urgency level is required");
  if (cfg.types.empty()) fail("at least one user type is required");
  if (n_u > 0 && cfg.urgencies[0] != 0.0) {
    fail("urgency set must start with u = 0");
  }
  for (int u = 1; u < n_u; ++u) {
    if (!(cfg.urgencies[u] > 0.0)) fail(Describe("urgency must be positive:", u));
  }

  double min_positive_priority = 1.0;
  bool any_priority = false;
  for (int r = 0; r < n_r; ++r) {
    const ResourceSpec& res = cfg.resources[r];
    const std::string tag = "resource " + res.name + ": ";
    if (!(res.priority_capacity >= 0.0 &&
          res.priority_capacity < res.total_capacity &&
          res.total_capacity < 1.0)) {
      fail(tag + "capacities must satisfy 0 <= s_pr < s < 1");
    }
    if (!(res.general_capacity() > 0.0)) {
      fail(tag + "general-purpose capacity must be positive");
    }
    if (res.karma_max < 0) fail(tag + "karma_max must be nonnegative");
    if (res.karma_mean < 0 || res.karma_mean > res.karma_max) {
      fail(tag + "karma_mean must lie in [0, karma_max]");
    }
    if (r + 1 < n_r && res.discount != 1.0) {
      fail(tag + "within-day discount must be 1");
    }
    if (r + 1 == n_r && !(res.discount >= 0.0 && res.discount < 1.0)) {
      fail(tag + "day-boundary discount must lie in [0, 1)");
    }
    if (res.general_capacity() > 0.0) {
      // Everybody active, at least s_pr - eps of them served with priority.
      const double worst_delay =
          (1.0 - res.total_capacity + cfg.epsilon) / res.general_capacity();
      if (!(cfg.nominal_payoff > worst_delay)) {
        fail(tag + "nominal payoff must exceed the worst-case delay");
      }
    }
    if (res.priority_capacity > 0.0) {
      any_priority = true;
      min_positive_priority = std::min(min_positive_priority, res.priority_capacity);
    }
  }
  if (!(cfg.epsilon > 0.0)) fail("epsilon must be positive");
  if (any_priority && !(cfg.epsilon < min_positive_priority)) {
    fail("epsilon must be smaller than every positive priority capacity");
  }

  if (cfg.exchange.size() != n_r) {
    fail("exchange matrix must be n_r x n_r");
  } else {
    for (int r = 0; r < n_r; ++r) {
      if (cfg.exchange(r, r) != 1.0) fail(Describe("exchange rate chi[r,r] must be 1 for r =", r));
      for (int q = 0; q < n_r; ++q) {
        if (cfg.exchange(r, q) < 0.0) fail("exchange rates must be nonnegative");
      }
    }
    if (cfg.exchange.Regime() == ExchangeRegime::kInconsistent) {
      fail("non-unit exchange requires chi[r,r'] * chi[r',r] = 1");
    }
  }

  double share_sum = 0.0;
  const int n_pairs = cfg.num_pairs();
  for (int tau = 0; tau < cfg.num_types(); ++tau) {
    const UserTypeSpec& type = cfg.types[tau];
    const std::string tag = "type " + type.name + ": ";
    share_sum += type.share;
    if (type.share < 0.0 || type.share > 1.0) fail(tag + "share must lie in [0, 1]");
    if (static_cast<int>(type.chain.size()) != n_pairs * n_pairs) {
      fail(tag + "chain must be (n_r * n_u) x (n_r * n_u)");
      continue;
    }
    for (int r = 0; r < n_r; ++r) {
      for (int u = 0; u < n_u; ++u) {
        double row_sum = 0.0;
        double next_sum = 0.0;
        for (int rn = 0; rn < n_r; ++rn) {
          for (int un = 0; un < n_u; ++un) {
            const double p = cfg.Chain(tau, r, u, rn, un);
            if (p < 0.0) fail(tag + "chain entries must be nonnegative");
            row_sum += p;
            if (rn == cfg.NextResource(r)) next_sum += p;
          }
        }
        if (std::abs(row_sum - 1.0) > kRowSumTolerance) {
          fail(tag + "chain row (" + std::to_string(r) + "," + std::to_string(u) +
               ") must sum to 1");
        } else if (std::abs(next_sum - 1.0) > kRowSumTolerance) {
          fail(tag + "chain row (" + std::to_string(r) + "," + std::to_string(u) +
               ") must move to the next resource in the day");
        }
      }
    }
  }
  if (!cfg.types.empty() && std::abs(share_sum - 1.0) > kRowSumTolerance) {
    fail("type shares must sum to 1");
  }
  if (cfg.max_states_per_type <= 0) fail("state budget must be positive");
  return report;
}

int SnappedFloor(double value) {
  const double nearest = std::round(value);
  if (std::abs(value - nearest) < kIntegerSnap) return static_cast<int>(nearest);
  return static_cast<int>(std::floor(value));
}

int MaxBid(int r, std::span<const int> karma, const ExchangeMatrix& chi) {
  double total = 0.0;
  for (int q = 0; q < static_cast<int>(karma.size()); ++q) {
    total += chi(r, q) * karma[q];
  }
  return SnappedFloor(total);
}

StateSpace::StateSpace(const EconomyConfig& cfg)
    : num_resources_(cfg.num_resources()), num_urgencies_(cfg.num_urgencies()) {
  std::int64_t karma_count = 1;
  karma_max_.resize(num_resources_);
  strides_.resize(num_resources_);
  for (int r = num_resources_ - 1; r >= 0; --r) {
    karma_max_[r] = cfg.resources[r].karma_max;
    strides_[r] = static_cast<int>(karma_count);
    karma_count *= karma_max_[r] + 1;
    if (karma_count > cfg.max_states_per_type) break;
  }
  const std::int64_t states =
      karma_count * num_resources_ * static_cast<std::int64_t>(num_urgencies_);
  if (states > cfg.max_states_per_type) {
    throw StateBudgetExceeded("state space has " + std::to_string(states) +
                              " states per type, budget is " +
                              std::to_string(cfg.max_states_per_type));
  }
  num_karma_ = static_cast<int>(karma_count);
  num_states_ = static_cast<int>(states);

  max_bid_.resize(static_cast<std::size_t>(num_resources_) * num_karma_);
  max_bid_overall_.assign(num_resources_, 0);
  std::vector<int> karma(num_resources_);
  for (int k = 0; k < num_karma_; ++k) {
    for (int q = 0; q < num_resources_; ++q) karma[q] = KarmaAt(k, q);
    for (int r = 0; r < num_resources_; ++r) {
      const int b = karma::MaxBid(r, karma, cfg.exchange);
      max_bid_[r * num_karma_ + k] = b;
      max_bid_overall_[r] = std::max(max_bid_overall_[r], b);
    }
  }

  action_offset_.resize(num_states_ + 1);
  action_offset_[0] = 0;
  for (int x = 0; x < num_states_; ++x) {
    const State s = Decode(x);
    action_offset_[x + 1] = action_offset_[x] + MaxBid(s.resource, s.karma) + 2;
  }
}

int StateSpace::KarmaIndex(std::span<const int> karma) const {
  int index = 0;
  for (int r = 0; r < num_resources_; ++r) index += karma[r] * strides_[r];
  return index;
}

std::vector<int> StateSpace::KarmaVector(int karma_index) const {
  std::vector<int> karma(num_resources_);
  for (int r = 0; r < num_resources_; ++r) karma[r] = KarmaAt(karma_index, r);
  return karma;
}

}  // namespace karma

namespace karma {
namespace {

EconomyConfig Validated(EconomyConfig cfg) {
  const ValidationReport report = ValidateConfig(cfg);
  if (!report.ok()) {
    std::string message = "invalid economy configuration:";
    for (const std::string& v : report.violations) message += "\n  - " + v;
    throw ConfigError(message);
  }
  return cfg;
}

// Day-cyclic urgency marginals of one type by lazy power iteration, which
// also converges for chains that are periodic across days.
std::vector<std::vector<double>> ComputeMarginals(const EconomyConfig& cfg, int tau) {
  const int n_r = cfg.num_resources();
  const int n_u = cfg.num_urgencies();
  std::vector<double> start(n_u, 1.0 / n_u);
  for (int iter = 0; iter < 1'000'000; ++iter) {
    std::vector<double> m = start;
    for (int r = 0; r < n_r; ++r) {
      std::vector<double> next(n_u, 0.0);
      for (int u = 0; u < n_u; ++u) {
        for (int un = 0; un < n_u; ++un) {
          next[un] += m[u] * cfg.Chain(tau, r, u, cfg.NextResource(r), un);
        }
      }
      m = std::move(next);
    }
    double change = 0.0;
    for (int u = 0; u < n_u; ++u) {
      const double lazy = 0.5 * start[u] + 0.5 * m[u];
      change = std::max(change, std::abs(lazy - start[u]));
      start[u] = lazy;
    }
    if (change < 1e-15) break;
  }
  std::vector<std::vector<double>> marginals(n_r);
  marginals[0] = start;
  for (int r = 0; r + 1 < n_r; ++r) {
    marginals[r + 1].assign(n_u, 0.0);
    for (int u = 0; u < n_u; ++u) {
      for (int un = 0; un < n_u; ++un) {
        marginals[r + 1][un] += marginals[r][u] * cfg.Chain(tau, r, u, r + 1, un);
      }
    }
  }
  return marginals;
}

}  // namespace

Economy::Economy(EconomyConfig cfg)
    : cfg_(Validated(std::move(cfg))), space_(cfg_) {
  const int n_r = cfg_.num_resources();
  const int n_u = cfg_.num_urgencies();
  successors_.resize(static_cast<std::size_t>(cfg_.num_types()) * n_r * n_u);
  for (int tau = 0; tau < cfg_.num_types(); ++tau) {
    for (int r = 0; r < n_r; ++r) {
      for (int u = 0; u < n_u; ++u) {
        auto& steps = successors_[(tau * n_r + r) * n_u + u];
        for (int un = 0; un < n_u; ++un) {
          const double p = cfg_.Chain(tau, r, u, cfg_.NextResource(r), un);
          if (p > 0.0) steps.push_back({un, p});
        }
      }
    }
    marginals_.push_back(ComputeMarginals(cfg_, tau));
  }
}

}  // namespace karma

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

#include "karma/montecarlo.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace karma {
namespace {

struct Agent {
  int type;
  int urgency;
  int karma;  // flattened karma vector index
};

// Per-batch sums; every estimate is a ratio of two of them.
struct BatchSums {
  std::vector<double> payoff, steps, active_payoff, active_steps;  // per type
  std::vector<double> delay, competitions, bid_sum, bid_obs;       // per resource
  std::vector<std::vector<double>> slot_count;                     // [r][slot]
};

BatchSums MakeBatch(int n_types, const StateSpace& space) {
  BatchSums b;
  const int n_r = space.num_resources();
  b.payoff.assign(n_types, 0.0);
  b.steps.assign(n_types, 0.0);
  b.active_payoff.assign(n_types, 0.0);
  b.active_steps.assign(n_types, 0.0);
  b.delay.assign(n_r, 0.0);
  b.competitions.assign(n_r, 0.0);
  b.bid_sum.assign(n_r, 0.0);
  b.bid_obs.assign(n_r, 0.0);
  for (int r = 0; r < n_r; ++r) {
    b.slot_count.emplace_back(static_cast<std::size_t>(space.MaxBidOverall(r)) + 2, 0.0);
  }
  return b;
}

// Batch-means estimate of sum(num) / sum(den).
Estimate BatchEstimate(const std::vector<double>& num, const std::vector<double>& den) {
  Estimate e;
  const double total_num = std::accumulate(num.begin(), num.end(), 0.0);
  const double total_den = std::accumulate(den.begin(), den.end(), 0.0);
  if (total_den <= 0.0) return {std::nan(""), std::nan("")};
  e.mean = total_num / total_den;
  std::vector<double> values;
  for (std::size_t i = 0; i < num.size(); ++i) {
    if (den[i] > 0.0) values.push_back(num[i] / den[i]);
  }
  if (values.size() < 2) return e;
  const double m = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  e.std_error = std::sqrt(ss / (values.size() - 1) / values.size());
  return e;
}

std::vector<int> AgentsPerType(const EconomyConfig& cfg, int n) {
  std::vector<int> count(cfg.num_types());
  std::vector<std::pair<double, int>> remainder;
  int assigned = 0;
  for (int tau = 0; tau < cfg.num_types(); ++tau) {
    const double exact = cfg.types[tau].share * n;
    count[tau] = static_cast<int>(std::floor(exact));
    assigned += count[tau];
    remainder.push_back({exact - count[tau], tau});
  }
  std::stable_sort(remainder.begin(), remainder.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int i = 0; assigned < n; ++i, ++assigned) ++count[remainder[i].second];
  return count;
}

template <typename Rng>
int SampleIndex(std::span<const double> cdf, Rng& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, cdf.back())(rng);
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(), cdf.size() - 1));
}

template <typename Rng>
int SampleAtom(const KarmaDistribution& dist, Rng& rng) {
  if (dist.size == 1) return dist.atoms[0].karma;
  double u = std::uniform_real_distribution<double>(0.0, dist.Total())(rng);
  for (int i = 0; i < dist.size; ++i) {
    u -= dist.atoms[i].prob;
    if (u < 0.0) return dist.atoms[i].karma;
  }
  return dist.atoms[dist.size - 1].karma;
}

}  // namespace

void CheckPolicy(const Economy& economy, const SocialState& social) {
  const StateSpace& space = economy.space();
  if (static_cast<int>(social.policy.size()) != economy.num_types()) {
    throw InvalidPolicy("policy must have one entry per user type");
  }
  for (int tau = 0; tau < economy.num_types(); ++tau) {
    const auto& pi = social.policy[tau];
    if (static_cast<std::int64_t>(pi.size()) != space.total_actions()) {
      throw InvalidPolicy("policy of type " + std::to_string(tau) +
                          " does not match the feasible bids of the state space");
    }
    for (int x = 0; x < space.num_states(); ++x) {
      double total = 0.0;
      for (int a = 0; a < space.NumActions(x); ++a) {
        const double p = pi[space.ActionOffset(x) + a];
        if (!(p >= 0.0) || !std::isfinite(p)) {
          throw InvalidPolicy("negative or non-finite policy entry at state " +
                              std::to_string(x));
        }
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-9) {
        throw InvalidPolicy("policy row of state " + std::to_string(x) + " sums to " +
                            std::to_string(total));
      }
    }
  }
}

SimulationResult RunSimulation(const Economy& economy, const SocialState& social,
                               const SimulationSettings& settings) {
  if (settings.num_agents <= 0 || settings.days <= 0 || settings.burn_in_days < 0 ||
      settings.batches <= 0) {
    throw std::invalid_argument("simulation sizes must be positive");
  }
  if (settings.num_agents >= (1 << 20)) {
    throw std::invalid_argument("at most 2^20 - 1 agents are supported");
  }
  CheckPolicy(economy, social);
  const EconomyConfig& cfg = economy.config();
  const StateSpace& space = economy.space();
  const int n_r = space.num_resources();
  const int n_types = economy.num_types();
  const int n = settings.num_agents;
  std::mt19937_64 rng(settings.seed);

  SimulationResult result;
  result.seed = settings.seed;
  result.num_agents = n;
  result.days = settings.days;
  result.agents_per_type = AgentsPerType(cfg, n);

  // Policy CDFs per type over the action slots of every state.
  std::vector<std::vector<double>> policy_cdf(n_types);
  for (int tau = 0; tau < n_types; ++tau) {
    policy_cdf[tau] = social.policy[tau];
    for (int x = 0; x < space.num_states(); ++x) {
      double* row = policy_cdf[tau].data() + space.ActionOffset(x);
      std::partial_sum(row, row + space.NumActions(x), row);
    }
  }

  std::vector<Agent> agents;
  agents.reserve(n);
  for (int tau = 0; tau < n_types; ++tau) {
    std::vector<double> cdf;
    if (settings.start_from_distribution) {
      const int begin = space.Index(0, 0, 0);
      const auto& d = social.distribution[tau];
      cdf.assign(d.begin() + begin, d.begin() + begin + space.states_per_resource());
    } else {
      cdf.assign(space.num_urgencies(), 0.0);
      for (int u = 0; u < space.num_urgencies(); ++u) {
        cdf[u] = economy.UrgencyMarginals(tau)[0][u];
      }
    }
    std::partial_sum(cdf.begin(), cdf.end(), cdf.begin());
    for (int i = 0; i < result.agents_per_type[tau]; ++i) {
      Agent a{tau, 0, 0};
      if (settings.start_from_distribution) {
        const int x = SampleIndex(cdf, rng);
        const StateSpace::State s = space.Decode(space.Index(0, 0, 0) + x);
        a.urgency = s.urgency;
        a.karma = s.karma;
      } else {
        a.urgency = SampleIndex(cdf, rng);
        std::vector<int> karma(n_r);
        for (int q = 0; q < n_r; ++q) {
          const double mean = cfg.resources[q].karma_mean;
          const double lo = std::floor(mean);
          karma[q] = static_cast<int>(lo) +
                     (std::uniform_real_distribution<double>()(rng) < mean - lo ? 1 : 0);
        }
        a.karma = space.KarmaIndex(karma);
      }
      agents.push_back(a);
    }
  }

  const ExchangeMatrix& chi = cfg.exchange;
  result.conservation_checked = chi.IsIntegral();
  for (int r = 0; r < n_r; ++r) {
    result.priority_limit.push_back(
        static_cast<int>(std::floor(cfg.resources[r].priority_capacity * n + 1e-9)));
  }

  const int batches = std::min(settings.batches, settings.days);
  std::vector<BatchSums> sums(batches, MakeBatch(n_types, space));
  std::vector<int> action(n);
  std::vector<std::uint64_t> keys;
  std::vector<char> won(n), eligible(n);
  std::vector<int> open;
  auto account_value = [&](int r) {
    std::int64_t total = 0;
    for (const Agent& a : agents) {
      for (int q = 0; q < n_r; ++q) {
        total += static_cast<std::int64_t>(std::llround(chi(r, q))) * space.KarmaAt(a.karma, q);
      }
    }
    return total;
  };

  const int total_days = settings.burn_in_days + settings.days;
  for (int day = 0; day < total_days; ++day) {
    const int measured = day - settings.burn_in_days;
    BatchSums* batch =
        measured >= 0 ? &sums[static_cast<std::int64_t>(measured) * batches / settings.days]
                      : nullptr;
    for (int r = 0; r < n_r; ++r) {
      const ResourceSpec& res = cfg.resources[r];
      const std::int64_t value_before = result.conservation_checked ? account_value(r) : 0;

      // Bids.
      keys.clear();
      for (int i = 0; i < n; ++i) {
        const Agent& a = agents[i];
        const int x = space.Index(r, a.urgency, a.karma);
        const std::span<const double> cdf(policy_cdf[a.type].data() + space.ActionOffset(x),
                                          static_cast<std::size_t>(space.NumActions(x)));
        action[i] = SampleIndex(cdf, rng);
        won[i] = 0;
        if (action[i] != 0) {
          const auto tie = static_cast<std::uint32_t>(rng());
          keys.push_back((static_cast<std::uint64_t>(BidOfAction(action[i])) << 52) |
                         (static_cast<std::uint64_t>(tie) << 20) |
                         static_cast<std::uint64_t>(i));
        }
      }

      // Top-k rationing with random tie-breaking at the marginal bid.
      const int bidders = static_cast<int>(keys.size());
      const int grants = std::min(bidders, result.priority_limit[r]);
      std::nth_element(keys.begin(), keys.begin() + grants, keys.end(), std::greater<>());
      for (int j = 0; j < grants; ++j) won[keys[j] & 0xFFFFF] = 1;
      const int general = bidders - grants;
      result.max_priority_grants = std::max(result.max_priority_grants, grants);
      const double gp_capacity = res.general_capacity();
      const double delay =
          std::max((static_cast<double>(general) / n - gp_capacity) / gp_capacity, 0.0);

      // Payoffs and payments.
      std::int64_t paid = 0;
      for (int i = 0; i < n; ++i) {
        Agent& a = agents[i];
        const int bid = BidOfAction(action[i]);
        const Outcome o = bid == kAbstain ? Outcome::kNone
                          : won[i]        ? Outcome::kPriority
                                          : Outcome::kGeneral;
        if (batch != nullptr) {
          const Outcomes psi{o == Outcome::kPriority ? 1.0 : 0.0,
                             o == Outcome::kGeneral ? 1.0 : 0.0, o == Outcome::kNone ? 1.0 : 0.0};
          const double payoff =
              ImmediatePayoff(cfg.urgencies[a.urgency], bid, psi, delay, cfg.nominal_payoff);
          batch->payoff[a.type] += payoff;
          batch->steps[a.type] += 1.0;
          if (bid != kAbstain) {
            batch->active_payoff[a.type] += payoff;
            batch->active_steps[a.type] += 1.0;
          }
          batch->slot_count[r][action[i]] += 1.0;
          batch->bid_sum[r] += std::max(bid, 0);
          batch->bid_obs[r] += 1.0;
        }
        if (o == Outcome::kPriority && bid > 0) {
          a.karma = SampleAtom(PaymentKernel(economy, r, a.karma, bid, o), rng);
          paid += bid;
        }
      }

      // Redistribution: equal integer shares, then the remainder and capped
      // surplus in rounds of at most one unit per user below k^max, to random
      // users without replacement.
      open.clear();
      for (int i = 0; i < n; ++i) {
        eligible[i] = cfg.redistribution == Redistribution::kToAll || action[i] != 0;
        if (eligible[i]) open.push_back(i);
      }
      std::int64_t redistributed = 0, capped = 0, unplaced = 0;
      if (paid > 0 && !open.empty()) {
        const std::int64_t share = paid / static_cast<std::int64_t>(open.size());
        std::int64_t surplus = paid - share * static_cast<std::int64_t>(open.size());
        for (int i : open) {
          Agent& a = agents[i];
          const int k = space.KarmaAt(a.karma, r);
          const int credit = static_cast<int>(std::min<std::int64_t>(share, res.karma_max - k));
          a.karma = space.WithKarma(a.karma, r, k + credit);
          redistributed += credit;
          capped += share - credit;
        }
        surplus += capped;
        auto saturated = [&](int i) { return space.KarmaAt(agents[i].karma, r) >= res.karma_max; };
        std::erase_if(open, saturated);
        while (surplus > 0 && !open.empty()) {
          const std::size_t units =
              static_cast<std::size_t>(std::min<std::int64_t>(surplus, open.size()));
          for (std::size_t j = 0; j < units; ++j) {
            std::swap(open[j],
                      open[std::uniform_int_distribution<std::size_t>(j, open.size() - 1)(rng)]);
            Agent& a = agents[open[j]];
            a.karma = space.WithKarma(a.karma, r, space.KarmaAt(a.karma, r) + 1);
          }
          redistributed += static_cast<std::int64_t>(units);
          surplus -= static_cast<std::int64_t>(units);
          std::erase_if(open, saturated);
        }
        unplaced = surplus;
      } else {
        unplaced = paid;
      }
      result.capped_units += capped;
      if (unplaced > 0) ++result.saturation_events;
      if (result.conservation_checked && unplaced == 0 && account_value(r) != value_before) {
        ++result.conservation_violations;
      }

      if (batch != nullptr) {
        batch->delay[r] += delay;
        batch->competitions[r] += 1.0;
      }
      if (settings.record_days && measured >= 0) {
        DayRecord rec{measured, r, bidders, grants, general, delay, paid, redistributed,
                      capped, unplaced, std::vector<std::int64_t>(n_r, 0)};
        for (const Agent& a : agents) {
          for (int q = 0; q < n_r; ++q) rec.karma_total[q] += space.KarmaAt(a.karma, q);
        }
        result.records.push_back(std::move(rec));
      }

      // Advance the resource-urgency chain.
      for (Agent& a : agents) {
        const auto steps = economy.ChainSuccessors(a.type, r, a.urgency);
        if (steps.size() == 1) {
          a.urgency = steps[0].urgency;
          continue;
        }
        double u = std::uniform_real_distribution<double>()(rng);
        int next = steps.back().urgency;
        for (const ChainStep& step : steps) {
          u -= step.prob;
          if (u < 0.0) {
            next = step.urgency;
            break;
          }
        }
        a.urgency = next;
      }
    }
  }

  auto column = [&](auto member, int index) {
    std::vector<double> out;
    for (const BatchSums& b : sums) out.push_back((b.*member)[index]);
    return out;
  };
  for (int tau = 0; tau < n_types; ++tau) {
    result.payoff_endogenous.push_back(
        BatchEstimate(column(&BatchSums::payoff, tau), column(&BatchSums::steps, tau)));
    result.payoff_exogenous.push_back(BatchEstimate(column(&BatchSums::active_payoff, tau),
                                                    column(&BatchSums::active_steps, tau)));
  }
  for (int r = 0; r < n_r; ++r) {
    result.delay.push_back(
        BatchEstimate(column(&BatchSums::delay, r), column(&BatchSums::competitions, r)));
    const std::vector<double> obs = column(&BatchSums::bid_obs, r);
    result.mean_bid.push_back(BatchEstimate(column(&BatchSums::bid_sum, r), obs));
    std::vector<Estimate> nu;
    for (std::size_t a = 0; a < sums[0].slot_count[r].size(); ++a) {
      std::vector<double> count;
      for (const BatchSums& b : sums) count.push_back(b.slot_count[r][a]);
      nu.push_back(BatchEstimate(count, obs));
    }
    result.bid_distribution.push_back(std::move(nu));
  }
  return result;
}

}  // namespace karma

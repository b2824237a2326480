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

#include "karma/mean_field.h"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace karma {
namespace {

// Splits a nonnegative real amount into floor and the probability of
// rounding up.
struct Rounding {
  int floor;
  double up_prob;
};

Rounding Round(double amount) {
  const int lo = SnappedFloor(amount);
  const double frac = amount - lo;
  if (frac < kIntegerSnap) return {lo, 0.0};
  return {lo, frac};
}

}  // namespace

SocialState InitialSocialState(const Economy& economy) {
  const EconomyConfig& cfg = economy.config();
  const StateSpace& space = economy.space();
  std::vector<int> endowment(cfg.num_resources());
  for (int r = 0; r < cfg.num_resources(); ++r) endowment[r] = cfg.resources[r].karma_mean;
  const int k0 = space.KarmaIndex(endowment);

  SocialState social;
  for (int tau = 0; tau < cfg.num_types(); ++tau) {
    std::vector<double> d(space.num_states(), 0.0);
    const auto& marginals = economy.UrgencyMarginals(tau);
    for (int r = 0; r < cfg.num_resources(); ++r) {
      for (int u = 0; u < cfg.num_urgencies(); ++u) {
        d[space.Index(r, u, k0)] = marginals[r][u];
      }
    }
    std::vector<double> pi(space.total_actions(), 0.0);
    for (int x = 0; x < space.num_states(); ++x) {
      const int n = space.NumActions(x);
      std::fill_n(pi.begin() + space.ActionOffset(x), n, 1.0 / n);
    }
    social.distribution.push_back(std::move(d));
    social.policy.push_back(std::move(pi));
  }
  return social;
}

std::vector<double> BidDistribution(const Economy& economy, const SocialState& social,
                                    int r) {
  const StateSpace& space = economy.space();
  std::vector<double> nu(space.MaxBidOverall(r) + 2, 0.0);
  const int begin = space.Index(r, 0, 0);
  const int end = begin + space.states_per_resource();
  for (int tau = 0; tau < economy.num_types(); ++tau) {
    const double share = economy.config().types[tau].share;
    const auto& d = social.distribution[tau];
    const auto& pi = social.policy[tau];
    for (int x = begin; x < end; ++x) {
      const double mass = share * d[x];
      if (mass == 0.0) continue;
      const double* probs = pi.data() + space.ActionOffset(x);
      const int n = space.NumActions(x);
      for (int a = 0; a < n; ++a) nu[a] += mass * probs[a];
    }
  }
  return nu;
}

std::vector<double> PriorityProbabilities(std::span<const double> nu,
                                          double priority_capacity, double epsilon) {
  const int num_bids = static_cast<int>(nu.size()) - 1;
  std::vector<double> prob(num_bids, 0.0);
  double above = 0.0;  // sum of nu[b'] over numeric bids b' > b
  for (int b = num_bids - 1; b >= 0; --b) {
    const double at = nu[ActionOfBid(b)];
    if (above <= priority_capacity - epsilon - at) {
      prob[b] = 1.0;
    } else if (above >= priority_capacity) {
      prob[b] = 0.0;
    } else {
      prob[b] = std::clamp((priority_capacity - above) / (epsilon + at), 0.0, 1.0);
    }
    above += at;
  }
  return prob;
}

double CongestionDelay(std::span<const double> nu, std::span<const double> priority_prob,
                       double general_capacity) {
  double demand = 0.0;
  for (std::size_t b = 0; b < priority_prob.size(); ++b) {
    demand += nu[ActionOfBid(static_cast<int>(b))] * (1.0 - priority_prob[b]);
  }
  return std::max((demand - general_capacity) / general_capacity, 0.0);
}

double ImmediatePayoff(double urgency, int bid, const Outcomes& psi, double delay,
                       double nominal_payoff) {
  if (bid == kAbstain) return 0.0;
  if (urgency > 0.0) return urgency * (nominal_payoff - psi.general * delay);
  return -psi.general * delay;
}

double AveragePayment(std::span<const double> nu, std::span<const double> priority_prob) {
  double total = 0.0;
  for (std::size_t b = 0; b < priority_prob.size(); ++b) {
    total += nu[ActionOfBid(static_cast<int>(b))] * priority_prob[b] * static_cast<double>(b);
  }
  return total;
}

ActivePayment ActivePaymentFor(std::span<const double> nu, double avg_payment) {
  const double active = 1.0 - nu[0];
  if (active <= 0.0) return {0.0, false};
  return {avg_payment / active, true};
}

RedistributionGain SolveRedistributionGain(std::span<const double> eligible_mass,
                                           int karma_max, double target, double nominal) {
  RedistributionGain result;
  result.gain = nominal;
  if (target <= 0.0) return result;

  // Expected karma placed by an integer gain n.
  auto placed_integer = [&](int n) {
    double total = 0.0;
    for (int k = 0; k <= karma_max; ++k) {
      total += eligible_mass[k] * (std::min(k + n, karma_max) - k);
    }
    return total;
  };
  auto placed = [&](double g) {
    const Rounding rounding = Round(g);
    const double lo = placed_integer(rounding.floor);
    if (rounding.up_prob == 0.0) return lo;
    return (1.0 - rounding.up_prob) * lo + rounding.up_prob * placed_integer(rounding.floor + 1);
  };

  const double lost = target - placed(nominal);
  if (lost <= 1e-15 * std::max(1.0, target)) return result;
  result.saturation_mass = lost;

  const double capacity = placed_integer(karma_max);
  if (target >= capacity) {
    result.gain = karma_max;
    result.unplaced_mass = target - capacity;
    return result;
  }
  int n = std::max(0, SnappedFloor(nominal));
  double lo = placed_integer(n);
  double hi = placed_integer(n + 1);
  while (hi <= target) {
    ++n;
    lo = hi;
    hi = placed_integer(n + 1);
  }
  result.gain = n + (target - lo) / (hi - lo);
  return result;
}

ResourceField ComputeResourceField(const Economy& economy, const SocialState& social,
                                   int r) {
  const EconomyConfig& cfg = economy.config();
  const StateSpace& space = economy.space();
  const ResourceSpec& res = cfg.resources[r];

  ResourceField field;
  field.nu = BidDistribution(economy, social, r);
  field.priority_prob = PriorityProbabilities(field.nu, res.priority_capacity, cfg.epsilon);
  field.delay = CongestionDelay(field.nu, field.priority_prob, res.general_capacity());
  field.avg_payment = AveragePayment(field.nu, field.priority_prob);
  const ActivePayment active = ActivePaymentFor(field.nu, field.avg_payment);
  field.active_payment = active.value;
  field.has_active_users = active.defined;

  const bool to_all = cfg.redistribution == Redistribution::kToAll;
  std::vector<double> eligible(res.karma_max + 1, 0.0);
  const int begin = space.Index(r, 0, 0);
  const int end = begin + space.states_per_resource();
  for (int tau = 0; tau < economy.num_types(); ++tau) {
    const double share = cfg.types[tau].share;
    const auto& d = social.distribution[tau];
    const auto& pi = social.policy[tau];
    for (int x = begin; x < end; ++x) {
      const double mass = share * d[x];
      if (mass == 0.0) continue;
      const int k = space.KarmaAt(x % space.num_karma_vectors(), r);
      const double* probs = pi.data() + space.ActionOffset(x);
      if (to_all) eligible[k] += mass * probs[0];
      const int n = space.NumActions(x);
      for (int a = 1; a < n; ++a) {
        const double m = mass * probs[a];
        if (m == 0.0) continue;
        const int b = BidOfAction(a);
        const double pr = field.priority_prob[b];
        eligible[std::max(k - b, 0)] += m * pr;
        eligible[k] += m * (1.0 - pr);
      }
    }
  }
  const double nominal = to_all ? field.avg_payment : field.active_payment;
  const RedistributionGain gain =
      SolveRedistributionGain(eligible, res.karma_max, field.avg_payment, nominal);
  field.gain = gain.gain;
  field.saturation_mass = gain.saturation_mass;
  field.unplaced_mass = gain.unplaced_mass;
  return field;
}

FieldQuantities ComputeField(const Economy& economy, const SocialState& social) {
  FieldQuantities field;
  for (int r = 0; r < economy.config().num_resources(); ++r) {
    field.resources.push_back(ComputeResourceField(economy, social, r));
  }
  return field;
}

void KarmaDistribution::Add(int karma, double prob) {
  if (prob == 0.0) return;
  for (int i = 0; i < size; ++i) {
    if (atoms[i].karma == karma) {
      atoms[i].prob += prob;
      return;
    }
  }
  if (size == static_cast<int>(atoms.size())) {
    throw std::logic_error("karma distribution capacity exceeded");
  }
  atoms[size++] = {karma, prob};
}

double KarmaDistribution::Total() const {
  double total = 0.0;
  for (const auto& atom : view()) total += atom.prob;
  return total;
}

KarmaDistribution PaymentKernel(const Economy& economy, int r, int karma_index, int bid,
                                Outcome outcome) {
  KarmaDistribution result;
  if (outcome != Outcome::kPriority || bid <= 0) {
    result.Add(karma_index, 1.0);
    return result;
  }
  const StateSpace& space = economy.space();
  const ExchangeMatrix& chi = economy.config().exchange;
  const int n_r = space.num_resources();
  const int own = space.KarmaAt(karma_index, r);
  if (bid <= own) {
    result.Add(space.WithKarma(karma_index, r, own - bid), 1.0);
    return result;
  }
  int current = space.WithKarma(karma_index, r, 0);
  double remaining = bid - own;  // in units of resource r
  for (int step = 1; step < n_r; ++step) {
    const int q = (r + step) % n_r;
    const double rate = chi(r, q);
    if (rate <= 0.0) continue;
    const int balance = space.KarmaAt(karma_index, q);
    const double needed = remaining / rate;
    if (needed <= balance + kIntegerSnap) {
      const Rounding debit = Round(std::min(needed, static_cast<double>(balance)));
      result.Add(space.WithKarma(current, q, balance - debit.floor), 1.0 - debit.up_prob);
      if (debit.up_prob > 0.0) {
        result.Add(space.WithKarma(current, q, balance - debit.floor - 1), debit.up_prob);
      }
      return result;
    }
    current = space.WithKarma(current, q, 0);
    remaining -= rate * balance;
  }
  assert(false && "bid exceeds the convertible balance");
  throw std::logic_error("bid exceeds the convertible balance");
}

KarmaDistribution RedistributionKernel(const Economy& economy, int r, int karma_hat,
                                       Outcome outcome, const ResourceField& field) {
  KarmaDistribution result;
  const bool eligible = economy.config().redistribution == Redistribution::kToAll ||
                        outcome != Outcome::kNone;
  if (!eligible || field.gain <= 0.0) {
    result.Add(karma_hat, 1.0);
    return result;
  }
  const StateSpace& space = economy.space();
  const int k = space.KarmaAt(karma_hat, r);
  const int cap = space.karma_max(r);
  const Rounding gain = Round(field.gain);
  result.Add(space.WithKarma(karma_hat, r, std::min(k + gain.floor, cap)), 1.0 - gain.up_prob);
  if (gain.up_prob > 0.0) {
    result.Add(space.WithKarma(karma_hat, r, std::min(k + gain.floor + 1, cap)), gain.up_prob);
  }
  return result;
}

KarmaDistribution KarmaKernel(const Economy& economy, int r, int karma_index, int bid,
                              Outcome outcome, const ResourceField& field) {
  KarmaDistribution result;
  const KarmaDistribution paid = PaymentKernel(economy, r, karma_index, bid, outcome);
  for (const auto& hat : paid.view()) {
    const KarmaDistribution redistributed =
        RedistributionKernel(economy, r, hat.karma, outcome, field);
    for (const auto& plus : redistributed.view()) {
      result.Add(plus.karma, hat.prob * plus.prob);
    }
  }
  return result;
}

KernelTable::KernelTable(const Economy& economy, const FieldQuantities& field)
    : field_(field), num_karma_(economy.space().num_karma_vectors()) {
  const StateSpace& space = economy.space();
  const int n_r = space.num_resources();
  const std::size_t slots = static_cast<std::size_t>(n_r) * num_karma_;
  none_.resize(slots);
  general_.resize(slots);
  priority_offset_.resize(slots);
  for (int r = 0; r < n_r; ++r) {
    const ResourceField& rf = field.resources[r];
    for (int k = 0; k < num_karma_; ++k) {
      const std::size_t slot = static_cast<std::size_t>(r) * num_karma_ + k;
      none_[slot] = Append(KarmaKernel(economy, r, k, kAbstain, Outcome::kNone, rf));
      general_[slot] = Append(KarmaKernel(economy, r, k, 0, Outcome::kGeneral, rf));
      priority_offset_[slot] = static_cast<std::int64_t>(begin_.size()) - 1;
      for (int b = 0; b <= space.MaxBid(r, k); ++b) {
        Append(KarmaKernel(economy, r, k, b, Outcome::kPriority, rf));
      }
    }
  }
}

std::int64_t KernelTable::Append(const KarmaDistribution& kernel) {
  const std::int64_t entry = static_cast<std::int64_t>(begin_.size()) - 1;
  for (const auto& atom : kernel.view()) atoms_.push_back(atom);
  begin_.push_back(static_cast<std::int64_t>(atoms_.size()));
  return entry;
}

std::vector<Transition> StateTransition(const Economy& economy, int tau, int x, int bid,
                                        const FieldQuantities& field) {
  std::vector<Transition> out;
  ForEachTransition(economy, tau, x, bid, field,
                    [&out](int next, double prob) { out.push_back({next, prob}); });
  std::sort(out.begin(), out.end(),
            [](const Transition& a, const Transition& b) { return a.next < b.next; });
  std::vector<Transition> merged;
  for (const Transition& t : out) {
    if (!merged.empty() && merged.back().next == t.next) {
      merged.back().prob += t.prob;
    } else {
      merged.push_back(t);
    }
  }
  return merged;
}

}  // namespace karma

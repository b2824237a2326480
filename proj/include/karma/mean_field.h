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

// Quantities induced by a social state (d, pi): bid distribution, outcome
// probabilities, congestion delay, payments, and the karma and state
// transition kernels.

#ifndef KARMA_MEAN_FIELD_H_
#define KARMA_MEAN_FIELD_H_

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "karma/model.h"

namespace karma {

enum class Outcome { kPriority, kGeneral, kNone };

struct Outcomes {
  double priority = 0.0;
  double general = 0.0;
  double none = 0.0;
};

// d_tau[u, K | r] stored over all states x = [r, u, K] of the state space
// (each resource block sums to 1), and pi_tau[b | x] stored over the action
// slots of StateSpace::ActionOffset.
struct SocialState {
  std::vector<std::vector<double>> distribution;
  std::vector<std::vector<double>> policy;
};

// Karma point mass at the endowment, urgency at the chain's long-run
// marginal, uniform policy over feasible bids (abstain included).
SocialState InitialSocialState(const Economy& economy);

struct ResourceField {
  std::vector<double> nu;              // by action slot; nu[0] is abstain
  std::vector<double> priority_prob;   // psi[pr | r, b] for b = 0..max bid
  double delay = 0.0;
  double avg_payment = 0.0;            // p-bar
  double active_payment = 0.0;         // p-tilde (to-active rule)
  bool has_active_users = true;        // false when nu[abstain] == 1
  // Redistribution per eligible user after the saturation adjustment; equal
  // to avg_payment (to-all) or active_payment (to-active) when k^max never
  // binds.
  double gain = 0.0;
  double saturation_mass = 0.0;  // karma the nominal gain would lose to k^max
  double unplaced_mass = 0.0;    // karma that cannot be placed below k^max

  Outcomes Psi(int bid) const {
    if (bid == kAbstain) return {0.0, 0.0, 1.0};
    const double pr = priority_prob[bid];
    return {pr, 1.0 - pr, 0.0};
  }
};

struct FieldQuantities {
  std::vector<ResourceField> resources;
};

// nu[b | r]: population-weighted mixture of d and pi at resource r, indexed
// by action slot up to the largest feasible bid at r.
std::vector<double> BidDistribution(const Economy& economy, const SocialState& social,
                                    int r);

// psi[pr | r, b] for every numeric bid b covered by nu (three-branch
// rationing rule with under-allocation eps).
std::vector<double> PriorityProbabilities(std::span<const double> nu,
                                          double priority_capacity, double epsilon);

double CongestionDelay(std::span<const double> nu, std::span<const double> priority_prob,
                       double general_capacity);

double ImmediatePayoff(double urgency, int bid, const Outcomes& psi, double delay,
                       double nominal_payoff);

double AveragePayment(std::span<const double> nu, std::span<const double> priority_prob);

struct ActivePayment {
  double value = 0.0;
  bool defined = true;  // false when nobody is active; value is then 0
};
ActivePayment ActivePaymentFor(std::span<const double> nu, double avg_payment);

struct RedistributionGain {
  double gain = 0.0;
  double saturation_mass = 0.0;
  double unplaced_mass = 0.0;
};

// Smallest uniform gain g such that eligible users, each receiving g with
// probabilistic rounding and capped at karma_max, receive `target` karma in
// expectation. `eligible_mass[k]` is the eligible population mass holding k
// karma after payment; `nominal` is the uncapped gain.
RedistributionGain SolveRedistributionGain(std::span<const double> eligible_mass,
                                           int karma_max, double target, double nominal);

ResourceField ComputeResourceField(const Economy& economy, const SocialState& social,
                                   int r);
FieldQuantities ComputeField(const Economy& economy, const SocialState& social);

// Distribution over flattened karma vectors, at most four atoms.
struct KarmaDistribution {
  struct Atom {
    int karma;
    double prob;
  };
  std::array<Atom, 8> atoms{};
  int size = 0;

  void Add(int karma, double prob);
  double Total() const;
  std::span<const Atom> view() const { return {atoms.data(), static_cast<std::size_t>(size)}; }
};

// P[K-hat | r, K, b, o]: debits k[r] first, then the following accounts in
// cyclic order at rate 1 / chi[r, r']; fractional debits are split between
// floor and ceil so that the expectation is exact.
KarmaDistribution PaymentKernel(const Economy& economy, int r, int karma_index, int bid,
                                Outcome outcome);

// P[K+ | r, K-hat, o]: credits the field's redistribution gain to account r
// of eligible users, with probabilistic rounding and the k^max cap.
KarmaDistribution RedistributionKernel(const Economy& economy, int r, int karma_hat,
                                       Outcome outcome, const ResourceField& field);

// kappa[K+ | r, K, b, o].
KarmaDistribution KarmaKernel(const Economy& economy, int r, int karma_index, int bid,
                              Outcome outcome, const ResourceField& field);

// Calls visit(next_state, prob) for every successor of p_tau[x+ | x, b];
// successors may repeat.
template <typename Visitor>
void ForEachTransition(const Economy& economy, int tau, int x, int bid,
                       const FieldQuantities& field, Visitor&& visit);

// Karma kernels of every (r, K, b, o) for one field, shared by all types
// and urgencies. The gp and abstain kernels do not depend on the bid.
class KernelTable {
 public:
  KernelTable(const Economy& economy, const FieldQuantities& field);

  std::span<const KarmaDistribution::Atom> Kernel(int r, int karma_index, int bid,
                                                  Outcome outcome) const {
    const std::size_t slot =
        static_cast<std::size_t>(r) * num_karma_ + static_cast<std::size_t>(karma_index);
    std::int64_t entry;
    if (outcome == Outcome::kNone) {
      entry = none_[slot];
    } else if (outcome == Outcome::kGeneral) {
      entry = general_[slot];
    } else {
      entry = priority_offset_[slot] + bid;
    }
    return {atoms_.data() + begin_[entry],
            static_cast<std::size_t>(begin_[entry + 1] - begin_[entry])};
  }

  const FieldQuantities& field() const { return field_; }

 private:
  std::int64_t Append(const KarmaDistribution& kernel);

  const FieldQuantities& field_;
  int num_karma_;
  std::vector<KarmaDistribution::Atom> atoms_;
  std::vector<std::int64_t> begin_{0};
  std::vector<std::int64_t> none_;
  std::vector<std::int64_t> general_;
  std::vector<std::int64_t> priority_offset_;
};

// Same as ForEachTransition, reading kernels from a precomputed table.
template <typename Visitor>
void ForEachTransition(const Economy& economy, int tau, int x, int bid,
                       const KernelTable& table, Visitor&& visit) {
  const StateSpace& space = economy.space();
  const StateSpace::State s = space.Decode(x);
  const ResourceField& rf = table.field().resources[s.resource];
  const int r_next = economy.config().NextResource(s.resource);
  const auto chain = economy.ChainSuccessors(tau, s.resource, s.urgency);
  auto emit = [&](std::span<const KarmaDistribution::Atom> kernel, double weight) {
    for (const auto& atom : kernel) {
      for (const ChainStep& step : chain) {
        visit(space.Index(r_next, step.urgency, atom.karma), weight * atom.prob * step.prob);
      }
    }
  };
  if (bid == kAbstain) {
    emit(table.Kernel(s.resource, s.karma, bid, Outcome::kNone), 1.0);
    return;
  }
  const Outcomes psi = rf.Psi(bid);
  if (psi.priority > 0.0) {
    emit(table.Kernel(s.resource, s.karma, bid, Outcome::kPriority), psi.priority);
  }
  if (psi.general > 0.0) {
    emit(table.Kernel(s.resource, s.karma, bid, Outcome::kGeneral), psi.general);
  }
}

struct Transition {
  int next;
  double prob;
};

// p_tau[x+ | x, b] with duplicate successors merged, sorted by state.
std::vector<Transition> StateTransition(const Economy& economy, int tau, int x, int bid,
                                        const FieldQuantities& field);

// Implementation of the template above.
template <typename Visitor>
void ForEachTransition(const Economy& economy, int tau, int x, int bid,
                       const FieldQuantities& field, Visitor&& visit) {
  const StateSpace& space = economy.space();
  const StateSpace::State s = space.Decode(x);
  const ResourceField& rf = field.resources[s.resource];
  const int r_next = economy.config().NextResource(s.resource);
  const auto chain = economy.ChainSuccessors(tau, s.resource, s.urgency);
  auto emit = [&](const KarmaDistribution& kernel, double weight) {
    for (const auto& atom : kernel.view()) {
      for (const ChainStep& step : chain) {
        visit(space.Index(r_next, step.urgency, atom.karma), weight * atom.prob * step.prob);
      }
    }
  };
  if (bid == kAbstain) {
    emit(KarmaKernel(economy, s.resource, s.karma, bid, Outcome::kNone, rf), 1.0);
    return;
  }
  const Outcomes psi = rf.Psi(bid);
  if (psi.priority > 0.0) {
    emit(KarmaKernel(economy, s.resource, s.karma, bid, Outcome::kPriority, rf),
         psi.priority);
  }
  if (psi.general > 0.0) {
    emit(KarmaKernel(economy, s.resource, s.karma, bid, Outcome::kGeneral, rf),
         psi.general);
  }
}

}  // namespace karma

#endif  // KARMA_MEAN_FIELD_H_

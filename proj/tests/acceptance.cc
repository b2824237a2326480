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


// Acceptance run: prints one PASS/FAIL line per criterion. Exits 0 once every
// criterion has been evaluated; the lines carry the verdicts.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "karma/config_io.h"
#include "karma/equilibrium.h"
#include "karma/export.h"
#include "karma/markov.h"
#include "karma/mdp.h"
#include "karma/montecarlo.h"
#include "karma/scenario.h"
#include "karma/welfare.h"
#include "oracles.h"
#include "test_util.h"

namespace karma {
namespace {

constexpr double kBenchmarkTol = 1e-4;
constexpr double kWelfareTol = 0.08;
constexpr double kKernelTol = 1e-10;
constexpr double kValueTol = 1e-8;
constexpr double kStationaryTol = 1e-8;
constexpr double kStdErrors = 3.0;
constexpr int kAgents = 10000;
constexpr int kDays = 10000;

// Reference welfare table: S_en, C_en, SW_en, S_ex, C_ex, SW_ex.
const std::map<std::string, std::array<double, 6>>& ReferenceTable() {
  static const std::map<std::string, std::array<double, 6>> table = {
      {"to_active/none", {4.5741, 3.2801, -0.3082, 4.5741, 4.2658, -0.2301}},
      {"to_active/unit", {4.5649, 3.2750, -0.3177, 4.5649, 4.1424, -0.3236}},
      {"to_active/p_gt_h", {4.6178, 3.3018, -0.2661, 4.6178, 4.3071, -0.1780}},
      {"to_active/p_lt_h", {4.4940, 3.2618, -0.3735, 4.4940, 4.0326, -0.4629}},
      {"to_all/none", {4.4749, 3.3300, -0.3356, 4.4749, 4.4401, -0.1918}},
      {"to_all/unit", {4.5020, 3.4436, -0.2425, 4.5020, 4.5915, -0.0987}},
      {"to_all/p_gt_h", {4.5238, 3.4065, -0.2515, 4.5238, 4.5420, -0.1076}},
      {"to_all/p_lt_h", {4.4356, 3.3192, -0.3712, 4.4356, 4.4257, -0.2274}},
  };
  return table;
}

std::string RuleName(Redistribution rule) {
  return rule == Redistribution::kToAll ? "to_all" : "to_active";
}

std::string CellName(const CellResult& cell) {
  return RuleName(cell.cell.rule) + "/" + cell.cell.exchange_name;
}

std::string Fmt(const char* format, auto... args) {
  char buf[2048];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

std::map<int, std::string> verdicts;
int failures = 0;

void Report(int id, const std::string& name, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  verdicts[id] = Fmt("[%s] %d %s: ", pass ? "PASS" : "FAIL", id, name.c_str()) + detail;
}

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void BenchmarkCriterion() {
  const auto start = std::chrono::steady_clock::now();
  EconomyConfig cfg = CaseStudyConfig();
  for (auto& r : cfg.resources) r.priority_capacity = 0.0;
  const BenchmarkPayoffs bench = ComputeBenchmark(Economy(cfg));
  const double err = std::max({std::abs(bench.endogenous[0] - 3.75),
                               std::abs(bench.endogenous[1] - 2.625),
                               std::abs(bench.exogenous[0] - 3.75),
                               std::abs(bench.exogenous[1] - 3.5)});
  const double secs = Seconds(start);
  Report(1, "benchmark payoffs", err <= kBenchmarkTol && secs < 1.0,
         Fmt("S_en %.4f C_en %.4f S_ex %.4f C_ex %.4f, max error %.1e (tol %.0e), %.3f s",
             bench.endogenous[0], bench.endogenous[1], bench.exogenous[0], bench.exogenous[1],
             err, kBenchmarkTol, secs));
}

std::array<double, 6> Measures(const CellResult& cell) {
  const WelfareReport& w = *cell.welfare;
  return {w.endogenous[0], w.endogenous[1], w.social_endogenous.value_or(NAN),
          w.exogenous[0],  w.exogenous[1],  w.social_exogenous.value_or(NAN)};
}

void MatrixCriteria(const MatrixResult& result) {
  // 2: welfare within the loose tolerance.
  bool all_close = true;
  double worst = 0.0;
  std::string worst_cell;
  for (const CellResult& cell : result.cells) {
    if (!cell.welfare) {
      all_close = false;
      worst_cell = CellName(cell) + " (" + ToString(cell.status) + ")";
      continue;
    }
    const auto got = Measures(cell);
    const auto& ref = ReferenceTable().at(CellName(cell));
    for (int i = 0; i < 6; ++i) {
      const double err = std::isnan(got[i]) ? INFINITY : std::abs(got[i] - ref[i]);
      if (err > worst) {
        worst = err;
        worst_cell = CellName(cell);
      }
      all_close = all_close && err <= kWelfareTol;
    }
    std::printf("    %-18s %-13s en %.4f %.4f %.4f  ex %.4f %.4f %.4f  (%.1f s)\n",
                CellName(cell).c_str(), ToString(cell.status).c_str(), got[0], got[1], got[2],
                got[3], got[4], got[5], cell.seconds);
  }
  Report(2, "equilibrium welfare", all_close && result.cells.size() == 8,
         Fmt("%zu cells, largest deviation %.4f at %s (tol %.2f)", result.cells.size(), worst,
             worst_cell.c_str(), kWelfareTol));

  // 3: orderings.
  const BenchmarkPayoffs& bench = *result.benchmark;
  bool pareto = result.cells.size() == 8;
  std::map<std::string, std::array<double, 6>> m;
  for (const CellResult& cell : result.cells) {
    if (!cell.welfare) {
      pareto = false;
      continue;
    }
    const auto got = Measures(cell);
    m[CellName(cell)] = got;
    for (int tau = 0; tau < 2; ++tau) {
      pareto = pareto && got[tau] > bench.endogenous[tau] && got[3 + tau] > bench.exogenous[tau];
    }
  }
  auto argbest = [&](int column, bool maximum) {
    std::string best;
    for (const auto& [name, v] : m) {
      if (best.empty() || (maximum ? v[column] > m[best][column] : v[column] < m[best][column])) {
        best = name;
      }
    }
    return best;
  };
  const std::string max_en = argbest(2, true), max_ex = argbest(5, true);
  const std::string min_en = argbest(2, false), min_ex = argbest(5, false);
  bool active_raises_s = m.size() == 8;
  std::string s_detail;
  for (const char* x : {"none", "unit", "p_gt_h", "p_lt_h"}) {
    if (m.size() != 8) break;
    const auto& a = m[std::string("to_active/") + x];
    const auto& b = m[std::string("to_all/") + x];
    active_raises_s = active_raises_s && a[0] > b[0] && a[3] > b[3];
    s_detail += Fmt(" %s %+.4f", x, a[0] - b[0]);
  }
  const bool ordering = pareto && max_en == "to_all/unit" && max_ex == "to_all/unit" &&
                        min_en == "to_active/p_lt_h" && min_ex == "to_active/p_lt_h" &&
                        active_raises_s;
  std::string margin;
  if (m.size() == 8) {
    double second = INFINITY;
    for (const auto& [name, v] : m) {
      if (name != "to_active/p_lt_h") second = std::min(second, v[2]);
    }
    margin = Fmt("; SW_en margin of to_active/p_lt_h below the next cell %.4f",
                 second - m["to_active/p_lt_h"][2]);
  }
  Report(3, "welfare orderings", ordering,
         Fmt("(a) Pareto over benchmark %s; (b) max SW_en %s, max SW_ex %s; (c) min SW_en %s, "
             "min SW_ex %s%s; (d) to_active minus to_all S_en:%s",
             pareto ? "yes" : "no", max_en.c_str(), max_ex.c_str(), min_en.c_str(),
             min_ex.c_str(), margin.c_str(), s_detail.c_str()));
}

double ExchangeValue(const Economy& economy, int r, int karma_index) {
  const StateSpace& space = economy.space();
  double v = 0.0;
  for (int q = 0; q < space.num_resources(); ++q) {
    v += economy.config().exchange(r, q) * space.KarmaAt(karma_index, q);
  }
  return v;
}

void KernelCriterion() {
  std::mt19937_64 rng(4);
  double worst_row = 0.0, worst_balance = 0.0;
  bool negative = false, monotone = true;
  int configs = 0, non_binding = 0;
  for (; configs < 40; ++configs) {
    const Economy economy(testing::RandomConfig(rng));
    const StateSpace& space = economy.space();
    const SocialState social = testing::RandomSocialState(economy, rng);
    const FieldQuantities field = ComputeField(economy, social);
    for (int tau = 0; tau < economy.num_types(); ++tau) {
      for (int r = 0; r < space.num_resources(); ++r) {
        for (int u = 0; u < space.num_urgencies(); ++u) {
          double s = 0.0;
          for (const ChainStep& step : economy.ChainSuccessors(tau, r, u)) s += step.prob;
          worst_row = std::max(worst_row, std::abs(s - 1.0));
        }
      }
      const SparseMatrix p = PolicyTransitionMatrix(economy, tau, social.policy[tau], field);
      for (int i = 0; i < p.rows; ++i) worst_row = std::max(worst_row, std::abs(p.RowSum(i) - 1.0));
    }
    for (int r = 0; r < space.num_resources(); ++r) {
      const ResourceField& rf = field.resources[r];
      for (std::size_t b = 0; b < rf.priority_prob.size(); ++b) {
        const Outcomes o = rf.Psi(static_cast<int>(b));
        worst_row = std::max(worst_row, std::abs(o.priority + o.general + o.none - 1.0));
        if (b > 0) monotone = monotone && rf.priority_prob[b] >= rf.priority_prob[b - 1];
      }
    }
    std::vector<double> paid(space.num_resources(), 0.0), received(space.num_resources(), 0.0);
    for (int tau = 0; tau < economy.num_types(); ++tau) {
      const double share = economy.config().types[tau].share;
      for (int x = 0; x < space.num_states(); ++x) {
        const StateSpace::State st = space.Decode(x);
        const ResourceField& rf = field.resources[st.resource];
        for (int a = 0; a < space.NumActions(x); ++a) {
          const int b = BidOfAction(a);
          const double m = share * social.distribution[tau][x] *
                           social.policy[tau][space.ActionOffset(x) + a];
          const Outcomes psi = rf.Psi(b);
          for (const auto& [o, w] : {std::pair{Outcome::kPriority, psi.priority},
                                     std::pair{Outcome::kGeneral, psi.general},
                                     std::pair{Outcome::kNone, psi.none}}) {
            const KarmaDistribution kappa = KarmaKernel(economy, st.resource, st.karma, b, o, rf);
            worst_row = std::max(worst_row, std::abs(kappa.Total() - 1.0));
            const KarmaDistribution pay = PaymentKernel(economy, st.resource, st.karma, b, o);
            for (const auto& atom : pay.view()) {
              for (int q = 0; q < space.num_resources(); ++q) {
                negative = negative || space.KarmaAt(atom.karma, q) < 0;
              }
              if (w == 0.0) continue;
              paid[st.resource] += m * w * atom.prob *
                                   (ExchangeValue(economy, st.resource, st.karma) -
                                    ExchangeValue(economy, st.resource, atom.karma));
              const KarmaDistribution credit =
                  RedistributionKernel(economy, st.resource, atom.karma, o, rf);
              for (const auto& c : credit.view()) {
                received[st.resource] += m * w * atom.prob * c.prob *
                                         (ExchangeValue(economy, st.resource, c.karma) -
                                          ExchangeValue(economy, st.resource, atom.karma));
              }
            }
          }
        }
      }
    }
    for (int r = 0; r < space.num_resources(); ++r) {
      if (field.resources[r].unplaced_mass > 0.0) continue;
      ++non_binding;
      worst_balance = std::max(worst_balance, std::abs(paid[r] - received[r]));
    }
  }
  Report(4, "kernel properties",
         worst_row <= kKernelTol && worst_balance <= kKernelTol && !negative && monotone &&
             non_binding > 0,
         Fmt("%d random configs: max row-sum error %.1e, psi monotone %s, negative karma %s, "
             "max |paid - redistributed| %.1e over %d resource fields where k^max does not bind "
             "(tol %.0e)",
             configs, worst_row, monotone ? "yes" : "no", negative ? "yes" : "no", worst_balance,
             non_binding, kKernelTol));
}

void MdpCriterion() {
  std::mt19937_64 rng(5);
  double worst = 0.0;
  int instances = 0, max_states = 0;
  for (int trial = 0; trial < 30; ++trial) {
    EconomyConfig cfg = testing::RandomConfig(rng);
    const int kmax = 1 + trial % 3;
    for (auto& r : cfg.resources) {
      r.karma_max = kmax;
      r.karma_mean = 1;
    }
    const Economy economy(cfg);
    if (economy.space().num_states() > 200) continue;
    max_states = std::max(max_states, economy.space().num_states());
    const SocialState social = testing::RandomSocialState(economy, rng);
    const FieldQuantities field = ComputeField(economy, social);
    for (int tau = 0; tau < economy.num_types(); ++tau) {
      const SparseMatrix p = PolicyTransitionMatrix(economy, tau, social.policy[tau], field);
      const std::vector<double> reward = ExpectedRewards(economy, tau, social.policy[tau], field);
      const std::vector<double> discount = StateDiscounts(economy);
      const ValueIterationResult vi =
          ValueIteration(p, reward, discount, DaySweepOrder(economy.space()),
                         std::vector<double>(p.rows, 0.0), 1e-12, 1000000);
      const std::vector<double> oracle = testing::DenseValueSolve(p, reward, discount);
      for (int i = 0; i < p.rows; ++i) worst = std::max(worst, std::abs(vi.value[i] - oracle[i]));
      ++instances;
    }
  }
  // Daily cycle: V0 = 1 + V1, V1 = 2 + 0.98 V0.
  const SparseMatrix cycle = DenseToSparse(std::vector<double>{0, 1, 1, 0}, 2, 2);
  const std::vector<double> reward = {1.0, 2.0}, discount = {1.0, 0.98};
  const std::vector<StateBlock> blocks = {{1, 2}, {0, 1}};
  const ValueIterationResult v =
      ValueIteration(cycle, reward, discount, blocks, std::vector<double>{0, 0}, 1e-12, 100000);
  const std::vector<double> oracle = testing::DenseValueSolve(cycle, reward, discount);
  const double cycle_err =
      std::max(std::abs(v.value[0] - oracle[0]), std::abs(v.value[1] - oracle[1]));
  const double stated_residual =
      std::max(std::abs(151.0 - (1.0 + 150.0)), std::abs(150.0 - (2.0 + 0.98 * 151.0)));
  Report(5, "value iteration vs dense solve",
         worst <= kValueTol && cycle_err <= kValueTol && instances > 0,
         Fmt("%d policies up to %d states, max |V - V_dense| %.1e (tol %.0e); two-state cycle "
             "V = (%.6f, %.6f), dense solve (%.6f, %.6f); the pair (151, 150) leaves residual "
             "%.2f in V1 = 2 + 0.98 V0",
             instances, max_states, worst, kValueTol, v.value[0], v.value[1], oracle[0],
             oracle[1], stated_residual));
}

void StationaryCriterion() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> unif;
  double worst = 0.0;
  int chains = 0;
  for (int size = 2; size <= 50; size += 2, ++chains) {
    std::vector<double> dense(static_cast<std::size_t>(size) * size);
    for (int i = 0; i < size; ++i) {
      double total = 0.0;
      for (int j = 0; j < size; ++j) {
        total += dense[static_cast<std::size_t>(i) * size + j] = unif(rng) < 0.3 ? unif(rng) : 0.0;
      }
      dense[static_cast<std::size_t>(i) * size + (i + 1) % size] += 0.05;
      total += 0.05;
      for (int j = 0; j < size; ++j) dense[static_cast<std::size_t>(i) * size + j] /= total;
    }
    const StationaryResult got = PowerIteration(
        DenseToSparse(dense, size, size), std::vector<double>(size, 1.0 / size), 1e-14, 10000000);
    worst = std::max(worst, TotalVariation(got.distribution, testing::DenseStationary(dense, size)));
  }
  Report(6, "stationary distribution vs null space", worst <= kStationaryTol,
         Fmt("%d random chains of 2..50 states, max TV %.1e (tol %.0e)", chains, worst,
             kStationaryTol));
}

void MonteCarloCriterion(const MatrixResult& result) {
  const CellResult* cell = nullptr;
  for (const CellResult& c : result.cells) {
    if (CellName(c) == "to_all/unit") cell = &c;
  }
  if (cell == nullptr || !cell->report) {
    Report(7, "mean field vs Monte Carlo", false, "to_all/unit cell did not produce a policy");
    return;
  }
  const auto start = std::chrono::steady_clock::now();
  const Economy economy(CaseStudyConfig(Redistribution::kToAll, ExchangeMatrix::Unit(2)));
  SimulationSettings s;
  s.num_agents = kAgents;
  s.days = kDays;
  s.seed = 2026;
  const SimulationResult sim = RunSimulation(economy, cell->report->social, s);
  const FieldQuantities& field = cell->report->field;
  bool pass = true;
  double worst_z = 0.0;
  std::string detail;
  auto compare = [&](const std::string& what, double mf, const Estimate& mc) {
    const double diff = std::abs(mc.mean - mf);
    // A zero standard error means the estimate is deterministic at this N.
    const double z = mc.std_error > 0.0 ? diff / mc.std_error : (diff > 1e-12 ? INFINITY : 0.0);
    worst_z = std::max(worst_z, z);
    pass = pass && z <= kStdErrors;
    detail += mc.std_error > 0.0
                  ? Fmt(" %s %.5f/%.5f(%.1f)", what.c_str(), mf, mc.mean, z)
                  : Fmt(" %s %.5f/%.5f(se 0, diff %.1e)", what.c_str(), mf, mc.mean, diff);
  };
  for (int tau = 0; tau < economy.num_types(); ++tau) {
    compare("payoff_" + economy.config().types[tau].name, cell->welfare->endogenous[tau],
            sim.payoff_endogenous[tau]);
  }
  for (int r = 0; r < economy.space().num_resources(); ++r) {
    const auto& nu = field.resources[r].nu;
    double mean_bid = 0.0;
    for (std::size_t a = 1; a < nu.size(); ++a) mean_bid += nu[a] * static_cast<double>(a - 1);
    const std::string name = economy.config().resources[r].name;
    compare("abstain_" + name, nu[0], sim.bid_distribution[r][0]);
    compare("mean_bid_" + name, mean_bid, sim.mean_bid[r]);
    compare("delay_" + name, field.resources[r].delay, sim.delay[r]);
  }
  const bool conserved = sim.conservation_checked && sim.conservation_violations == 0;
  Report(7, "mean field vs Monte Carlo", pass && conserved,
         Fmt("N=%d, %d days, %.0f s; mean-field/empirical(|z|):%s; max |z| %.2f (limit %.0f); "
             "conservation checked %s, violations %lld, saturation events %lld",
             kAgents, kDays, Seconds(start), detail.c_str(), worst_z, kStdErrors,
             sim.conservation_checked ? "yes" : "no",
             static_cast<long long>(sim.conservation_violations),
             static_cast<long long>(sim.saturation_events)));
}

void CertificateCriterion(const MatrixResult& result) {
  bool pass = result.cells.size() == 8;
  double worst_q = 0.0, worst_d = 0.0;
  const EconomyConfig base = CaseStudyConfig();
  const double tol_q = 1e-3 * base.nominal_payoff;
  for (const CellResult& cell : result.cells) {
    if (!cell.report || cell.status != CellStatus::kConverged) {
      pass = false;
      continue;
    }
    EconomyConfig cfg = base;
    cfg.redistribution = cell.cell.rule;
    cfg.exchange = cell.cell.exchange;
    const Economy economy(cfg);
    const Certificate cert = VerifyEquilibrium(economy, cell.report->social, tol_q, 1e-8);
    worst_q = std::max(worst_q, cert.q_gap);
    worst_d = std::max(worst_d, cert.stationarity_residual);
    pass = pass && cert.passed && cert.q_gap <= tol_q && cert.stationarity_residual <= 1e-8;
  }
  Report(8, "equilibrium certificate", pass,
         Fmt("%zu cells re-verified: max Q gap %.2e (tol %.0e), max stationarity residual %.2e "
             "(tol 1e-8)",
             result.cells.size(), worst_q, tol_q, worst_d));
}

void NashWelfareCriterion(const MatrixResult& result) {
  const BenchmarkPayoffs& bench = *result.benchmark;
  const std::vector<double> shares = TypeShares(CaseStudyConfig());
  double worst_shift = 0.0;
  bool ranking = true;
  std::vector<std::pair<std::string, std::vector<double>>> payoffs;
  for (const CellResult& cell : result.cells) {
    if (cell.welfare) payoffs.push_back({CellName(cell), cell.welfare->endogenous});
  }
  auto order = [&](double c) {
    std::vector<std::pair<double, std::string>> ranked;
    for (const auto& [name, p] : payoffs) {
      std::vector<double> scaled(p.size());
      for (std::size_t i = 0; i < p.size(); ++i) {
        scaled[i] = bench.endogenous[i] + c * (p[i] - bench.endogenous[i]);
      }
      ranked.push_back({NashWelfare(scaled, bench.endogenous, shares), name});
    }
    std::sort(ranked.begin(), ranked.end());
    return ranked;
  };
  const auto base = order(1.0);
  for (double c : {0.25, 0.5, 2.0, 10.0}) {
    const auto scaled = order(c);
    for (std::size_t i = 0; i < base.size(); ++i) {
      worst_shift = std::max(worst_shift, std::abs(scaled[i].first - base[i].first - std::log(c)));
      ranking = ranking && scaled[i].second == base[i].second;
    }
  }
  bool raised = false;
  try {
    std::vector<double> p = bench.endogenous;
    p[0] += 0.5;
    NashWelfare(p, bench.endogenous, shares);
  } catch (const NotParetoDominated&) {
    raised = true;
  }
  Report(9, "Nash welfare properties",
         worst_shift <= 1e-12 && ranking && raised && payoffs.size() == 8,
         Fmt("max |SW(c) - SW - log c| %.1e over c in {0.25, 0.5, 2, 10}; ranking invariant %s; "
             "zero gain raises NotParetoDominated %s",
             worst_shift, ranking ? "yes" : "no", raised ? "yes" : "no"));
}

}  // namespace
}  // namespace karma

int main() {
  using namespace karma;
  BenchmarkCriterion();
  KernelCriterion();
  MdpCriterion();
  StationaryCriterion();
  std::printf("solving the 8-cell matrix...\n");
  std::fflush(stdout);
  const MatrixResult result =
      RunMatrix(StandardMatrix(CaseStudyConfig(), SolverSettings{}), [](const CellResult& cell) {
        std::printf("  %s: %s (%.1f s)\n", CellName(cell).c_str(), ToString(cell.status).c_str(),
                    cell.seconds);
        std::fflush(stdout);
      });
  MatrixCriteria(result);
  MonteCarloCriterion(result);
  CertificateCriterion(result);
  NashWelfareCriterion(result);
  for (const auto& [id, line] : verdicts) std::printf("%s\n", line.c_str());
  std::printf("%d of 9 criteria failed\n", failures);
  return 0;
}

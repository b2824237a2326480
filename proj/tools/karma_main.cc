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

// karma: command line front end.
//
//   karma validate [--config FILE] [--emit]
//   karma solve    [--config FILE] [--rule R] [--exchange E] [--out DIR]
//   karma matrix   [--config FILE] [--out DIR]
//   karma simulate [--config FILE] [--policy solve.json] [--agents N] [--days D]
//   karma bench    [--config FILE] [--cross-check]
//
// Exit codes: 0 success, 2 invalid configuration or input, 3 non-convergence.

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "karma/config_io.h"
#include "karma/equilibrium.h"
#include "karma/export.h"
#include "karma/montecarlo.h"
#include "karma/scenario.h"
#include "karma/welfare.h"

namespace {

using karma::FormatFixed;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitNotConverged = 3;

struct CommonOptions {
  std::string config;
  std::string out = "out";
  std::uint64_t seed = 1;
  bool quiet = false;
};

struct SolverOptions {
  karma::SolverSettings settings;
  std::string schedule = "geometric";
  int trace_every = 100;
};

void AddSolverFlags(CLI::App* app, SolverOptions& opt) {
  karma::SolverSettings& s = opt.settings;
  app->add_option("--tol-q", s.tol_q_relative,
                  "Q-optimality tolerance as a fraction of the nominal payoff")
      ->capture_default_str();
  app->add_option("--tol-d", s.tol_stationarity, "stationarity tolerance (total variation)")
      ->capture_default_str();
  app->add_option("--tol-pi", s.tol_policy, "policy movement tolerance (max L1 per state)")
      ->capture_default_str();
  app->add_option("--max-iter", s.max_iterations, "outer iteration limit")->capture_default_str();
  app->add_option("--step-size", s.step_size, "damping eta")->capture_default_str();
  app->add_option("--step-size-min", s.step_size_min, "smallest eta after stall halving")
      ->capture_default_str();
  app->add_option("--stall-window", s.stall_window, "iterations per stall check")
      ->capture_default_str();
  app->add_option("--lambda-initial", s.lambda_initial, "initial softmax temperature")
      ->capture_default_str();
  app->add_option("--lambda-min", s.lambda_min, "temperature floor")->capture_default_str();
  app->add_option("--lambda-decay", s.lambda_decay_iterations, "temperature decay scale T")
      ->capture_default_str();
  app->add_option("--lambda-schedule", opt.schedule, "geometric or harmonic")
      ->check(CLI::IsMember({"geometric", "harmonic"}))
      ->capture_default_str();
  app->add_option("--trace-every", opt.trace_every,
                  "print a trace line every N iterations (0 disables)")
      ->capture_default_str();
}

void FinishSolverOptions(SolverOptions& opt) {
  opt.settings.lambda_schedule = opt.schedule == "harmonic" ? karma::LambdaSchedule::kHarmonic
                                                            : karma::LambdaSchedule::kGeometric;
}

karma::EconomyConfig LoadOrDefault(const std::string& path) {
  return path.empty() ? karma::CaseStudyConfig() : karma::LoadConfig(path);
}

karma::TraceCallback Printer(const SolverOptions& opt, const std::string& label) {
  if (opt.trace_every <= 0) return nullptr;
  return [every = opt.trace_every, label](const karma::IterationTrace& t) {
    if (t.iteration % every != 0) return;
    std::fprintf(stderr, "trace %s it=%d stationarity=%.3e movement=%.3e q_gap=%.3e lambda=%.3e "
                 "eta=%.3e\n",
                 label.c_str(), t.iteration, t.stationarity, t.policy_movement, t.q_gap,
                 t.lambda, t.step_size);
  };
}

void PrintWelfare(const karma::WelfareTable& table) {
  std::printf("%-10s %-8s %-14s", "rule", "exchange", "status");
  for (const char* mode : {"en", "ex"}) {
    for (const auto& n : table.type_names) std::printf(" %9s", (n + "_" + mode).c_str());
    std::printf(" %9s", (std::string("SW_") + mode).c_str());
  }
  std::printf("\n");
  for (const auto& row : table.rows) {
    std::printf("%-10s %-8s %-14s", row.rule.c_str(), row.exchange.c_str(), row.status.c_str());
    for (const auto& v : row.values) std::printf(" %9s", v ? FormatFixed(*v, 4).c_str() : "--");
    std::printf("\n");
  }
}

int RunValidate(const CommonOptions& common, bool emit) {
  const karma::EconomyConfig cfg = LoadOrDefault(common.config);
  const karma::ValidationReport report = karma::ValidateConfig(cfg);
  if (emit) karma::WriteFile(common.out + "/config.json", karma::ConfigToJson(cfg).dump(2) + "\n");
  if (report.ok()) {
    std::printf("config valid\n");
    return kExitOk;
  }
  for (const auto& v : report.violations) std::printf("invalid: %s\n", v.c_str());
  return kExitInvalid;
}

int RunSolve(const CommonOptions& common, SolverOptions& opt, const std::string& rule,
             const std::string& exchange) {
  FinishSolverOptions(opt);
  karma::EconomyConfig base = LoadOrDefault(common.config);
  if (!rule.empty()) base.redistribution = karma::ParseRedistribution(rule);
  karma::ScenarioCell cell{base.redistribution, "config", base.exchange};
  if (!exchange.empty()) {
    cell = karma::MakeCell(base.redistribution, exchange);
  }
  base.exchange = cell.exchange;
  const karma::Economy economy(base);
  karma::SolveReport report =
      karma::SolveSne(economy, opt.settings, std::nullopt, Printer(opt, "solve"));
  const karma::Certificate cert = karma::VerifyEquilibrium(
      economy, report.social, report.tol_q, opt.settings.tol_stationarity);
  const karma::BenchmarkPayoffs bench = karma::ComputeBenchmark(economy);
  const karma::WelfareReport welfare =
      karma::EvaluateWelfare(economy, report.social, report.field, bench);

  karma::MatrixResult bundle;
  for (const auto& t : base.types) bundle.type_names.push_back(t.name);
  for (const auto& r : base.resources) bundle.resource_names.push_back(r.name);
  bundle.benchmark = bench;
  karma::CellResult result;
  result.cell = cell;
  result.status = report.converged && cert.passed ? karma::CellStatus::kConverged
                                                  : karma::CellStatus::kNotConverged;
  result.certificate = cert;
  result.welfare = welfare;
  result.utilization = karma::Utilization(economy, report.social, report.field);
  bundle.cells.push_back(result);
  const karma::CellStatus status = result.status;

  const std::string dir = common.out + "/";
  karma::WriteFile(dir + "solve.json", karma::SolveToJson(base, report, cert, welfare).dump(1));
  const karma::WelfareTable table = karma::MakeWelfareTable(bundle);
  karma::WriteFile(dir + "welfare.csv", karma::FormatWelfareCsv(table));
  karma::WriteFile(dir + "utilization.csv",
                   karma::FormatUtilizationCsv(karma::MakeUtilizationRecords(bundle, base)));
  bundle.cells.back().report = std::move(report);
  karma::WriteFile(dir + "trace.csv", karma::FormatTraceCsv(bundle));

  const karma::SolveReport& r = *bundle.cells.back().report;
  if (!common.quiet) {
    PrintWelfare(table);
    std::printf("iterations=%d q_gap=%.3e stationarity=%.3e certificate=%s\n", r.iterations,
                cert.q_gap, cert.stationarity_residual, cert.passed ? "passed" : "failed");
  }
  return status == karma::CellStatus::kConverged ? kExitOk : kExitNotConverged;
}

int RunMatrixCommand(const CommonOptions& common, SolverOptions& opt) {
  FinishSolverOptions(opt);
  const karma::EconomyConfig base = LoadOrDefault(common.config);
  const karma::ValidationReport check = karma::ValidateConfig(base);
  if (!check.ok()) {
    for (const auto& v : check.violations) std::printf("invalid: %s\n", v.c_str());
    return kExitInvalid;
  }
  const karma::ScenarioMatrix matrix = karma::StandardMatrix(base, opt.settings);
  const karma::MatrixResult result =
      karma::RunMatrix(matrix, [&](const karma::CellResult& c) {
        if (common.quiet) return;
        std::fprintf(stderr, "cell %s/%s: %s (%.1f s)%s%s\n", karma::ToString(c.cell.rule).c_str(),
                     c.cell.exchange_name.c_str(), karma::ToString(c.status).c_str(), c.seconds,
                     c.error.empty() ? "" : " ", c.error.c_str());
      });
  const std::string dir = common.out + "/";
  const karma::WelfareTable table = karma::MakeWelfareTable(result);
  karma::WriteFile(dir + "welfare_table.csv", karma::FormatWelfareCsv(table));
  karma::WriteFile(dir + "utilization.csv",
                   karma::FormatUtilizationCsv(karma::MakeUtilizationRecords(result, base)));
  karma::WriteFile(dir + "traces.csv", karma::FormatTraceCsv(result));
  karma::WriteFile(dir + "matrix.json", karma::MatrixToJson(result).dump(1));
  if (!common.quiet) PrintWelfare(table);
  for (const auto& c : result.cells) {
    if (c.status != karma::CellStatus::kConverged) return kExitNotConverged;
  }
  return kExitOk;
}

int RunSimulate(const CommonOptions& common, SolverOptions& opt, const std::string& policy_path,
                karma::SimulationSettings sim) {
  FinishSolverOptions(opt);
  karma::EconomyConfig cfg;
  karma::SocialState social;
  if (!policy_path.empty()) {
    const json j = json::parse(karma::ReadFile(policy_path));
    cfg = j.contains("config") ? karma::ConfigFromJson(j.at("config"))
                               : LoadOrDefault(common.config);
    social = karma::SocialStateFromJson(j);
  } else {
    cfg = LoadOrDefault(common.config);
  }
  const karma::Economy economy(cfg);
  if (policy_path.empty()) {
    const karma::SolveReport report =
        karma::SolveSne(economy, opt.settings, std::nullopt, Printer(opt, "solve"));
    if (!report.converged) {
      std::fprintf(stderr, "solver did not converge; not simulating\n");
      return kExitNotConverged;
    }
    social = report.social;
  }
  sim.seed = common.seed;
  const karma::SimulationResult result = karma::RunSimulation(economy, social, sim);
  const karma::FieldQuantities field = karma::ComputeField(economy, social);

  std::vector<std::string> names;
  for (const auto& t : cfg.types) names.push_back(t.name);
  json out = karma::SimulationToJson(result, names);
  json predicted = json::array();
  for (int tau = 0; tau < economy.num_types(); ++tau) {
    predicted.push_back(karma::AveragePayoff(economy, tau, social, field,
                                             karma::InactivityMode::kEndogenous));
  }
  out["mean_field_payoff_endogenous"] = predicted;
  const std::string dir = common.out + "/";
  karma::WriteFile(dir + "simulation.json", out.dump(1));
  if (sim.record_days) karma::WriteFile(dir + "days.csv", karma::FormatDayRecordsCsv(result));
  if (!common.quiet) {
    std::printf("seed=%llu agents=%d days=%d\n",
                static_cast<unsigned long long>(result.seed), result.num_agents, result.days);
    for (int tau = 0; tau < economy.num_types(); ++tau) {
      std::printf("%s payoff_en simulated=%s se=%.4f mean_field=%s\n", names[tau].c_str(),
                  FormatFixed(result.payoff_endogenous[tau].mean, 4).c_str(),
                  result.payoff_endogenous[tau].std_error,
                  FormatFixed(predicted[tau].get<double>(), 4).c_str());
    }
    for (int r = 0; r < economy.space().num_resources(); ++r) {
      std::printf("%s delay simulated=%.4f se=%.4f mean_field=%.4f\n",
                  cfg.resources[r].name.c_str(), result.delay[r].mean, result.delay[r].std_error,
                  field.resources[r].delay);
    }
    std::printf("saturation_events=%lld conservation_violations=%lld\n",
                static_cast<long long>(result.saturation_events),
                static_cast<long long>(result.conservation_violations));
  }
  return kExitOk;
}

int RunBench(const CommonOptions& common, SolverOptions& opt, bool cross_check) {
  FinishSolverOptions(opt);
  const karma::EconomyConfig cfg = LoadOrDefault(common.config);
  const karma::Economy economy(cfg);
  const karma::BenchmarkPayoffs bench = karma::ComputeBenchmark(economy);
  json out = {{"payoff_endogenous", bench.endogenous},
              {"payoff_exogenous", bench.exogenous},
              {"delay", bench.delay},
              {"demand", bench.demand}};
  for (int tau = 0; tau < economy.num_types(); ++tau) {
    std::printf("%s benchmark payoff_en=%s payoff_ex=%s\n", cfg.types[tau].name.c_str(),
                FormatFixed(bench.endogenous[tau], 4).c_str(),
                FormatFixed(bench.exogenous[tau], 4).c_str());
  }
  for (int r = 0; r < economy.space().num_resources(); ++r) {
    std::printf("%s demand=%.4f delay=%.4f\n", cfg.resources[r].name.c_str(), bench.demand[r],
                bench.delay[r]);
  }
  int code = kExitOk;
  if (cross_check) {
    karma::EconomyConfig open = cfg;
    for (auto& r : open.resources) r.priority_capacity = 0.0;
    const karma::Economy uncontrolled(open);
    const karma::SolveReport report =
        karma::SolveSne(uncontrolled, opt.settings, std::nullopt, Printer(opt, "bench"));
    const karma::WelfareReport w =
        karma::EvaluateWelfare(uncontrolled, report.social, report.field, bench);
    json solved = {{"converged", report.converged},
                   {"payoff_endogenous", w.endogenous},
                   {"payoff_exogenous", w.exogenous}};
    json delays = json::array();
    for (const auto& rf : report.field.resources) delays.push_back(rf.delay);
    solved["delay"] = delays;
    out["solver_cross_check"] = solved;
    for (int tau = 0; tau < economy.num_types(); ++tau) {
      std::printf("%s solver payoff_en=%s payoff_ex=%s\n", cfg.types[tau].name.c_str(),
                  FormatFixed(w.endogenous[tau], 4).c_str(),
                  FormatFixed(w.exogenous[tau], 4).c_str());
    }
    if (!report.converged) code = kExitNotConverged;
  }
  karma::WriteFile(common.out + "/benchmark.json", out.dump(1));
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-karma economy equilibrium solver"};
  app.require_subcommand(1);
  CommonOptions common;
  SolverOptions solver;
  std::string rule, exchange, policy_path;
  bool cross_check = false;
  bool emit_config = false;
  karma::SimulationSettings sim;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config, "economy config (JSON); default: case study");
    sub->add_option("-o,--out", common.out, "output directory")->capture_default_str();
    sub->add_option("--seed", common.seed, "random seed")->capture_default_str();
    sub->add_flag("-q,--quiet", common.quiet, "no tables on stdout");
  };

  CLI::App* validate = app.add_subcommand("validate", "check a config");
  add_common(validate);
  validate->add_flag("--emit", emit_config, "write the resolved config to <out>/config.json");

  CLI::App* solve = app.add_subcommand("solve", "compute one stationary Nash equilibrium");
  add_common(solve);
  AddSolverFlags(solve, solver);
  solve->add_option("--rule", rule, "override redistribution: to_all or to_active")
      ->check(CLI::IsMember({"to_all", "to_active"}));
  solve->add_option("--exchange", exchange, "override exchange: none, unit, p_gt_h, p_lt_h")
      ->check(CLI::IsMember({"none", "unit", "p_gt_h", "p_lt_h"}));

  CLI::App* matrix = app.add_subcommand("matrix", "solve every rule x exchange design");
  add_common(matrix);
  AddSolverFlags(matrix, solver);

  CLI::App* simulate = app.add_subcommand("simulate", "finite-population simulation");
  add_common(simulate);
  AddSolverFlags(simulate, solver);
  simulate->add_option("--policy", policy_path, "solve.json with the social state to follow");
  simulate->add_option("--agents", sim.num_agents, "number of agents")->capture_default_str();
  simulate->add_option("--days", sim.days, "measured days")->capture_default_str();
  simulate->add_option("--burn-in", sim.burn_in_days, "days before measuring")
      ->capture_default_str();
  simulate->add_option("--batches", sim.batches, "batches for standard errors")
      ->capture_default_str();
  simulate->add_flag("--records", sim.record_days, "write per-step records to days.csv");

  CLI::App* bench = app.add_subcommand("bench", "uncontrolled benchmark payoffs");
  add_common(bench);
  AddSolverFlags(bench, solver);
  bench->add_flag("--cross-check", cross_check,
                  "also solve the economy without priority capacity");

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return RunValidate(common, emit_config);
    if (solve->parsed()) return RunSolve(common, solver, rule, exchange);
    if (matrix->parsed()) return RunMatrixCommand(common, solver);
    if (simulate->parsed()) return RunSimulate(common, solver, policy_path, sim);
    if (bench->parsed()) return RunBench(common, solver, cross_check);
  } catch (const karma::ConfigError& e) {
    std::fprintf(stderr, "invalid configuration: %s\n", e.what());
    return kExitInvalid;
  } catch (const karma::InvalidPolicy& e) {
    std::fprintf(stderr, "invalid policy: %s\n", e.what());
    return kExitInvalid;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kExitOk;
}

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

#include "karma/scenario.h"

#include <chrono>
#include <exception>

namespace karma {

ScenarioCell MakeCell(Redistribution rule, const std::string& exchange_name) {
  ScenarioCell cell{rule, exchange_name, {}};
  if (exchange_name == "none") {
    cell.exchange = ExchangeMatrix::NoExchange(2);
  } else if (exchange_name == "unit") {
    cell.exchange = ExchangeMatrix::Unit(2);
  } else if (exchange_name == "p_gt_h") {
    cell.exchange = ExchangeMatrix::Pairwise(3.0 / 2.0);
  } else if (exchange_name == "p_lt_h") {
    cell.exchange = ExchangeMatrix::Pairwise(2.0 / 3.0);
  } else {
    throw ConfigError("unknown exchange regime '" + exchange_name + "'");
  }
  return cell;
}

ScenarioMatrix StandardMatrix(const EconomyConfig& base, const SolverSettings& solver) {
  ScenarioMatrix matrix{base, {}, solver};
  for (Redistribution rule : {Redistribution::kToActive, Redistribution::kToAll}) {
    for (const char* name : {"none", "unit", "p_gt_h", "p_lt_h"}) {
      matrix.cells.push_back(MakeCell(rule, name));
    }
  }
  return matrix;
}

std::vector<UtilizationRow> Utilization(const Economy& economy, const SocialState& social,
                                        const FieldQuantities& field) {
  const StateSpace& space = economy.space();
  const EconomyConfig& cfg = economy.config();
  std::vector<UtilizationRow> rows;
  for (int r = 0; r < space.num_resources(); ++r) {
    const ResourceField& rf = field.resources[r];
    for (int tau = 0; tau < economy.num_types(); ++tau) {
      for (int u = 0; u < space.num_urgencies(); ++u) {
        UtilizationRow row{r, tau, u, 0.0, 0.0, 0.0};
        for (int k = 0; k < space.num_karma_vectors(); ++k) {
          const int x = space.Index(r, u, k);
          const double mass = cfg.types[tau].share * social.distribution[tau][x];
          if (mass == 0.0) continue;
          const double* pi = social.policy[tau].data() + space.ActionOffset(x);
          for (int a = 0; a < space.NumActions(x); ++a) {
            const Outcomes psi = rf.Psi(BidOfAction(a));
            row.priority += mass * pi[a] * psi.priority;
            row.general += mass * pi[a] * psi.general;
            row.none += mass * pi[a] * psi.none;
          }
        }
        rows.push_back(row);
      }
    }
  }
  return rows;
}

std::string ToString(CellStatus status) {
  switch (status) {
    case CellStatus::kConverged:
      return "converged";
    case CellStatus::kNotConverged:
      return "not_converged";
    case CellStatus::kFailed:
      return "failed";
  }
  return "failed";
}

CellResult RunCell(const EconomyConfig& base, const ScenarioCell& cell,
                   const SolverSettings& solver, const TraceCallback& on_iteration) {
  CellResult result;
  result.cell = cell;
  const auto start = std::chrono::steady_clock::now();
  try {
    EconomyConfig cfg = base;
    cfg.redistribution = cell.rule;
    cfg.exchange = cell.exchange;
    const Economy economy(cfg);
    SolveReport report = SolveSne(economy, solver, std::nullopt, on_iteration);
    const Certificate cert = VerifyEquilibrium(economy, report.social, report.tol_q,
                                               solver.tol_stationarity);
    result.welfare = EvaluateWelfare(economy, report.social, report.field,
                                     ComputeBenchmark(economy));
    result.utilization = Utilization(economy, report.social, report.field);
    result.status = report.converged && cert.passed ? CellStatus::kConverged
                                                    : CellStatus::kNotConverged;
    result.certificate = cert;
    result.report = std::move(report);
  } catch (const std::exception& e) {
    result.status = CellStatus::kFailed;
    result.error = e.what();
  }
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

MatrixResult RunMatrix(const ScenarioMatrix& matrix, const CellCallback& on_cell) {
  MatrixResult out;
  for (const auto& t : matrix.base.types) out.type_names.push_back(t.name);
  for (const auto& r : matrix.base.resources) out.resource_names.push_back(r.name);
  if (matrix.cells.empty()) return out;
  try {
    out.benchmark = ComputeBenchmark(Economy(matrix.base));
  } catch (const std::exception&) {
    // Reported per cell.
  }
  for (const ScenarioCell& cell : matrix.cells) {
    out.cells.push_back(RunCell(matrix.base, cell, matrix.solver));
    if (on_cell) on_cell(out.cells.back());
  }
  return out;
}

}  // namespace karma

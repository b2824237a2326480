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

// Design matrix runner: one equilibrium solve per (redistribution rule,
// exchange regime) cell, plus the uncontrolled benchmark.

#ifndef KARMA_SCENARIO_H_
#define KARMA_SCENARIO_H_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "karma/equilibrium.h"
#include "karma/model.h"
#include "karma/welfare.h"

namespace karma {

struct ScenarioCell {
  Redistribution rule = Redistribution::kToAll;
  std::string exchange_name;  // "none", "unit", "p_gt_h", "p_lt_h" or custom
  ExchangeMatrix exchange;
};

struct ScenarioMatrix {
  EconomyConfig base;
  std::vector<ScenarioCell> cells;
  SolverSettings solver;
};

// Exchange regimes of the two-resource commute study.
ScenarioCell MakeCell(Redistribution rule, const std::string& exchange_name);

// Both rules crossed with the four named regimes (to-active first).
ScenarioMatrix StandardMatrix(const EconomyConfig& base, const SolverSettings& solver);

// Share of each (type, urgency) population receiving each outcome at a
// resource; the rows of one resource sum to 1.
struct UtilizationRow {
  int resource = 0;
  int type = 0;
  int urgency = 0;
  double priority = 0.0;
  double general = 0.0;
  double none = 0.0;
};
std::vector<UtilizationRow> Utilization(const Economy& economy, const SocialState& social,
                                        const FieldQuantities& field);

enum class CellStatus { kConverged, kNotConverged, kFailed };
std::string ToString(CellStatus status);

struct CellResult {
  ScenarioCell cell;
  CellStatus status = CellStatus::kFailed;
  std::string error;                 // for kFailed
  std::optional<SolveReport> report; // absent for kFailed
  std::optional<Certificate> certificate;
  std::optional<WelfareReport> welfare;
  std::vector<UtilizationRow> utilization;
  double seconds = 0.0;
};

struct MatrixResult {
  std::vector<std::string> type_names;
  std::vector<std::string> resource_names;
  std::optional<BenchmarkPayoffs> benchmark;  // absent when the base is invalid
  std::vector<CellResult> cells;
};

// Solves one cell; configuration and solver errors are captured in the
// result instead of thrown.
CellResult RunCell(const EconomyConfig& base, const ScenarioCell& cell,
                   const SolverSettings& solver, const TraceCallback& on_iteration = nullptr);

using CellCallback = std::function<void(const CellResult&)>;
MatrixResult RunMatrix(const ScenarioMatrix& matrix, const CellCallback& on_cell = nullptr);

}  // namespace karma

#endif  // KARMA_SCENARIO_H_

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

// CSV and JSON outputs. Schemas are documented in docs/output_schema.md.

#ifndef KARMA_EXPORT_H_
#define KARMA_EXPORT_H_

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "karma/equilibrium.h"
#include "karma/montecarlo.h"
#include "karma/scenario.h"

namespace karma {

class ExportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Welfare table: one row per design plus the benchmark. Values carry four
// decimals; missing values (social welfare of the benchmark, failed cells)
// are written as "--".
struct WelfareRow {
  std::string rule;      // "benchmark", "to_active", "to_all"
  std::string exchange;  // empty for the benchmark
  std::string status;
  // Endogenous payoff per type, endogenous welfare, then the same for the
  // exogenous mode.
  std::vector<std::optional<double>> values;
  bool operator==(const WelfareRow&) const = default;
};
struct WelfareTable {
  std::vector<std::string> type_names;
  std::vector<WelfareRow> rows;
  bool operator==(const WelfareTable&) const = default;
};
WelfareTable MakeWelfareTable(const MatrixResult& result);
std::string FormatWelfareCsv(const WelfareTable& table);
WelfareTable ParseWelfareCsv(const std::string& text);

struct UtilizationRecord {
  std::string rule;
  std::string exchange;
  std::string resource;
  std::string type;
  double urgency = 0.0;
  double priority = 0.0;
  double general = 0.0;
  double none = 0.0;
  bool operator==(const UtilizationRecord&) const = default;
};
std::vector<UtilizationRecord> MakeUtilizationRecords(const MatrixResult& result,
                                                      const EconomyConfig& base);
std::string FormatUtilizationCsv(const std::vector<UtilizationRecord>& records);
std::vector<UtilizationRecord> ParseUtilizationCsv(const std::string& text);

// Convergence trace of every cell.
std::string FormatTraceCsv(const MatrixResult& result);

// Summary of every cell (status, residuals, certificate, welfare, field).
nlohmann::json MatrixToJson(const MatrixResult& result);

// Solve output: config, settings, diagnostics and the full social state;
// SocialStateFromJson reads back the social state bit-exactly.
nlohmann::json SolveToJson(const EconomyConfig& cfg, const SolveReport& report,
                           const Certificate& certificate, const WelfareReport& welfare);
SocialState SocialStateFromJson(const nlohmann::json& j);

nlohmann::json SimulationToJson(const SimulationResult& result,
                                const std::vector<std::string>& type_names);
// Per-step records with the seed in a leading comment line.
std::string FormatDayRecordsCsv(const SimulationResult& result);

std::string FormatFixed(double value, int decimals);

// Writes `contents` to `path`, creating parent directories.
void WriteFile(const std::string& path, const std::string& contents);
std::string ReadFile(const std::string& path);

}  // namespace karma

#endif  // KARMA_EXPORT_H_

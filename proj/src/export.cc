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

#include "karma/export.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "karma/config_io.h"

namespace karma {
namespace {

using nlohmann::json;

constexpr const char* kMissing = "--";

std::vector<std::string> SplitLine(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::vector<std::string> Lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

void CheckField(const std::string& s) {
  if (s.find_first_of(",\n\r") != std::string::npos) {
    throw ExportError("name '" + s + "' cannot be written to CSV");
  }
}

double ParseNumber(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw ExportError("not a number: '" + s + "'");
  return v;
}

std::string Scientific(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6e", value);
  return buf;
}

std::string CellRule(const ScenarioCell& cell) { return ToString(cell.rule); }

json OptionalNumber(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string FormatFixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  std::string s = buf;
  // Avoid "-0.0000".
  if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
  return s;
}

WelfareTable MakeWelfareTable(const MatrixResult& result) {
  WelfareTable table;
  table.type_names = result.type_names;
  const std::size_t n_types = result.type_names.size();
  if (result.benchmark) {
    WelfareRow row{"benchmark", "", "exact", {}};
    for (std::size_t t = 0; t < n_types; ++t) row.values.push_back(result.benchmark->endogenous[t]);
    row.values.push_back(std::nullopt);
    for (std::size_t t = 0; t < n_types; ++t) row.values.push_back(result.benchmark->exogenous[t]);
    row.values.push_back(std::nullopt);
    table.rows.push_back(std::move(row));
  }
  for (const CellResult& cell : result.cells) {
    WelfareRow row{CellRule(cell.cell), cell.cell.exchange_name, ToString(cell.status), {}};
    if (cell.welfare) {
      const WelfareReport& w = *cell.welfare;
      for (double v : w.endogenous) row.values.push_back(v);
      row.values.push_back(w.social_endogenous);
      for (double v : w.exogenous) row.values.push_back(v);
      row.values.push_back(w.social_exogenous);
    } else {
      row.values.assign(2 * n_types + 2, std::nullopt);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string FormatWelfareCsv(const WelfareTable& table) {
  std::ostringstream out;
  out << "rule,exchange,status";
  for (const char* mode : {"en", "ex"}) {
    for (const std::string& name : table.type_names) {
      CheckField(name);
      out << ",payoff_" << mode << "_" << name;
    }
    out << ",sw_" << mode;
  }
  out << "\n";
  for (const WelfareRow& row : table.rows) {
    CheckField(row.rule);
    CheckField(row.exchange);
    CheckField(row.status);
    out << row.rule << "," << row.exchange << "," << row.status;
    for (const auto& v : row.values) out << "," << (v ? FormatFixed(*v, 4) : kMissing);
    out << "\n";
  }
  return out.str();
}

WelfareTable ParseWelfareCsv(const std::string& text) {
  const std::vector<std::string> lines = Lines(text);
  if (lines.empty()) throw ExportError("welfare table is empty");
  const std::vector<std::string> header = SplitLine(lines[0]);
  if (header.size() < 5 || header[0] != "rule" || header[1] != "exchange" ||
      header[2] != "status" || (header.size() - 5) % 2 != 0) {
    throw ExportError("unexpected welfare table header");
  }
  WelfareTable table;
  const std::size_t n_types = (header.size() - 5) / 2;
  const std::string prefix = "payoff_en_";
  for (std::size_t t = 0; t < n_types; ++t) {
    const std::string& h = header[3 + t];
    if (h.rfind(prefix, 0) != 0) throw ExportError("unexpected column '" + h + "'");
    table.type_names.push_back(h.substr(prefix.size()));
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::vector<std::string> f = SplitLine(lines[i]);
    if (f.size() != header.size()) {
      throw ExportError("row " + std::to_string(i) + " has " + std::to_string(f.size()) +
                        " fields, expected " + std::to_string(header.size()));
    }
    WelfareRow row{f[0], f[1], f[2], {}};
    for (std::size_t c = 3; c < f.size(); ++c) {
      if (f[c] == kMissing) {
        row.values.push_back(std::nullopt);
      } else {
        row.values.push_back(ParseNumber(f[c]));
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::vector<UtilizationRecord> MakeUtilizationRecords(const MatrixResult& result,
                                                      const EconomyConfig& base) {
  std::vector<UtilizationRecord> records;
  for (const CellResult& cell : result.cells) {
    for (const UtilizationRow& row : cell.utilization) {
      records.push_back({CellRule(cell.cell), cell.cell.exchange_name,
                         base.resources[row.resource].name, base.types[row.type].name,
                         base.urgencies[row.urgency], row.priority, row.general, row.none});
    }
  }
  return records;
}

std::string FormatUtilizationCsv(const std::vector<UtilizationRecord>& records) {
  std::ostringstream out;
  out << "rule,exchange,resource,type,urgency,priority,general,none\n";
  for (const UtilizationRecord& r : records) {
    for (const std::string* s : {&r.rule, &r.exchange, &r.resource, &r.type}) CheckField(*s);
    char urgency[32];
    std::snprintf(urgency, sizeof(urgency), "%g", r.urgency);
    out << r.rule << "," << r.exchange << "," << r.resource << "," << r.type << "," << urgency
        << "," << FormatFixed(r.priority, 6) << "," << FormatFixed(r.general, 6) << ","
        << FormatFixed(r.none, 6) << "\n";
  }
  return out.str();
}

std::vector<UtilizationRecord> ParseUtilizationCsv(const std::string& text) {
  const std::vector<std::string> lines = Lines(text);
  if (lines.empty() || lines[0] != "rule,exchange,resource,type,urgency,priority,general,none") {
    throw ExportError("unexpected utilization header");
  }
  std::vector<UtilizationRecord> records;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::vector<std::string> f = SplitLine(lines[i]);
    if (f.size() != 8) throw ExportError("utilization row " + std::to_string(i) + " malformed");
    records.push_back({f[0], f[1], f[2], f[3], ParseNumber(f[4]), ParseNumber(f[5]),
                       ParseNumber(f[6]), ParseNumber(f[7])});
  }
  return records;
}

std::string FormatTraceCsv(const MatrixResult& result) {
  std::ostringstream out;
  out << "rule,exchange,iteration,stationarity,policy_movement,q_gap,lambda,step_size";
  for (const std::string& name : result.type_names) out << ",payoff_en_" << name;
  out << "\n";
  for (const CellResult& cell : result.cells) {
    if (!cell.report) continue;
    for (const IterationTrace& t : cell.report->trace) {
      out << CellRule(cell.cell) << "," << cell.cell.exchange_name << "," << t.iteration << ","
          << Scientific(t.stationarity) << ","
          << (std::isfinite(t.policy_movement) ? Scientific(t.policy_movement) : "inf") << ","
          << Scientific(t.q_gap) << "," << Scientific(t.lambda) << ","
          << Scientific(t.step_size);
      for (double w : t.welfare) out << "," << FormatFixed(w, 6);
      out << "\n";
    }
  }
  return out.str();
}

namespace {

json FieldToJson(const FieldQuantities& field) {
  json out = json::array();
  for (const ResourceField& rf : field.resources) {
    out.push_back({{"delay", rf.delay},
                   {"avg_payment", rf.avg_payment},
                   {"active_payment", rf.active_payment},
                   {"gain", rf.gain},
                   {"saturation_mass", rf.saturation_mass},
                   {"unplaced_mass", rf.unplaced_mass},
                   {"bid_distribution", rf.nu},
                   {"priority_prob", rf.priority_prob}});
  }
  return out;
}

json WelfareToJson(const WelfareReport& w) {
  return {{"payoff_endogenous", w.endogenous},
          {"payoff_exogenous", w.exogenous},
          {"sw_endogenous", OptionalNumber(w.social_endogenous)},
          {"sw_exogenous", OptionalNumber(w.social_exogenous)}};
}

json CertificateToJson(const Certificate& c) {
  return {{"q_gap", c.q_gap},
          {"stationarity_residual", c.stationarity_residual},
          {"value_residual", c.value_residual},
          {"passed", c.passed}};
}

json ReportSummary(const SolveReport& r) {
  return {{"converged", r.converged},
          {"iterations", r.iterations},
          {"stationarity_residual", r.stationarity_residual},
          {"policy_movement", r.policy_movement},
          {"q_gap", r.q_gap},
          {"tol_q", r.tol_q},
          {"karma_mean", r.karma_mean},
          {"saturation_mass", r.saturation_mass}};
}

json EstimateToJson(const Estimate& e) { return {{"mean", e.mean}, {"std_error", e.std_error}}; }

}  // namespace

json MatrixToJson(const MatrixResult& result) {
  json out;
  out["types"] = result.type_names;
  out["resources"] = result.resource_names;
  if (result.benchmark) {
    out["benchmark"] = {{"payoff_endogenous", result.benchmark->endogenous},
                        {"payoff_exogenous", result.benchmark->exogenous},
                        {"delay", result.benchmark->delay},
                        {"demand", result.benchmark->demand}};
  } else {
    out["benchmark"] = nullptr;
  }
  out["cells"] = json::array();
  for (const CellResult& cell : result.cells) {
    json c = {{"rule", CellRule(cell.cell)},
              {"exchange", cell.cell.exchange_name},
              {"status", ToString(cell.status)},
              {"seconds", cell.seconds}};
    if (!cell.error.empty()) c["error"] = cell.error;
    if (cell.report) {
      c["solver"] = ReportSummary(*cell.report);
      c["field"] = FieldToJson(cell.report->field);
    }
    if (cell.certificate) c["certificate"] = CertificateToJson(*cell.certificate);
    if (cell.welfare) c["welfare"] = WelfareToJson(*cell.welfare);
    out["cells"].push_back(std::move(c));
  }
  return out;
}

json SolveToJson(const EconomyConfig& cfg, const SolveReport& report,
                 const Certificate& certificate, const WelfareReport& welfare) {
  return {{"config", ConfigToJson(cfg)},
          {"solver", ReportSummary(report)},
          {"certificate", CertificateToJson(certificate)},
          {"welfare", WelfareToJson(welfare)},
          {"field", FieldToJson(report.field)},
          {"social_state",
           {{"distribution", report.social.distribution}, {"policy", report.social.policy}}}};
}

SocialState SocialStateFromJson(const json& j) {
  const json& s = j.contains("social_state") ? j.at("social_state") : j;
  SocialState social;
  try {
    social.distribution = s.at("distribution").get<std::vector<std::vector<double>>>();
    social.policy = s.at("policy").get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw ExportError(std::string("malformed social state: ") + e.what());
  }
  return social;
}

json SimulationToJson(const SimulationResult& r, const std::vector<std::string>& type_names) {
  json out = {{"seed", r.seed},
              {"num_agents", r.num_agents},
              {"days", r.days},
              {"agents_per_type", r.agents_per_type},
              {"priority_limit", r.priority_limit},
              {"max_priority_grants", r.max_priority_grants},
              {"capped_units", r.capped_units},
              {"saturation_events", r.saturation_events},
              {"conservation_checked", r.conservation_checked},
              {"conservation_violations", r.conservation_violations}};
  json types = json::array();
  for (std::size_t t = 0; t < r.payoff_endogenous.size(); ++t) {
    types.push_back({{"name", t < type_names.size() ? type_names[t] : std::to_string(t)},
                     {"payoff_endogenous", EstimateToJson(r.payoff_endogenous[t])},
                     {"payoff_exogenous", EstimateToJson(r.payoff_exogenous[t])}});
  }
  out["types"] = std::move(types);
  json resources = json::array();
  for (std::size_t q = 0; q < r.delay.size(); ++q) {
    json nu = json::array();
    for (const Estimate& e : r.bid_distribution[q]) nu.push_back(EstimateToJson(e));
    resources.push_back({{"delay", EstimateToJson(r.delay[q])},
                         {"mean_bid", EstimateToJson(r.mean_bid[q])},
                         {"bid_distribution", std::move(nu)}});
  }
  out["resources"] = std::move(resources);
  return out;
}

std::string FormatDayRecordsCsv(const SimulationResult& result) {
  std::ostringstream out;
  out << "# seed=" << result.seed << " agents=" << result.num_agents << " days=" << result.days
      << "\n";
  out << "day,resource,bidders,priority,general,delay,paid,redistributed,capped,unplaced";
  const std::size_t n_r = result.delay.size();
  for (std::size_t q = 0; q < n_r; ++q) out << ",karma_total_" << q;
  out << "\n";
  for (const DayRecord& d : result.records) {
    out << d.day << "," << d.resource << "," << d.bidders << "," << d.priority << ","
        << d.general << "," << FormatFixed(d.delay, 6) << "," << d.paid << ","
        << d.redistributed << "," << d.capped << "," << d.unplaced;
    for (std::int64_t k : d.karma_total) out << "," << k;
    out << "\n";
  }
  return out.str();
}

void WriteFile(const std::string& path, const std::string& contents) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  if (ec) throw ExportError("cannot create directory for " + path + ": " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ExportError("cannot open " + path + " for writing");
  out << contents;
  if (!out) throw ExportError("failed writing " + path);
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ExportError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace karma

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

#include "karma/config_io.h"

#include <fstream>

namespace karma {
namespace {

using nlohmann::json;

// Exchange rates may be written as numbers or as "p/q" fraction strings.
double ParseRate(const json& value) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) {
    const std::string text = value.get<std::string>();
    const auto slash = text.find('/');
    try {
      if (slash == std::string::npos) return std::stod(text);
      return std::stod(text.substr(0, slash)) / std::stod(text.substr(slash + 1));
    } catch (const std::exception&) {
      throw ConfigError("cannot parse exchange rate '" + text + "'");
    }
  }
  throw ConfigError("exchange rate must be a number or a fraction string");
}

template <typename T>
T Required(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

EconomyConfig ConfigFromJson(const json& j) {
  EconomyConfig cfg;
  for (const json& r : Required<json>(j, "resources")) {
    ResourceSpec res;
    res.name = r.value("name", std::string("r") + std::to_string(cfg.resources.size()));
    res.total_capacity = Required<double>(r, "total_capacity");
    res.priority_capacity = Required<double>(r, "priority_capacity");
    res.karma_max = Required<int>(r, "karma_max");
    res.karma_mean = Required<int>(r, "karma_mean");
    res.discount = Required<double>(r, "discount");
    cfg.resources.push_back(res);
  }
  cfg.urgencies = Required<std::vector<double>>(j, "urgencies");
  const int n_pairs = cfg.num_pairs();
  for (const json& t : Required<json>(j, "types")) {
    UserTypeSpec type;
    type.name = t.value("name", std::string("t") + std::to_string(cfg.types.size()));
    type.share = Required<double>(t, "share");
    const auto rows = Required<std::vector<std::vector<double>>>(t, "chain");
    if (static_cast<int>(rows.size()) != n_pairs) {
      throw ConfigError("type " + type.name + ": chain must have n_r * n_u rows");
    }
    for (const auto& row : rows) {
      if (static_cast<int>(row.size()) != n_pairs) {
        throw ConfigError("type " + type.name + ": chain rows must have n_r * n_u entries");
      }
      type.chain.insert(type.chain.end(), row.begin(), row.end());
    }
    cfg.types.push_back(std::move(type));
  }
  const int n_r = cfg.num_resources();
  cfg.exchange = ExchangeMatrix(n_r);
  if (j.contains("exchange")) {
    const json& chi = j.at("exchange");
    if (!chi.is_array() || static_cast<int>(chi.size()) != n_r) {
      throw ConfigError("exchange must be an n_r x n_r matrix");
    }
    for (int r = 0; r < n_r; ++r) {
      if (!chi[r].is_array() || static_cast<int>(chi[r].size()) != n_r) {
        throw ConfigError("exchange must be an n_r x n_r matrix");
      }
      for (int q = 0; q < n_r; ++q) cfg.exchange.Set(r, q, ParseRate(chi[r][q]));
    }
  }
  cfg.redistribution = ParseRedistribution(Required<std::string>(j, "redistribution"));
  cfg.nominal_payoff = Required<double>(j, "nominal_payoff");
  cfg.epsilon = Required<double>(j, "epsilon");
  cfg.max_states_per_type = j.value("max_states_per_type", cfg.max_states_per_type);
  return cfg;
}

json ConfigToJson(const EconomyConfig& cfg) {
  json j;
  j["resources"] = json::array();
  for (const ResourceSpec& res : cfg.resources) {
    j["resources"].push_back({{"name", res.name},
                              {"total_capacity", res.total_capacity},
                              {"priority_capacity", res.priority_capacity},
                              {"karma_max", res.karma_max},
                              {"karma_mean", res.karma_mean},
                              {"discount", res.discount}});
  }
  j["urgencies"] = cfg.urgencies;
  j["types"] = json::array();
  const int n = cfg.num_pairs();
  for (const UserTypeSpec& type : cfg.types) {
    json rows = json::array();
    for (int i = 0; i < n; ++i) {
      rows.push_back(std::vector<double>(type.chain.begin() + i * n,
                                         type.chain.begin() + (i + 1) * n));
    }
    j["types"].push_back({{"name", type.name}, {"share", type.share}, {"chain", rows}});
  }
  json chi = json::array();
  for (int r = 0; r < cfg.exchange.size(); ++r) {
    json row = json::array();
    for (int q = 0; q < cfg.exchange.size(); ++q) row.push_back(cfg.exchange(r, q));
    chi.push_back(row);
  }
  j["exchange"] = chi;
  j["redistribution"] = ToString(cfg.redistribution);
  j["nominal_payoff"] = cfg.nominal_payoff;
  j["epsilon"] = cfg.epsilon;
  j["max_states_per_type"] = cfg.max_states_per_type;
  return j;
}

EconomyConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return ConfigFromJson(j);
}

void SaveConfig(const EconomyConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << ConfigToJson(cfg).dump(2) << "\n";
}

EconomyConfig CaseStudyConfig(Redistribution rule, ExchangeMatrix exchange) {
  EconomyConfig cfg;
  cfg.resources = {
      {"H", 0.5, 0.1875, 24, 8, 1.0},
      {"P", 0.5, 0.2, 24, 8, 0.98},
  };
  cfg.urgencies = {0.0, 1.0, 9.0};
  cfg.exchange = std::move(exchange);
  cfg.redistribution = rule;
  cfg.nominal_payoff = 2.0;
  cfg.epsilon = 1e-4;

  // Pair order: (H,0) (H,1) (H,9) (P,0) (P,1) (P,9). One urgency draw per
  // day (P[u=1] = 0.75, P[u=9] = 0.25) that carries over from H to P.
  UserTypeSpec suburb{"S", 0.5, std::vector<double>(36, 0.0)};
  UserTypeSpec city{"C", 0.5, std::vector<double>(36, 0.0)};
  auto set = [](UserTypeSpec& t, int from, int to, double p) { t.chain[from * 6 + to] = p; };
  for (UserTypeSpec* t : {&suburb, &city}) {
    set(*t, 1, 4, 1.0);
    set(*t, 2, 5, 1.0);
    set(*t, 0, 4, 0.75);
    set(*t, 0, 5, 0.25);
  }
  for (int from = 3; from < 6; ++from) {
    set(suburb, from, 1, 0.75);
    set(suburb, from, 2, 0.25);
    set(city, from, 0, 0.5);
    set(city, from, 1, 0.375);
    set(city, from, 2, 0.125);
  }
  cfg.types = {suburb, city};
  return cfg;
}

}  // namespace karma

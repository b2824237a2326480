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

// JSON (de)serialization of EconomyConfig. The schema is documented in
// docs/config_schema.md.

#ifndef KARMA_CONFIG_IO_H_
#define KARMA_CONFIG_IO_H_

#include <string>

#include "json.hpp"
#include "karma/model.h"

namespace karma {

EconomyConfig ConfigFromJson(const nlohmann::json& j);
nlohmann::json ConfigToJson(const EconomyConfig& cfg);

EconomyConfig LoadConfig(const std::string& path);
void SaveConfig(const EconomyConfig& cfg, const std::string& path);

// Highway/parking commute economy: two resources (H, P), urgencies {0, 1, 9},
// a suburb type that needs both resources daily and a city type that needs
// the highway on half of the days.
EconomyConfig CaseStudyConfig(
    Redistribution rule = Redistribution::kToAll,
    ExchangeMatrix exchange = ExchangeMatrix::Unit(2));

}  // namespace karma

#endif  // KARMA_CONFIG_IO_H_

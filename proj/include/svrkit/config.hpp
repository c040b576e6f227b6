/*
 * svrkit: slice-to-volume reconstruction toolkit
 *
 * Copyright 2026 The svrkit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "svrkit/simulate.hpp"
#include "svrkit/solver.hpp"

namespace svr {

// Flat key-value job document shared by every subcommand. Each key has a default
// and a type taken from that default; unknown keys and mistyped values are
// rejected. Keys use the long-flag spelling without the leading dashes.
class JobConfig {
 public:
  struct Key {
    std::string name;
    nlohmann::json default_value;
    std::string help;
  };

  JobConfig();

  static const std::vector<Key>& keys();

  void set(const std::string& key, const nlohmann::json& value);
  const nlohmann::json& get(const std::string& key) const;
  // Applies every member of a JSON object.
  void merge(const nlohmann::json& doc);
  void merge_file(const std::string& path);

  const nlohmann::json& values() const { return values_; }

  SimConfig sim() const;
  ReconConfig recon() const;

 private:
  nlohmann::json values_;
};

}  // namespace svr

// Copyright 2026 The revsum Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef REVSUM_RUN_CONFIG_HPP_
#define REVSUM_RUN_CONFIG_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "revsum/trainer.hpp"

namespace revsum {

// INI text with [model], [contrastive], [train] and [ablation] sections.
// `[train] preset` selects the defaults the remaining keys override; then
// every "section.key=value" override is applied in order. Unknown sections or
// keys and malformed values throw InputError.
TrainConfig parse_train_config(const std::string& text,
                               const std::vector<std::string>& overrides = {});
TrainConfig load_train_config(const std::filesystem::path& path,
                              const std::vector<std::string>& overrides = {});

// Canonical text form; parse_train_config(to_ini(c)) == c.
std::string to_ini(const TrainConfig& config);

// FNV-1a of the canonical text with the step budget and checkpoint cadence
// cleared, so longer runs of the same setup share a run directory.
std::string train_config_hash(const TrainConfig& config);

}  // namespace revsum

#endif  // REVSUM_RUN_CONFIG_HPP_

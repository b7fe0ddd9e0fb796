// Copyright 2026 The mcopi Authors.
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

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mcopi/aggregation.hpp"
#include "mcopi/opi.hpp"

namespace mcopi {

// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// Shortest decimal representation that round-trips.
std::string format_number(double x);

// t,state,value rows for every recorded history entry.
std::string history_csv(const std::vector<HistoryEntry>& history);

// state,visit_freq,q_exact,mean_estimate,stderr,j_exact
std::string diagnostics_csv(const std::vector<DiagnosticsRow>& rows);

// cluster,theta,jstar_cluster,abs_error
std::string aggregation_csv(const std::vector<double>& theta,
                            const std::vector<double>& jstar_cluster);

// Single-run summary: trial,mode,schedule,seed,iterations_to_optimal,final_sup_error
std::string run_summary_csv(const RunResult& run, const OpiConfig& config);

// state,value rows.
std::string values_csv(const ValueFunction& J);

}  // namespace mcopi

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

#include "mcopi/io.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "mcopi/errors.hpp"

namespace mcopi {

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot open {} for writing", tmp.string()));
    out << content;
    out.flush();
    if (!out) throw Error(fmt::format("write to {} failed", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error(fmt::format("cannot move {} to {}: {}", tmp.string(), path.string(),
                            ec.message()));
  }
}

std::string format_number(double x) {
  if (x == 0.0) return "0";  // also folds -0
  return fmt::format("{}", x);
}

std::string history_csv(const std::vector<HistoryEntry>& history) {
  std::string out = "t,state,value\n";
  for (const auto& entry : history) {
    for (std::size_t s = 0; s < entry.J.size(); ++s) {
      out += fmt::format("{},{},{}\n", entry.t, s, format_number(entry.J[s]));
    }
  }
  return out;
}

std::string diagnostics_csv(const std::vector<DiagnosticsRow>& rows) {
  std::string out = "state,visit_freq,q_exact,mean_estimate,stderr,j_exact\n";
  for (const auto& row : rows) {
    out += fmt::format("{},{},{},{},{},{}\n", row.state, format_number(row.visit_freq),
                       format_number(row.q_exact), format_number(row.mean_estimate),
                       format_number(row.standard_error), format_number(row.j_exact));
  }
  return out;
}

std::string aggregation_csv(const std::vector<double>& theta,
                            const std::vector<double>& jstar_cluster) {
  std::string out = "cluster,theta,jstar_cluster,abs_error\n";
  for (std::size_t c = 0; c < theta.size(); ++c) {
    out += fmt::format("{},{},{},{}\n", c, format_number(theta[c]),
                       format_number(jstar_cluster[c]),
                       format_number(std::fabs(theta[c] - jstar_cluster[c])));
  }
  return out;
}

std::string run_summary_csv(const RunResult& run, const OpiConfig& config) {
  std::string out = "trial,mode,schedule,seed,iterations_to_optimal,final_sup_error\n";
  out += fmt::format(
      "0,{},{},{},{},{}\n", to_string(config.update_mode), config.schedule.describe(),
      config.seed, run.iterations_to_optimal ? fmt::format("{}", *run.iterations_to_optimal) : "",
      run.final_sup_error ? format_number(*run.final_sup_error) : "");
  return out;
}

std::string values_csv(const ValueFunction& J) {
  std::string out = "state,value\n";
  for (std::size_t s = 0; s < J.size(); ++s) {
    out += fmt::format("{},{}\n", s, format_number(J[s]));
  }
  return out;
}

}  // namespace mcopi

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

#include <string>

namespace mcopi {

// Whether the step index is the global iteration t or the number of earlier
// updates n_t(i) of the component being updated.
enum class StepMode { kTimeBased, kVisitBased };

// beta(k) = c / (k+1)^rho with c in (0,1] and rho in (0.5,1]. Harmonic is the
// rho = 1 member and is evaluated as c / (k+1) without pow().
// Both families are nonincreasing, sum to infinity and are square-summable.
class StepSchedule {
 public:
  static StepSchedule harmonic(double c = 1.0, StepMode mode = StepMode::kVisitBased);
  static StepSchedule power_law(double c, double rho,
                                StepMode mode = StepMode::kVisitBased);

  // Parses "harmonic:C" or "power:C,R" (mode is set separately).
  static StepSchedule parse(const std::string& spec, StepMode mode);

  double beta(long k) const;
  // gamma_t(i).
  double step(long t, long visits) const {
    return beta(mode_ == StepMode::kTimeBased ? t : visits);
  }

  StepMode mode() const { return mode_; }
  bool is_harmonic() const { return harmonic_; }
  double scale() const { return c_; }
  double exponent() const { return rho_; }
  // e.g. "visit:harmonic:1" or "time:power:0.5:0.7" (comma-free for CSV).
  std::string describe() const;

 private:
  StepSchedule(double c, double rho, bool harmonic, StepMode mode);

  double c_;
  double rho_;
  bool harmonic_;
  StepMode mode_;
};

}  // namespace mcopi

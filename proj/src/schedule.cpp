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

#include "mcopi/schedule.hpp"

#include <cmath>
#include <cstdlib>

#include <fmt/format.h>

#include "mcopi/errors.hpp"

namespace mcopi {
namespace {

double parse_number(const std::string& text, const std::string& spec) {
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) {
    throw ParseError(fmt::format("step schedule \"{}\": bad number \"{}\"", spec, text));
  }
  return value;
}

}  // namespace

StepSchedule::StepSchedule(double c, double rho, bool harmonic, StepMode mode)
    : c_(c), rho_(rho), harmonic_(harmonic), mode_(mode) {
  if (!(c > 0.0 && c <= 1.0)) {
    throw InvariantViolation(fmt::format("step scale c = {} must lie in (0,1]", c));
  }
  if (!(rho > 0.5 && rho <= 1.0)) {
    throw InvariantViolation(
        fmt::format("step exponent rho = {} must lie in (0.5,1] for square-summability", rho));
  }
}

StepSchedule StepSchedule::harmonic(double c, StepMode mode) {
  return StepSchedule(c, 1.0, true, mode);
}

StepSchedule StepSchedule::power_law(double c, double rho, StepMode mode) {
  return StepSchedule(c, rho, false, mode);
}

StepSchedule StepSchedule::parse(const std::string& spec, StepMode mode) {
  const auto colon = spec.find(':');
  const std::string family = spec.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (family == "harmonic") {
    return harmonic(args.empty() ? 1.0 : parse_number(args, spec), mode);
  }
  if (family == "power") {
    const auto comma = args.find(',');
    if (comma == std::string::npos) {
      throw ParseError(fmt::format("step schedule \"{}\": expected power:C,R", spec));
    }
    return power_law(parse_number(args.substr(0, comma), spec),
                     parse_number(args.substr(comma + 1), spec), mode);
  }
  throw ParseError(
      fmt::format("step schedule \"{}\": expected harmonic:C or power:C,R", spec));
}

double StepSchedule::beta(long k) const {
  const double denom = static_cast<double>(k) + 1.0;
  if (harmonic_) return c_ / denom;
  return c_ / std::pow(denom, rho_);
}

std::string StepSchedule::describe() const {
  const char* mode = mode_ == StepMode::kTimeBased ? "time" : "visit";
  if (harmonic_) return fmt::format("{}:harmonic:{}", mode, c_);
  return fmt::format("{}:power:{}:{}", mode, c_, rho_);
}

}  // namespace mcopi

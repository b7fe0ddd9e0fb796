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

#include <stdexcept>
#include <string>

namespace mcopi {

// Base class for every error raised by the library. kind() is a stable,
// machine-readable tag used by the CLI error line.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "Error"; }
};

#define MCOPI_DECLARE_ERROR(Name)                                      \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(what) {}            \
    const char* kind() const noexcept override { return #Name; }       \
  }

// Malformed input file (syntax or schema).
MCOPI_DECLARE_ERROR(ParseError);
// A model object violates one of its type invariants.
MCOPI_DECLARE_ERROR(InvariantViolation);
// Two actions of one state have different transition supports.
MCOPI_DECLARE_ERROR(Assumption2Violation);
// The transient part of the reachability graph contains a cycle.
MCOPI_DECLARE_ERROR(StructureViolation);
// Undiscounted evaluation requested on a structure without guaranteed
// absorption.
MCOPI_DECLARE_ERROR(NonContractive);
MCOPI_DECLARE_ERROR(MaxIterationsExceeded);
// An undiscounted trajectory failed to absorb within the structural bound.
MCOPI_DECLARE_ERROR(HorizonWithoutAbsorption);
// A cluster was entered by two distinct members in one trajectory.
MCOPI_DECLARE_ERROR(LayeringViolation);

#undef MCOPI_DECLARE_ERROR

}  // namespace mcopi

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

#include <optional>
#include <string>
#include <vector>

#include "mcopi/mdp.hpp"

namespace mcopi {

// A state whose actions do not all share one transition support.
struct SupportMismatch {
  StateId state;
  ActionIndex first_action;
  ActionIndex other_action;
  std::vector<StateId> first_support;
  std::vector<StateId> other_support;
};

// Policy-independent one-step reachability graph: (i,j) is an edge iff some
// action of i moves to j with positive probability.
struct ReachabilityGraph {
  int num_states = 0;
  std::vector<std::vector<StateId>> successors;  // sorted, unique
  std::vector<SupportMismatch> support_mismatches;

  bool has_edge(StateId from, StateId to) const;
  bool common_supports() const { return support_mismatches.empty(); }
  std::vector<std::pair<StateId, StateId>> edges() const;
};

// Partition of the states into transient states and closed recurrent
// classes, with verdicts on the three structural requirements of the
// learning algorithm:
//   1. every state is reachable from the support of the start distribution,
//   2. all actions of a state share one transition support,
//   3. the transient part of the graph is acyclic.
struct StructureReport {
  // Stored so that every transient edge (x_i, x_j) has i > j.
  std::vector<StateId> transient_order;
  std::vector<std::vector<StateId>> recurrent_classes;  // members sorted
  // -1 for transient states, else index into recurrent_classes.
  std::vector<int> class_of;

  bool reachability_ok = true;            // requirement 1
  std::vector<StateId> unreachable_states;
  bool common_support_ok = true;          // requirement 2
  std::vector<SupportMismatch> support_mismatches;
  bool transient_acyclic_ok = true;       // requirement 3
  std::vector<std::vector<StateId>> transient_cycles;

  bool all_ok() const {
    return reachability_ok && common_support_ok && transient_acyclic_ok;
  }
  bool is_transient(StateId s) const { return class_of[s] < 0; }
  // Human-readable multi-line summary.
  std::string describe() const;
};

ReachabilityGraph build_reachability_graph(const Mdp& mdp);

// Throws Assumption2Violation if any state mixes supports across actions.
void require_common_supports(const ReachabilityGraph& graph);

// Strongly connected components in reverse topological order (every edge
// between components goes from a later component to an earlier one).
std::vector<std::vector<StateId>> strongly_connected_components(
    const ReachabilityGraph& graph);

// Without a start distribution the reachability verdict is left true.
StructureReport decompose_structure(const ReachabilityGraph& graph,
                                    const std::optional<InitialDistribution>& p);

// build_reachability_graph + decompose_structure.
StructureReport analyze_structure(const Mdp& mdp,
                                  const std::optional<InitialDistribution>& p);

// States graph-reachable from the given sources (sources included).
std::vector<bool> reachable_from(const ReachabilityGraph& graph,
                                 const std::vector<StateId>& sources);

}  // namespace mcopi

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

#include "mcopi/structure.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "mcopi/errors.hpp"

namespace mcopi {

bool ReachabilityGraph::has_edge(StateId from, StateId to) const {
  const auto& out = successors[from];
  return std::binary_search(out.begin(), out.end(), to);
}

std::vector<std::pair<StateId, StateId>> ReachabilityGraph::edges() const {
  std::vector<std::pair<StateId, StateId>> out;
  for (StateId i = 0; i < num_states; ++i) {
    for (StateId j : successors[i]) out.emplace_back(i, j);
  }
  return out;
}

ReachabilityGraph build_reachability_graph(const Mdp& mdp) {
  ReachabilityGraph graph;
  graph.num_states = mdp.num_states();
  graph.successors.resize(graph.num_states);
  for (StateId s = 0; s < graph.num_states; ++s) {
    auto& out = graph.successors[s];
    const auto actions = mdp.actions(s);
    for (ActionIndex a = 0; a < static_cast<ActionIndex>(actions.size()); ++a) {
      out.insert(out.end(), actions[a].targets.begin(), actions[a].targets.end());
      // Targets are stored sorted, so supports compare as plain vectors.
      if (a > 0 && actions[a].targets != actions[0].targets) {
        graph.support_mismatches.push_back(
            {s, 0, a, actions[0].targets, actions[a].targets});
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }
  return graph;
}

void require_common_supports(const ReachabilityGraph& graph) {
  if (graph.common_supports()) return;
  std::ostringstream msg;
  msg << "actions of a state must share one transition support:";
  for (const auto& m : graph.support_mismatches) {
    msg << fmt::format(" state {} actions ({},{}) supports {} vs {};", m.state,
                       m.first_action, m.other_action, m.first_support, m.other_support);
  }
  throw Assumption2Violation(msg.str());
}

std::vector<std::vector<StateId>> strongly_connected_components(
    const ReachabilityGraph& graph) {
  // Iterative Tarjan. Components come out sinks-first, which is exactly the
  // reverse topological order of the condensation.
  const int n = graph.num_states;
  std::vector<int> index(n, -1), lowlink(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<StateId> stack;
  std::vector<std::vector<StateId>> components;
  int counter = 0;

  struct Frame {
    StateId node;
    std::size_t next_edge;
  };
  std::vector<Frame> call_stack;

  for (StateId root = 0; root < n; ++root) {
    if (index[root] >= 0) continue;
    call_stack.push_back({root, 0});
    index[root] = lowlink[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call_stack.empty()) {
      Frame& frame = call_stack.back();
      const auto& out = graph.successors[frame.node];
      if (frame.next_edge < out.size()) {
        const StateId next = out[frame.next_edge++];
        if (index[next] < 0) {
          index[next] = lowlink[next] = counter++;
          stack.push_back(next);
          on_stack[next] = true;
          call_stack.push_back({next, 0});
        } else if (on_stack[next]) {
          lowlink[frame.node] = std::min(lowlink[frame.node], index[next]);
        }
        continue;
      }
      const StateId node = frame.node;
      call_stack.pop_back();
      if (!call_stack.empty()) {
        StateId parent = call_stack.back().node;
        lowlink[parent] = std::min(lowlink[parent], lowlink[node]);
      }
      if (lowlink[node] == index[node]) {
        std::vector<StateId> component;
        StateId member;
        do {
          member = stack.back();
          stack.pop_back();
          on_stack[member] = false;
          component.push_back(member);
        } while (member != node);
        std::sort(component.begin(), component.end());
        components.push_back(std::move(component));
      }
    }
  }
  return components;
}

std::vector<bool> reachable_from(const ReachabilityGraph& graph,
                                 const std::vector<StateId>& sources) {
  std::vector<bool> seen(graph.num_states, false);
  std::deque<StateId> queue;
  for (StateId s : sources) {
    if (!seen[s]) {
      seen[s] = true;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    const StateId s = queue.front();
    queue.pop_front();
    for (StateId t : graph.successors[s]) {
      if (!seen[t]) {
        seen[t] = true;
        queue.push_back(t);
      }
    }
  }
  return seen;
}

StructureReport decompose_structure(const ReachabilityGraph& graph,
                                    const std::optional<InitialDistribution>& p) {
  const int n = graph.num_states;
  StructureReport report;
  report.class_of.assign(n, -1);
  report.support_mismatches = graph.support_mismatches;
  report.common_support_ok = graph.common_supports();

  const auto components = strongly_connected_components(graph);
  std::vector<int> component_of(n, -1);
  for (std::size_t c = 0; c < components.size(); ++c) {
    for (StateId s : components[c]) component_of[s] = static_cast<int>(c);
  }

  for (std::size_t c = 0; c < components.size(); ++c) {
    const auto& members = components[c];
    bool closed = true;
    for (StateId s : members) {
      for (StateId t : graph.successors[s]) {
        if (component_of[t] != static_cast<int>(c)) closed = false;
      }
    }
    if (closed) {
      for (StateId s : members) {
        report.class_of[s] = static_cast<int>(report.recurrent_classes.size());
      }
      report.recurrent_classes.push_back(members);
      continue;
    }
    const bool self_loop = members.size() == 1 && graph.has_edge(members[0], members[0]);
    if (members.size() > 1 || self_loop) {
      report.transient_acyclic_ok = false;
      report.transient_cycles.push_back(members);
    }
    // Tarjan order already places every successor component first.
    report.transient_order.insert(report.transient_order.end(), members.begin(),
                                  members.end());
  }

  if (p.has_value()) {
    if (p->size() != n) {
      throw InvariantViolation("initial distribution length does not match the MDP");
    }
    const auto seen = reachable_from(graph, p->support());
    for (StateId s = 0; s < n; ++s) {
      if (!seen[s]) report.unreachable_states.push_back(s);
    }
    report.reachability_ok = report.unreachable_states.empty();
  }
  return report;
}

StructureReport analyze_structure(const Mdp& mdp,
                                  const std::optional<InitialDistribution>& p) {
  return decompose_structure(build_reachability_graph(mdp), p);
}

std::string StructureReport::describe() const {
  std::ostringstream out;
  out << fmt::format("transient states (reverse topological order): {}\n",
                     transient_order);
  out << fmt::format("recurrent classes: {}\n", recurrent_classes.size());
  for (std::size_t c = 0; c < recurrent_classes.size(); ++c) {
    out << fmt::format("  R{}: {}\n", c + 1, recurrent_classes[c]);
  }
  out << fmt::format("reachability: {}", reachability_ok ? "ok" : "VIOLATED");
  if (!reachability_ok) out << fmt::format(" unreachable {}", unreachable_states);
  out << '\n';
  out << fmt::format("common supports: {}", common_support_ok ? "ok" : "VIOLATED");
  for (const auto& m : support_mismatches) {
    out << fmt::format(" state {} actions ({},{}) {} vs {};", m.state, m.first_action,
                       m.other_action, m.first_support, m.other_support);
  }
  out << '\n';
  out << fmt::format("acyclic transient part: {}", transient_acyclic_ok ? "ok" : "VIOLATED");
  for (const auto& cycle : transient_cycles) out << fmt::format(" cycle {}", cycle);
  out << '\n';
  return out.str();
}

}  // namespace mcopi

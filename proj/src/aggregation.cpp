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

#include "mcopi/aggregation.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "mcopi/errors.hpp"

namespace mcopi {
namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += "; ";
    out += item;
  }
  return out;
}

}  // namespace

std::vector<int> state_layers(const Mdp& mdp, const StructureReport& report) {
  if (!report.transient_acyclic_ok) {
    throw StructureViolation("layers need an acyclic transient subgraph");
  }
  const ReachabilityGraph graph = build_reachability_graph(mdp);
  std::vector<int> layer(mdp.num_states(), 0);
  // transient_order lists successors first.
  for (StateId s : report.transient_order) {
    int best = 0;
    for (StateId t : graph.successors[s]) best = std::max(best, layer[t]);
    layer[s] = best + 1;
  }
  return layer;
}

std::vector<std::string> partition_violations(int num_states,
                                              const std::vector<std::vector<StateId>>& lists) {
  std::vector<std::string> out;
  std::vector<int> owner(num_states, -1);
  for (std::size_t c = 0; c < lists.size(); ++c) {
    if (lists[c].empty()) out.push_back(fmt::format("cluster {} is empty", c));
    for (StateId s : lists[c]) {
      if (s < 0 || s >= num_states) {
        out.push_back(fmt::format("cluster {} names state {} outside 0..{}", c, s, num_states - 1));
      } else if (owner[s] >= 0) {
        out.push_back(fmt::format("state {} appears in clusters {} and {}", s, owner[s], c));
      } else {
        owner[s] = static_cast<int>(c);
      }
    }
  }
  for (StateId s = 0; s < num_states; ++s) {
    if (owner[s] < 0) out.push_back(fmt::format("state {} belongs to no cluster", s));
  }
  return out;
}

ClusterMap ClusterMap::build(const Mdp& mdp, const std::vector<std::vector<StateId>>& lists) {
  const auto bad = partition_violations(mdp.num_states(), lists);
  if (!bad.empty()) throw InvariantViolation("invalid clusters: " + join(bad));
  const std::vector<int> layers = state_layers(mdp, analyze_structure(mdp, std::nullopt));

  ClusterMap map;
  map.cluster_of.assign(mdp.num_states(), -1);
  for (std::size_t c = 0; c < lists.size(); ++c) {
    std::vector<StateId> members = lists[c];
    std::sort(members.begin(), members.end());
    const int layer = layers[members.front()];
    for (StateId s : members) {
      if (layers[s] != layer) {
        throw InvariantViolation(fmt::format(
            "cluster {} mixes layers {} (state {}) and {} (state {})", c, layer,
            members.front(), layers[s], s));
      }
      map.cluster_of[s] = static_cast<int>(c);
    }
    map.members.push_back(std::move(members));
    map.layer.push_back(layer);
  }
  return map;
}

ClusterMap ClusterMap::singletons(const Mdp& mdp) {
  std::vector<std::vector<StateId>> lists;
  for (StateId s = 0; s < mdp.num_states(); ++s) lists.push_back({s});
  return build(mdp, lists);
}

std::vector<std::string> validate_clusters(const Mdp& mdp,
                                           const std::vector<std::vector<StateId>>& clusters,
                                           const StructureReport& report,
                                           const ValueFunction& jstar, double tol) {
  const int n = mdp.num_states();
  std::vector<std::string> out;
  for (auto& v : partition_violations(n, clusters)) out.push_back("(a) " + v);

  for (const auto& members : report.recurrent_classes) {
    if (members.size() > 1) {
      out.push_back(fmt::format("(b) recurrent class {} has more than one state", members));
      continue;
    }
    if (!mdp.is_absorbing(members[0])) {
      out.push_back(fmt::format("(b) recurrent state {} is not absorbing", members[0]));
    }
  }
  if (!report.transient_acyclic_ok) {
    out.push_back("(c) layers undefined: the transient subgraph has a cycle");
    return out;
  }

  const std::vector<int> layers = state_layers(mdp, report);
  std::vector<char> unreachable(n, 0);
  for (StateId s : report.unreachable_states) unreachable[s] = 1;

  for (std::size_t c = 0; c < clusters.size(); ++c) {
    std::vector<StateId> members;
    for (StateId s : clusters[c]) {
      if (s >= 0 && s < n) members.push_back(s);
    }
    if (members.empty()) continue;
    for (StateId s : members) {
      if (layers[s] != layers[members[0]]) {
        out.push_back(fmt::format("(c) cluster {}: state {} on layer {} but state {} on layer {}",
                                  c, members[0], layers[members[0]], s, layers[s]));
      }
    }
    if (!jstar.empty()) {
      for (StateId s : members) {
        const double gap = std::fabs(jstar[s] - jstar[members[0]]);
        if (gap > tol) {
          out.push_back(fmt::format("(d) cluster {}: J*({}) = {} differs from J*({}) = {}", c, s,
                                    jstar[s], members[0], jstar[members[0]]));
        }
      }
    }
    const bool reached =
        std::any_of(members.begin(), members.end(), [&](StateId s) { return !unreachable[s]; });
    if (!reached) out.push_back(fmt::format("(e) cluster {} is unreachable from supp(p)", c));
  }
  return out;
}

ValueFunction expand_theta(const ClusterMap& clusters, const std::vector<double>& theta) {
  ValueFunction J(clusters.cluster_of.size());
  for (std::size_t s = 0; s < J.size(); ++s) J[s] = theta[clusters.cluster_of[s]];
  return J;
}

AggregatedRunResult run_opi_aggregated(const Mdp& mdp, const InitialDistribution& p,
                                       const ClusterMap& clusters, const OpiConfig& config,
                                       const OptimalityOracle& oracle) {
  config.validate();
  if (p.size() != mdp.num_states() ||
      static_cast<int>(clusters.cluster_of.size()) != mdp.num_states()) {
    throw InvariantViolation("initial distribution or clusters do not match the MDP");
  }
  const std::vector<bool> relevant =
      reachable_from(build_reachability_graph(mdp), p.support());

  const int k = clusters.size();
  std::vector<double> theta(k, config.initial_value);
  OpiRunState state = OpiRunState::initial(mdp, config);
  state.visit_counts.assign(k, 0);
  AggregatedRunResult out;
  RunResult& result = out.run;
  auto record = [&](long t) {
    if (config.record_history) result.history.push_back({t, state.J});
  };
  // Member of each cluster that was updated in the current trajectory.
  std::vector<StateId> used_by(k, -1);

  auto blend = [&](int c, double estimate) {
    const long visits = state.visit_counts[c];
    const double gamma = config.schedule.step(state.t, visits);
    theta[c] = (1.0 - gamma) * theta[c] + gamma * estimate;
    ++state.visit_counts[c];
    state.last.updates.push_back({c, visits, gamma, estimate});
  };

  while (true) {
    state.mu = greedy_policy(mdp, state.J);
    if (!result.iterations_to_optimal && !oracle.optimal_actions.empty() &&
        policy_is_optimal(state.mu, oracle.optimal_actions, relevant)) {
      result.iterations_to_optimal = state.t;
      if (config.stop_at_optimal) break;
    }
    if (state.t >= config.max_iterations) break;
    if (state.t % config.history_stride == 0) record(state.t);

    const StateId start = static_cast<StateId>(state.rng.categorical(p.probabilities()));
    const Trajectory trajectory =
        simulate_trajectory(mdp, state.mu, start, state.rng, config.truncation_bias);
    const TailEstimates tails = first_visit_tail_costs(trajectory, mdp.discount());
    state.last.t = state.t;
    state.last.start = start;
    state.last.trajectory_length = trajectory.steps.size();
    state.last.updates.clear();

    std::fill(used_by.begin(), used_by.end(), -1);
    const std::size_t count =
        config.update_mode == UpdateMode::kTrajectory ? tails.size() : std::size_t{1};
    for (std::size_t j = 0; j < count; ++j) {
      const StateId s = tails.states[j];
      const int c = clusters.cluster_of[s];
      if (used_by[c] >= 0) {
        throw LayeringViolation(fmt::format(
            "trajectory at t = {} visits states {} and {} of cluster {}", state.t, used_by[c], s,
            c));
      }
      used_by[c] = s;
      blend(c, tails.tails[j]);
    }
    for (StateId s = 0; s < mdp.num_states(); ++s) state.J[s] = theta[clusters.cluster_of[s]];
    ++state.t;
    if (config.observer) config.observer(state);
  }
  if (result.history.empty() || result.history.back().t != state.t) record(state.t);

  result.final_policy = state.mu;
  result.iterations_run = state.t;
  result.visit_counts = state.visit_counts;
  if (!oracle.jstar.empty()) result.final_sup_error = sup_norm_distance(state.J, oracle.jstar);
  result.J = std::move(state.J);
  out.theta = std::move(theta);
  return out;
}

std::vector<double> cluster_reach_probabilities(const ClusterMap& clusters,
                                                const ReachProbabilities& q) {
  std::vector<double> out(clusters.size(), 0.0);
  for (int c = 0; c < clusters.size(); ++c) {
    for (StateId s : clusters.members[c]) out[c] += q[s];
  }
  return out;
}

std::vector<double> cluster_values(const ClusterMap& clusters, const ValueFunction& jstar) {
  std::vector<double> out(clusters.size(), 0.0);
  for (int c = 0; c < clusters.size(); ++c) {
    for (StateId s : clusters.members[c]) out[c] += jstar[s];
    out[c] /= static_cast<double>(clusters.members[c].size());
  }
  return out;
}

}  // namespace mcopi

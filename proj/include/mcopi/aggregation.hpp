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

// OPI with hard state aggregation. States are grouped into clusters that
// share one parameter theta(c), and J(i) = theta(cluster_of(i)).

#pragma once

#include <vector>

#include "mcopi/mdp.hpp"
#include "mcopi/opi.hpp"
#include "mcopi/solvers.hpp"
#include "mcopi/structure.hpp"

namespace mcopi {

// Longest-path distance to the absorbing set: 0 on recurrent states,
// 1 + max over successors on transient ones. Needs an acyclic transient part.
std::vector<int> state_layers(const Mdp& mdp, const StructureReport& report);

struct ClusterMap {
  std::vector<int> cluster_of;               // state -> cluster
  std::vector<std::vector<StateId>> members; // cluster -> sorted states
  std::vector<int> layer;                    // cluster -> layer of its members

  int size() const { return static_cast<int>(members.size()); }

  // Throws InvariantViolation unless `lists` partitions the states of mdp
  // and every cluster sits on a single layer.
  static ClusterMap build(const Mdp& mdp, const std::vector<std::vector<StateId>>& lists);
  static ClusterMap singletons(const Mdp& mdp);
};

// Problems with `lists` as a partition of 0..num_states-1.
std::vector<std::string> partition_violations(int num_states,
                                              const std::vector<std::vector<StateId>>& lists);

// Itemized check of a clustering:
//  (a) partition of the state space;
//  (b) every non-transient state is absorbing;
//  (c) members of a cluster share one layer;
//  (d) |J*(i) - J*(j)| <= tol inside each cluster (skipped when jstar is empty);
//  (e) every cluster is reachable from supp(p), as recorded in `report`.
// Empty means valid.
std::vector<std::string> validate_clusters(const Mdp& mdp,
                                           const std::vector<std::vector<StateId>>& clusters,
                                           const StructureReport& report,
                                           const ValueFunction& jstar, double tol = 1e-9);

struct AggregatedRunResult {
  RunResult run;  // run.J(i) = theta(cluster_of(i)); visit_counts are per cluster
  std::vector<double> theta;
};

// Aggregated OPI. For every cluster met by the trajectory, theta(c) is
// blended with the tail cost of its first-visited member, using n_t(c) for
// visit-based steps. Two distinct members of one cluster in a trajectory
// throw LayeringViolation. With singleton clusters the iterates match
// run_opi exactly.
AggregatedRunResult run_opi_aggregated(const Mdp& mdp, const InitialDistribution& p,
                                       const ClusterMap& clusters, const OpiConfig& config,
                                       const OptimalityOracle& oracle);

// Expands theta to a per-state value function.
ValueFunction expand_theta(const ClusterMap& clusters, const std::vector<double>& theta);

// q'(c) = sum of q(i) over the members of c.
std::vector<double> cluster_reach_probabilities(const ClusterMap& clusters,
                                                const ReachProbabilities& q);

// Mean of J* over each cluster.
std::vector<double> cluster_values(const ClusterMap& clusters, const ValueFunction& jstar);

}  // namespace mcopi

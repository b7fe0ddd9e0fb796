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
#include <utility>
#include <vector>

#include "mcopi/mdp.hpp"
#include "mcopi/structure.hpp"

namespace mcopi {

using ValueFunction = std::vector<double>;
// Chosen action index per state.
using Policy = std::vector<ActionIndex>;
// Per state, every action whose backup at J* is within kTieTolerance of the
// minimum. Members are sorted.
using OptimalActionSets = std::vector<std::vector<ActionIndex>>;
// Probability of ever visiting each state.
using ReachProbabilities = std::vector<double>;

inline constexpr double kTieTolerance = 1e-9;
// Largest problem solved by a dense LU factorization in exact evaluation.
inline constexpr int kDirectSolveLimit = 2000;

// c(i,u) + discount * sum_j P_ij(u) J(j).
double backup(const Mdp& mdp, StateId s, ActionIndex a, const ValueFunction& J);

// T_mu J.
ValueFunction apply_policy_bellman(const Mdp& mdp, const Policy& mu,
                                   const ValueFunction& J);

struct BellmanResult {
  ValueFunction values;  // TJ
  Policy greedy;         // argmin, lowest index on ties
};

// TJ and the greedy policy.
BellmanResult apply_bellman(const Mdp& mdp, const ValueFunction& J);

// Greedy policy only; identical to apply_bellman(mdp, J).greedy.
Policy greedy_policy(const Mdp& mdp, const ValueFunction& J);

double sup_norm_distance(const ValueFunction& a, const ValueFunction& b);

// Exact J^mu. Discounted: dense LU for n <= kDirectSolveLimit, otherwise
// iterating T_mu. Undiscounted (SSP, negamin): backward substitution over a
// reverse topological order; throws NonContractive unless the transient part
// is acyclic and every recurrent class is a zero-cost absorbing state.
ValueFunction evaluate_policy_exact(const Mdp& mdp, const Policy& mu);

struct ValueIterationOptions {
  double tolerance = 1e-10;  // guaranteed bound on |J - J*|_inf
  long max_iterations = 1'000'000;
};

// Discounted: iterate T until |TJ - J| < tol (1-alpha) / (2 alpha).
// Undiscounted: exact backward induction.
ValueFunction value_iteration(const Mdp& mdp, double tolerance);
ValueFunction value_iteration(const Mdp& mdp, const ValueIterationOptions& options);

struct PolicyIterationResult {
  ValueFunction values;
  Policy policy;
  OptimalActionSets optimal_actions;
  int improvement_steps = 0;
  // J^{mu_k} for every evaluated policy, in order.
  std::vector<ValueFunction> value_history;
};

// Howard policy iteration starting from action 0 everywhere; a state
// switches action only on a strict improvement. For the negamin class the
// result comes from backward induction, since the operator is not monotone.
PolicyIterationResult policy_iteration(const Mdp& mdp, int max_iterations = 10'000);

// Actions within kTieTolerance of the best backup at J.
OptimalActionSets optimal_action_sets(const Mdp& mdp, const ValueFunction& J,
                                      double tolerance = kTieTolerance);

// True when mu(i) is an optimal action at every state flagged in `relevant`.
bool policy_is_optimal(const Policy& mu, const OptimalActionSets& sets,
                       const std::vector<bool>& relevant);

// Exact probability of ever visiting each state under mu from p. Requires
// an acyclic transient part (StructureViolation otherwise).
ReachProbabilities reach_probabilities(const Mdp& mdp, const Policy& mu,
                                       const InitialDistribution& p,
                                       const StructureReport& report);

// {"J": [...], "policy": [...], "optimal_action_sets": [[...]]}
std::string solution_to_json(const PolicyIterationResult& result);

}  // namespace mcopi

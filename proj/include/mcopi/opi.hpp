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

// Monte Carlo optimistic policy iteration.
//
// Each iteration takes the greedy policy for the current estimate J_t,
// draws a start state from p, simulates one trajectory under that policy and
// blends the first-visit tail cost of every visited state into J:
//
//   J_{t+1}(i) = (1 - gamma_t(i)) J_t(i) + gamma_t(i) Jtilde(i)   if i visited
//   J_{t+1}(i) = J_t(i)                                           otherwise
//
// FirstStateOnly restricts the blend to the start state.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "mcopi/mdp.hpp"
#include "mcopi/rng.hpp"
#include "mcopi/schedule.hpp"
#include "mcopi/solvers.hpp"

namespace mcopi {

struct TrajectoryStep {
  StateId state;
  ActionIndex action;
  double cost;
};

enum class Termination { kAbsorbed, kTruncated };

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  Termination termination = Termination::kAbsorbed;
  // Index of the absorbing step when kAbsorbed.
  std::size_t absorbed_at = 0;
  // Discounted problems: the bias horizon H in force (0 when undiscounted).
  long horizon = 0;
};

// First-visit tail costs of one trajectory, in order of first visit.
struct TailEstimates {
  std::vector<StateId> states;
  std::vector<std::size_t> hitting_index;  // N(i)
  std::vector<double> tails;               // Jtilde(i)

  std::size_t size() const { return states.size(); }
  std::optional<double> estimate(StateId s) const;
  std::optional<std::size_t> first_visit(StateId s) const;
};

enum class UpdateMode { kTrajectory, kFirstStateOnly };

const char* to_string(UpdateMode mode);

// Callback invoked after every OPI iteration; receives the updated state.
struct OpiRunState;
using IterationObserver = std::function<void(const OpiRunState&)>;

struct OpiConfig {
  UpdateMode update_mode = UpdateMode::kTrajectory;
  StepSchedule schedule = StepSchedule::harmonic(1.0, StepMode::kVisitBased);
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  double truncation_bias = 1e-6;
  // J_0 = initial_value on every state.
  double initial_value = 0.0;
  long max_iterations = 1000;
  // Return as soon as the greedy policy is first optimal.
  bool stop_at_optimal = false;
  bool record_history = false;
  long history_stride = 10;
  IterationObserver observer;

  void validate() const;
};

struct ComponentUpdate {
  int component;       // state (or cluster) index
  long visits_before;  // n_t before this update
  double step;         // gamma_t
  double estimate;     // Jtilde used
};

struct IterationRecord {
  long t = 0;  // iteration index the update belongs to
  StateId start = 0;
  std::size_t trajectory_length = 0;
  std::vector<ComponentUpdate> updates;
};

struct OpiRunState {
  long t = 0;
  ValueFunction J;
  std::vector<long> visit_counts;
  Policy mu;  // greedy policy used by the latest iteration
  Rng rng;
  IterationRecord last;

  // J_0 = initial_value, n_0 = 0, generator positioned at (seed, stream).
  static OpiRunState initial(const Mdp& mdp, const OpiConfig& config);
};

struct HistoryEntry {
  long t;
  ValueFunction J;
};

struct RunResult {
  ValueFunction J;
  Policy final_policy;  // greedy w.r.t. the final J
  // First t whose greedy policy was optimal on every reachable state.
  std::optional<long> iterations_to_optimal;
  long iterations_run = 0;
  std::vector<long> visit_counts;
  std::vector<HistoryEntry> history;
  std::optional<double> final_sup_error;  // |J - J*|_inf when J* is known
};

// Exact solution used to score a run. A default-constructed oracle turns
// optimality detection and error reporting off.
struct OptimalityOracle {
  OptimalActionSets optimal_actions;
  ValueFunction jstar;  // empty when unknown

  static OptimalityOracle from(const PolicyIterationResult& solved);
};

// Discounted horizon H = ceil(ln(eps (1-alpha) / c_max) / ln alpha), at least
// 1, so a tail cut after H steps is off by at most eps. Returns 0 for
// undiscounted classes.
long truncation_horizon(const Mdp& mdp, double epsilon_bias);

// Samples one trajectory under mu from `start`. It ends at the first step
// taken in a zero-cost absorbing state. Discounted trajectories are also
// cut once H steps have elapsed since the most recent first visit, which
// bounds the truncation bias of every first-visit estimate by eps.
// Undiscounted trajectories that exceed num_states steps throw
// HorizonWithoutAbsorption.
Trajectory simulate_trajectory(const Mdp& mdp, const Policy& mu, StateId start, Rng& rng,
                               double epsilon_bias);

// Single backward pass: tail(k) = cost_k + alpha tail(k+1).
TailEstimates first_visit_tail_costs(const Trajectory& trajectory, double alpha);

// One OPI iteration in place: greedy policy, start draw, simulation, update.
void opi_iteration(OpiRunState& state, const Mdp& mdp, const InitialDistribution& p,
                   const OpiConfig& config);

RunResult run_opi(const Mdp& mdp, const InitialDistribution& p, const OpiConfig& config,
                  const OptimalityOracle& oracle);

struct DiagnosticsRow {
  StateId state;
  long visits;
  double visit_freq;
  double q_exact;
  double mean_estimate;   // conditional on a visit
  double standard_error;  // of mean_estimate
  double j_exact;
};

// Draws `samples` independent trajectories under a fixed policy and compares
// the conditional-on-visit first-visit estimates and empirical visit
// frequencies with exact J^mu and q_mu.
std::vector<DiagnosticsRow> estimator_diagnostics(const Mdp& mdp, const Policy& mu,
                                                  const InitialDistribution& p,
                                                  long samples, Rng& rng,
                                                  double epsilon_bias = 1e-6);

}  // namespace mcopi

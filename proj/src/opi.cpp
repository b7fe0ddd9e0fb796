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

#include "mcopi/opi.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "mcopi/errors.hpp"
#include "mcopi/structure.hpp"

namespace mcopi {

std::optional<double> TailEstimates::estimate(StateId s) const {
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (states[k] == s) return tails[k];
  }
  return std::nullopt;
}

std::optional<std::size_t> TailEstimates::first_visit(StateId s) const {
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (states[k] == s) return hitting_index[k];
  }
  return std::nullopt;
}

const char* to_string(UpdateMode mode) {
  return mode == UpdateMode::kTrajectory ? "trajectory" : "first-state";
}

void OpiConfig::validate() const {
  if (!(truncation_bias > 0.0)) {
    throw InvariantViolation(
        fmt::format("truncation bias {} must be positive", truncation_bias));
  }
  if (!std::isfinite(initial_value)) throw InvariantViolation("initial value must be finite");
  if (max_iterations < 1) throw InvariantViolation("max_iterations must be at least 1");
  if (history_stride < 1) throw InvariantViolation("history stride must be at least 1");
}

OpiRunState OpiRunState::initial(const Mdp& mdp, const OpiConfig& config) {
  OpiRunState state;
  state.J.assign(mdp.num_states(), config.initial_value);
  state.visit_counts.assign(mdp.num_states(), 0);
  state.mu.assign(mdp.num_states(), 0);
  state.rng = Rng(config.seed, config.stream);
  return state;
}

OptimalityOracle OptimalityOracle::from(const PolicyIterationResult& solved) {
  return OptimalityOracle{solved.optimal_actions, solved.values};
}

long truncation_horizon(const Mdp& mdp, double epsilon_bias) {
  if (!mdp.problem_class().is_discounted()) return 0;
  const double alpha = mdp.discount();
  const double c_max = mdp.max_abs_cost();
  if (c_max == 0.0) return 1;
  const double h = std::ceil(std::log(epsilon_bias * (1.0 - alpha) / c_max) / std::log(alpha));
  return std::max(1L, static_cast<long>(h));
}

Trajectory simulate_trajectory(const Mdp& mdp, const Policy& mu, StateId start, Rng& rng,
                               double epsilon_bias) {
  const int n = mdp.num_states();
  const bool discounted = mdp.problem_class().is_discounted();
  Trajectory trajectory;
  trajectory.horizon = truncation_horizon(mdp, epsilon_bias);

  std::vector<char> visited(n, 0);
  std::size_t last_first_visit = 0;
  StateId s = start;
  for (std::size_t k = 0;; ++k) {
    const ActionIndex a = mu[s];
    const Action& act = mdp.action(s, a);
    trajectory.steps.push_back({s, a, act.cost});
    if (!visited[s]) {
      visited[s] = 1;
      last_first_visit = k;
    }
    if (act.cost == 0.0 && act.targets.size() == 1 && act.targets[0] == s) {
      trajectory.termination = Termination::kAbsorbed;
      trajectory.absorbed_at = k;
      return trajectory;
    }
    if (discounted) {
      if (static_cast<long>(k - last_first_visit) + 1 >= trajectory.horizon) {
        trajectory.termination = Termination::kTruncated;
        return trajectory;
      }
    } else if (trajectory.steps.size() > static_cast<std::size_t>(n)) {
      throw HorizonWithoutAbsorption(fmt::format(
          "undiscounted trajectory from state {} did not absorb within {} steps", start, n));
    }
    s = act.targets.size() == 1 ? act.targets[0]
                                : act.targets[rng.categorical(act.probabilities)];
  }
}

TailEstimates first_visit_tail_costs(const Trajectory& trajectory, double alpha) {
  const auto& steps = trajectory.steps;
  std::vector<double> tail(steps.size());
  double running = 0.0;
  for (std::size_t k = steps.size(); k-- > 0;) {
    running = steps[k].cost + alpha * running;
    tail[k] = running;
  }
  StateId max_state = 0;
  for (const auto& step : steps) max_state = std::max(max_state, step.state);
  std::vector<char> seen(static_cast<std::size_t>(max_state) + 1, 0);
  TailEstimates out;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const StateId s = steps[k].state;
    if (seen[s]) continue;
    seen[s] = 1;
    out.states.push_back(s);
    out.hitting_index.push_back(k);
    out.tails.push_back(tail[k]);
  }
  return out;
}

namespace {

void blend(OpiRunState& state, const StepSchedule& schedule, StateId s, double estimate) {
  const long visits = state.visit_counts[s];
  const double gamma = schedule.step(state.t, visits);
  state.J[s] = (1.0 - gamma) * state.J[s] + gamma * estimate;
  ++state.visit_counts[s];
  state.last.updates.push_back({s, visits, gamma, estimate});
}

// Everything in an iteration after the greedy policy is fixed.
void advance(OpiRunState& state, const Mdp& mdp, const InitialDistribution& p,
             const OpiConfig& config) {
  const StateId start = static_cast<StateId>(state.rng.categorical(p.probabilities()));
  const Trajectory trajectory =
      simulate_trajectory(mdp, state.mu, start, state.rng, config.truncation_bias);
  const TailEstimates tails = first_visit_tail_costs(trajectory, mdp.discount());

  state.last.t = state.t;
  state.last.start = start;
  state.last.trajectory_length = trajectory.steps.size();
  state.last.updates.clear();
  if (config.update_mode == UpdateMode::kTrajectory) {
    for (std::size_t k = 0; k < tails.size(); ++k) {
      blend(state, config.schedule, tails.states[k], tails.tails[k]);
    }
  } else {
    blend(state, config.schedule, start, tails.tails[0]);
  }
  ++state.t;
  if (config.observer) config.observer(state);
}

}  // namespace

void opi_iteration(OpiRunState& state, const Mdp& mdp, const InitialDistribution& p,
                   const OpiConfig& config) {
  state.mu = greedy_policy(mdp, state.J);
  advance(state, mdp, p, config);
}

RunResult run_opi(const Mdp& mdp, const InitialDistribution& p, const OpiConfig& config,
                  const OptimalityOracle& oracle) {
  config.validate();
  if (p.size() != mdp.num_states()) {
    throw InvariantViolation("initial distribution length does not match the MDP");
  }
  // q_mu(i) > 0 exactly when i is graph-reachable from supp(p), for every mu.
  const std::vector<bool> relevant =
      reachable_from(build_reachability_graph(mdp), p.support());

  OpiRunState state = OpiRunState::initial(mdp, config);
  RunResult result;
  auto record = [&](long t) {
    if (config.record_history) result.history.push_back({t, state.J});
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
    advance(state, mdp, p, config);
  }
  if (result.history.empty() || result.history.back().t != state.t) record(state.t);

  result.final_policy = state.mu;
  result.iterations_run = state.t;
  result.visit_counts = state.visit_counts;
  if (!oracle.jstar.empty()) result.final_sup_error = sup_norm_distance(state.J, oracle.jstar);
  result.J = std::move(state.J);
  return result;
}

std::vector<DiagnosticsRow> estimator_diagnostics(const Mdp& mdp, const Policy& mu,
                                                  const InitialDistribution& p,
                                                  long samples, Rng& rng,
                                                  double epsilon_bias) {
  const int n = mdp.num_states();
  const StructureReport report = analyze_structure(mdp, p);
  const ValueFunction j_exact = evaluate_policy_exact(mdp, mu);
  const ReachProbabilities q = reach_probabilities(mdp, mu, p, report);

  // Welford accumulators per state.
  std::vector<long> count(n, 0);
  std::vector<double> mean(n, 0.0), m2(n, 0.0);
  for (long sample = 0; sample < samples; ++sample) {
    const StateId start = static_cast<StateId>(rng.categorical(p.probabilities()));
    const Trajectory trajectory = simulate_trajectory(mdp, mu, start, rng, epsilon_bias);
    const TailEstimates tails = first_visit_tail_costs(trajectory, mdp.discount());
    for (std::size_t k = 0; k < tails.size(); ++k) {
      const StateId s = tails.states[k];
      const double x = tails.tails[k];
      ++count[s];
      const double delta = x - mean[s];
      mean[s] += delta / static_cast<double>(count[s]);
      m2[s] += delta * (x - mean[s]);
    }
  }

  std::vector<DiagnosticsRow> rows;
  rows.reserve(n);
  for (StateId s = 0; s < n; ++s) {
    DiagnosticsRow row{s, count[s], 0.0, q[s], 0.0, 0.0, j_exact[s]};
    if (samples > 0) row.visit_freq = static_cast<double>(count[s]) / samples;
    if (count[s] > 0) row.mean_estimate = mean[s];
    if (count[s] > 1) {
      const double variance = m2[s] / static_cast<double>(count[s] - 1);
      row.standard_error = std::sqrt(variance / static_cast<double>(count[s]));
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace mcopi

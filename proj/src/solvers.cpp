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

#include "mcopi/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <json.hpp>

#include "mcopi/errors.hpp"

namespace mcopi {
namespace {

void check_sizes(const Mdp& mdp, const ValueFunction& J) {
  if (static_cast<int>(J.size()) != mdp.num_states()) {
    throw InvariantViolation(fmt::format("value function has {} entries, MDP has {} states",
                                         J.size(), mdp.num_states()));
  }
}

void check_policy(const Mdp& mdp, const Policy& mu) {
  if (static_cast<int>(mu.size()) != mdp.num_states()) {
    throw InvariantViolation("policy length does not match the MDP");
  }
  for (StateId s = 0; s < mdp.num_states(); ++s) {
    if (mu[s] < 0 || mu[s] >= mdp.num_actions(s)) {
      throw InvariantViolation(fmt::format("policy action {} invalid at state {}", mu[s], s));
    }
  }
}

// Structure used by the undiscounted solvers: an acyclic transient part
// draining into zero-cost absorbing states. Returns the transient order.
StructureReport require_absorbing_dag(const Mdp& mdp) {
  StructureReport report = analyze_structure(mdp, std::nullopt);
  if (!report.transient_acyclic_ok) {
    throw NonContractive(
        "undiscounted problem: the transient part of the reachability graph has a cycle");
  }
  for (const auto& members : report.recurrent_classes) {
    if (members.size() != 1) {
      throw NonContractive(fmt::format(
          "undiscounted problem: recurrent class of {} states never terminates",
          members.size()));
    }
    const StateId s = members[0];
    for (const Action& act : mdp.actions(s)) {
      if (act.cost != 0.0) {
        throw NonContractive(fmt::format(
            "undiscounted problem: absorbing state {} must cost 0 under every action", s));
      }
    }
  }
  return report;
}

ValueFunction evaluate_direct(const Mdp& mdp, const Policy& mu) {
  const int n = mdp.num_states();
  const double alpha = mdp.discount();
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd b(n);
  for (StateId s = 0; s < n; ++s) {
    const Action& act = mdp.action(s, mu[s]);
    b(s) = act.cost;
    for (std::size_t k = 0; k < act.targets.size(); ++k) {
      A(s, act.targets[k]) -= alpha * act.probabilities[k];
    }
  }
  Eigen::VectorXd x = A.partialPivLu().solve(b);
  return ValueFunction(x.data(), x.data() + n);
}

ValueFunction evaluate_iterative(const Mdp& mdp, const Policy& mu) {
  const double alpha = mdp.discount();
  // |T J - J| < eps (1 - alpha) keeps the residual of the limit below eps.
  const double stop = 1e-11 * (1.0 - alpha);
  ValueFunction J(mdp.num_states(), 0.0);
  for (long it = 0; it < 100'000'000; ++it) {
    ValueFunction next = apply_policy_bellman(mdp, mu, J);
    const double change = sup_norm_distance(next, J);
    J = std::move(next);
    if (change < stop) return J;
  }
  throw MaxIterationsExceeded("iterative policy evaluation did not converge");
}

ValueFunction evaluate_backward(const Mdp& mdp, const Policy& mu,
                                const StructureReport& report) {
  ValueFunction J(mdp.num_states(), 0.0);
  for (StateId s : report.transient_order) J[s] = backup(mdp, s, mu[s], J);
  return J;
}

BellmanResult backward_induction(const Mdp& mdp, const StructureReport& report) {
  BellmanResult out{ValueFunction(mdp.num_states(), 0.0), Policy(mdp.num_states(), 0)};
  for (StateId s : report.transient_order) {
    double best = std::numeric_limits<double>::infinity();
    for (ActionIndex a = 0; a < mdp.num_actions(s); ++a) {
      const double value = backup(mdp, s, a, out.values);
      if (value < best) {
        best = value;
        out.greedy[s] = a;
      }
    }
    out.values[s] = best;
  }
  return out;
}

}  // namespace

double backup(const Mdp& mdp, StateId s, ActionIndex a, const ValueFunction& J) {
  const Action& act = mdp.action(s, a);
  double expected = 0.0;
  for (std::size_t k = 0; k < act.targets.size(); ++k) {
    expected += act.probabilities[k] * J[act.targets[k]];
  }
  return act.cost + mdp.discount() * expected;
}

ValueFunction apply_policy_bellman(const Mdp& mdp, const Policy& mu,
                                   const ValueFunction& J) {
  check_sizes(mdp, J);
  ValueFunction out(mdp.num_states());
  for (StateId s = 0; s < mdp.num_states(); ++s) out[s] = backup(mdp, s, mu[s], J);
  return out;
}

BellmanResult apply_bellman(const Mdp& mdp, const ValueFunction& J) {
  check_sizes(mdp, J);
  const int n = mdp.num_states();
  BellmanResult out{ValueFunction(n), Policy(n, 0)};
  for (StateId s = 0; s < n; ++s) {
    double best = backup(mdp, s, 0, J);
    for (ActionIndex a = 1; a < mdp.num_actions(s); ++a) {
      const double value = backup(mdp, s, a, J);
      if (value < best) {
        best = value;
        out.greedy[s] = a;
      }
    }
    out.values[s] = best;
  }
  return out;
}

Policy greedy_policy(const Mdp& mdp, const ValueFunction& J) {
  return apply_bellman(mdp, J).greedy;
}

double sup_norm_distance(const ValueFunction& a, const ValueFunction& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

ValueFunction evaluate_policy_exact(const Mdp& mdp, const Policy& mu) {
  check_policy(mdp, mu);
  if (!mdp.problem_class().is_discounted()) {
    return evaluate_backward(mdp, mu, require_absorbing_dag(mdp));
  }
  if (mdp.num_states() <= kDirectSolveLimit) return evaluate_direct(mdp, mu);
  return evaluate_iterative(mdp, mu);
}

ValueFunction value_iteration(const Mdp& mdp, double tolerance) {
  return value_iteration(mdp, ValueIterationOptions{tolerance});
}

ValueFunction value_iteration(const Mdp& mdp, const ValueIterationOptions& options) {
  if (!mdp.problem_class().is_discounted()) {
    return backward_induction(mdp, require_absorbing_dag(mdp)).values;
  }
  const double alpha = mdp.discount();
  const double stop = options.tolerance * (1.0 - alpha) / (2.0 * alpha);
  ValueFunction J(mdp.num_states(), 0.0);
  for (long it = 0; it < options.max_iterations; ++it) {
    ValueFunction next = apply_bellman(mdp, J).values;
    const double change = sup_norm_distance(next, J);
    J = std::move(next);
    if (change < stop) return J;
  }
  throw MaxIterationsExceeded(fmt::format(
      "value iteration did not reach tolerance {} within {} iterations", options.tolerance,
      options.max_iterations));
}

PolicyIterationResult policy_iteration(const Mdp& mdp, int max_iterations) {
  const int n = mdp.num_states();
  PolicyIterationResult result;
  if (mdp.problem_class().kind() == ProblemKind::kNegaminGame) {
    BellmanResult solved = backward_induction(mdp, require_absorbing_dag(mdp));
    result.values = std::move(solved.values);
    result.policy = std::move(solved.greedy);
    result.improvement_steps = 1;
    result.value_history.push_back(result.values);
    result.optimal_actions = optimal_action_sets(mdp, result.values);
    return result;
  }

  Policy mu(n, 0);
  for (int step = 0; step < max_iterations; ++step) {
    ValueFunction J = evaluate_policy_exact(mdp, mu);
    result.value_history.push_back(J);
    ++result.improvement_steps;
    bool changed = false;
    for (StateId s = 0; s < n; ++s) {
      const double current = backup(mdp, s, mu[s], J);
      ActionIndex best_action = mu[s];
      double best = current;
      for (ActionIndex a = 0; a < mdp.num_actions(s); ++a) {
        const double value = backup(mdp, s, a, J);
        if (value < best) {
          best = value;
          best_action = a;
        }
      }
      // Switch only on a strict improvement so round-off cannot make two
      // equally good actions alternate forever.
      if (best_action != mu[s] && best < current - 1e-12 * std::max(1.0, std::abs(current))) {
        mu[s] = best_action;
        changed = true;
      }
    }
    if (!changed) {
      result.values = std::move(J);
      result.policy = std::move(mu);
      result.optimal_actions = optimal_action_sets(mdp, result.values);
      return result;
    }
  }
  throw MaxIterationsExceeded(
      fmt::format("policy iteration did not stabilize within {} steps", max_iterations));
}

OptimalActionSets optimal_action_sets(const Mdp& mdp, const ValueFunction& J,
                                      double tolerance) {
  check_sizes(mdp, J);
  OptimalActionSets sets(mdp.num_states());
  for (StateId s = 0; s < mdp.num_states(); ++s) {
    std::vector<double> values(mdp.num_actions(s));
    for (ActionIndex a = 0; a < mdp.num_actions(s); ++a) values[a] = backup(mdp, s, a, J);
    const double best = *std::min_element(values.begin(), values.end());
    for (ActionIndex a = 0; a < mdp.num_actions(s); ++a) {
      if (values[a] <= best + tolerance) sets[s].push_back(a);
    }
  }
  return sets;
}

bool policy_is_optimal(const Policy& mu, const OptimalActionSets& sets,
                       const std::vector<bool>& relevant) {
  for (std::size_t s = 0; s < mu.size(); ++s) {
    if (!relevant.empty() && !relevant[s]) continue;
    if (!std::binary_search(sets[s].begin(), sets[s].end(), mu[s])) return false;
  }
  return true;
}

ReachProbabilities reach_probabilities(const Mdp& mdp, const Policy& mu,
                                       const InitialDistribution& p,
                                       const StructureReport& report) {
  check_policy(mdp, mu);
  if (!report.transient_acyclic_ok) {
    throw StructureViolation("reach probabilities need an acyclic transient part");
  }
  const int n = mdp.num_states();
  ReachProbabilities q(n, 0.0);
  std::vector<double> class_mass(report.recurrent_classes.size(), 0.0);
  for (StateId s = 0; s < n; ++s) {
    if (report.is_transient(s)) {
      q[s] = p[s];
    } else {
      class_mass[report.class_of[s]] += p[s];
    }
  }
  // Forward topological order. Each transient state is entered at most once,
  // so arrival events through distinct predecessors are disjoint.
  for (auto it = report.transient_order.rbegin(); it != report.transient_order.rend(); ++it) {
    const StateId s = *it;
    const Action& act = mdp.action(s, mu[s]);
    for (std::size_t k = 0; k < act.targets.size(); ++k) {
      const StateId t = act.targets[k];
      const double mass = q[s] * act.probabilities[k];
      if (report.is_transient(t)) {
        q[t] += mass;
      } else {
        class_mass[report.class_of[t]] += mass;
      }
    }
  }
  for (std::size_t c = 0; c < report.recurrent_classes.size(); ++c) {
    for (StateId s : report.recurrent_classes[c]) q[s] = std::min(1.0, class_mass[c]);
  }
  for (double& value : q) value = std::min(1.0, value);
  return q;
}

std::string solution_to_json(const PolicyIterationResult& result) {
  nlohmann::json doc;
  doc["J"] = result.values;
  doc["policy"] = result.policy;
  doc["optimal_action_sets"] = result.optimal_actions;
  return doc.dump(2) + "\n";
}

}  // namespace mcopi

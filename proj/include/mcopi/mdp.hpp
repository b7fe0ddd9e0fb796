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

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mcopi {

using StateId = int;
using ActionIndex = int;

// Tolerance on |sum of a probability vector - 1|.
inline constexpr double kProbabilitySumTolerance = 1e-12;

enum class ProblemKind { kDiscounted, kStochasticShortestPath, kNegaminGame };

// Selects the backup factor used by every Bellman operator: alpha for
// discounted problems, 1 for stochastic shortest path, -1 for the negamin
// form of an alternating game.
class ProblemClass {
 public:
  static ProblemClass discounted(double alpha);
  static ProblemClass stochastic_shortest_path() {
    return ProblemClass(ProblemKind::kStochasticShortestPath, 1.0);
  }
  static ProblemClass negamin_game() {
    return ProblemClass(ProblemKind::kNegaminGame, -1.0);
  }

  ProblemKind kind() const { return kind_; }
  double discount() const { return discount_; }
  bool is_discounted() const { return kind_ == ProblemKind::kDiscounted; }
  std::string name() const;

  friend bool operator==(const ProblemClass&, const ProblemClass&) = default;

 private:
  ProblemClass(ProblemKind kind, double discount)
      : kind_(kind), discount_(discount) {}

  ProblemKind kind_;
  double discount_;
};

// One action of one state. Targets are strictly increasing and every stored
// probability is > 0; zero entries are dropped on construction.
struct Action {
  double cost = 0.0;
  std::vector<StateId> targets;
  std::vector<double> probabilities;

  // Builds an action from (target, probability) pairs in any order.
  static Action from_pairs(double cost,
                           std::vector<std::pair<StateId, double>> pairs);
  double probability_to(StateId target) const;
};

// Finite MDP: dense states 0..n-1, a nonempty ordered action list per state,
// sparse transition kernels and deterministic costs. Immutable once built;
// the constructor enforces every invariant and throws InvariantViolation.
//
// Costs must be >= 0 except for the negamin game class, whose transformed
// costs carry the player sign.
class Mdp {
 public:
  Mdp(std::vector<std::vector<Action>> actions, ProblemClass problem_class);

  int num_states() const { return static_cast<int>(actions_.size()); }
  int num_actions(StateId s) const {
    return static_cast<int>(actions_[s].size());
  }
  std::span<const Action> actions(StateId s) const { return actions_[s]; }
  const Action& action(StateId s, ActionIndex a) const { return actions_[s][a]; }
  const ProblemClass& problem_class() const { return problem_class_; }
  double discount() const { return problem_class_.discount(); }

  // max |c(i,u)| over all state-action pairs.
  double max_abs_cost() const { return max_abs_cost_; }

  // True when every action of s returns to s with probability 1.
  bool is_absorbing(StateId s) const;

  // Same kernels, new class (costs are re-validated against it).
  Mdp with_problem_class(ProblemClass problem_class) const;
  // Same kernels and class, costs replaced state by state.
  Mdp with_costs(const std::vector<std::vector<double>>& costs) const;

 private:
  std::vector<std::vector<Action>> actions_;
  ProblemClass problem_class_;
  double max_abs_cost_ = 0.0;
};

// Distribution of the start state of every simulated trajectory.
class InitialDistribution {
 public:
  explicit InitialDistribution(std::vector<double> p);

  static InitialDistribution uniform(int num_states);
  static InitialDistribution point_mass(int num_states, StateId state);

  const std::vector<double>& probabilities() const { return p_; }
  double operator[](StateId s) const { return p_[s]; }
  int size() const { return static_cast<int>(p_.size()); }
  std::vector<StateId> support() const;

 private:
  std::vector<double> p_;
};

// Player tag of a game state; kTerminal marks the absorbing state 0.
enum class Player { kTerminal = 0, kMinimizer = 1, kMaximizer = 2 };

// Everything a model file can carry. `players` is filled only for
// problem_class "game".
struct MdpFile {
  Mdp mdp;
  InitialDistribution initial;
  std::vector<Player> players;
};

// Parses the JSON model format:
//   {"problem_class": "discounted"|"ssp"|"game", "alpha": 0.9,
//    "num_states": n, "initial": [...],
//    "states": [{"id": 0, "player": 1, "actions": [{"cost": 0.0,
//                "transitions": [[target, probability], ...]}]}, ...]}
// Throws ParseError (syntax/schema, with field path) or InvariantViolation.
MdpFile parse_mdp(const std::string& text);
MdpFile load_mdp(const std::filesystem::path& path);

// Clusters as listed in a cluster file: {"clusters": [[ids...], ...]}.
std::vector<std::vector<StateId>> parse_clusters(const std::string& text);
std::vector<std::vector<StateId>> load_clusters(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace mcopi

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

#include "mcopi/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "mcopi/errors.hpp"

namespace mcopi {

using json = nlohmann::json;

ProblemClass ProblemClass::discounted(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InvariantViolation(
        fmt::format("discount factor alpha = {} must lie strictly inside (0,1)", alpha));
  }
  return ProblemClass(ProblemKind::kDiscounted, alpha);
}

std::string ProblemClass::name() const {
  switch (kind_) {
    case ProblemKind::kDiscounted:
      return "discounted";
    case ProblemKind::kStochasticShortestPath:
      return "ssp";
    case ProblemKind::kNegaminGame:
      return "game";
  }
  return "unknown";
}

Action Action::from_pairs(double cost,
                          std::vector<std::pair<StateId, double>> pairs) {
  std::sort(pairs.begin(), pairs.end());
  Action action;
  action.cost = cost;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (k > 0 && pairs[k].first == pairs[k - 1].first) {
      throw InvariantViolation(
          fmt::format("duplicate transition target {}", pairs[k].first));
    }
    if (pairs[k].second > 0.0) {
      action.targets.push_back(pairs[k].first);
      action.probabilities.push_back(pairs[k].second);
    } else if (pairs[k].second < 0.0 || std::isnan(pairs[k].second)) {
      throw InvariantViolation(fmt::format("negative transition probability {} to state {}",
                                           pairs[k].second, pairs[k].first));
    }
  }
  return action;
}

double Action::probability_to(StateId target) const {
  auto it = std::lower_bound(targets.begin(), targets.end(), target);
  if (it == targets.end() || *it != target) return 0.0;
  return probabilities[it - targets.begin()];
}

Mdp::Mdp(std::vector<std::vector<Action>> actions, ProblemClass problem_class)
    : actions_(std::move(actions)), problem_class_(problem_class) {
  const int n = num_states();
  if (n <= 0) throw InvariantViolation("an MDP needs at least one state");
  const bool signed_costs = problem_class_.kind() == ProblemKind::kNegaminGame;
  for (StateId s = 0; s < n; ++s) {
    if (actions_[s].empty()) {
      throw InvariantViolation(fmt::format("state {} has no actions", s));
    }
    for (ActionIndex a = 0; a < num_actions(s); ++a) {
      const Action& act = actions_[s][a];
      if (!std::isfinite(act.cost)) {
        throw InvariantViolation(fmt::format("cost c({},{}) is not finite", s, a));
      }
      if (!signed_costs && act.cost < 0.0) {
        throw InvariantViolation(fmt::format(
            "cost c({},{}) = {} violates c(i,u) >= 0", s, a, act.cost));
      }
      if (act.targets.size() != act.probabilities.size()) {
        throw InvariantViolation(
            fmt::format("state {}, action {}: target/probability size mismatch", s, a));
      }
      double sum = 0.0;
      for (std::size_t k = 0; k < act.targets.size(); ++k) {
        if (act.targets[k] < 0 || act.targets[k] >= n) {
          throw InvariantViolation(fmt::format(
              "state {}, action {}: transition target {} out of range", s, a,
              act.targets[k]));
        }
        if (k > 0 && act.targets[k] <= act.targets[k - 1]) {
          throw InvariantViolation(fmt::format(
              "state {}, action {}: transition targets not strictly increasing", s, a));
        }
        if (!(act.probabilities[k] > 0.0)) {
          throw InvariantViolation(fmt::format(
              "state {}, action {}: stored probability must be positive", s, a));
        }
        sum += act.probabilities[k];
      }
      if (std::abs(sum - 1.0) > kProbabilitySumTolerance) {
        throw InvariantViolation(
            fmt::format("row sum {} ≠ 1 at state {}, action {}", sum, s, a));
      }
      max_abs_cost_ = std::max(max_abs_cost_, std::abs(act.cost));
    }
  }
}

bool Mdp::is_absorbing(StateId s) const {
  for (const Action& act : actions_[s]) {
    if (act.targets.size() != 1 || act.targets[0] != s) return false;
  }
  return true;
}

Mdp Mdp::with_problem_class(ProblemClass problem_class) const {
  return Mdp(actions_, problem_class);
}

Mdp Mdp::with_costs(const std::vector<std::vector<double>>& costs) const {
  auto actions = actions_;
  if (costs.size() != actions.size()) {
    throw InvariantViolation("cost table has the wrong number of states");
  }
  for (std::size_t s = 0; s < actions.size(); ++s) {
    if (costs[s].size() != actions[s].size()) {
      throw InvariantViolation(
          fmt::format("cost table has the wrong number of actions at state {}", s));
    }
    for (std::size_t a = 0; a < actions[s].size(); ++a) actions[s][a].cost = costs[s][a];
  }
  return Mdp(std::move(actions), problem_class_);
}

InitialDistribution::InitialDistribution(std::vector<double> p) : p_(std::move(p)) {
  if (p_.empty()) throw InvariantViolation("initial distribution is empty");
  double sum = 0.0;
  for (std::size_t s = 0; s < p_.size(); ++s) {
    if (!(p_[s] >= 0.0) || !std::isfinite(p_[s])) {
      throw InvariantViolation(
          fmt::format("initial probability p({}) = {} must be >= 0", s, p_[s]));
    }
    sum += p_[s];
  }
  if (std::abs(sum - 1.0) > kProbabilitySumTolerance) {
    throw InvariantViolation(fmt::format("initial distribution sums to {} ≠ 1", sum));
  }
}

InitialDistribution InitialDistribution::uniform(int num_states) {
  return InitialDistribution(std::vector<double>(num_states, 1.0 / num_states));
}

InitialDistribution InitialDistribution::point_mass(int num_states, StateId state) {
  std::vector<double> p(num_states, 0.0);
  p.at(state) = 1.0;
  return InitialDistribution(std::move(p));
}

std::vector<StateId> InitialDistribution::support() const {
  std::vector<StateId> out;
  for (StateId s = 0; s < size(); ++s) {
    if (p_[s] > 0.0) out.push_back(s);
  }
  return out;
}

namespace {

const json& require(const json& object, const char* key, const std::string& where) {
  if (!object.is_object()) throw ParseError(fmt::format("{}: expected an object", where));
  auto it = object.find(key);
  if (it == object.end()) {
    throw ParseError(fmt::format("{}: missing field \"{}\"", where, key));
  }
  return *it;
}

double as_number(const json& value, const std::string& where) {
  if (!value.is_number()) throw ParseError(fmt::format("{}: expected a number", where));
  return value.get<double>();
}

int as_index(const json& value, const std::string& where) {
  if (!value.is_number_integer()) {
    throw ParseError(fmt::format("{}: expected an integer", where));
  }
  return value.get<int>();
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("JSON syntax error: {}", e.what()));
  }
}

}  // namespace

MdpFile parse_mdp(const std::string& text) {
  const json doc = parse_json(text);
  const json& cls_field = require(doc, "problem_class", "root");
  if (!cls_field.is_string()) throw ParseError("problem_class: expected a string");
  const std::string cls = cls_field.get<std::string>();
  const bool is_game = cls == "game";

  std::optional<ProblemClass> problem_class;
  if (cls == "discounted") {
    problem_class = ProblemClass::discounted(as_number(require(doc, "alpha", "root"), "alpha"));
  } else if (cls == "ssp") {
    problem_class = ProblemClass::stochastic_shortest_path();
  } else if (is_game) {
    problem_class = ProblemClass::negamin_game();
  } else {
    throw ParseError(fmt::format(
        "problem_class: unknown value \"{}\" (expected discounted, ssp or game)", cls));
  }

  const int n = as_index(require(doc, "num_states", "root"), "num_states");
  if (n <= 0) throw ParseError("num_states: must be positive");

  const json& states = require(doc, "states", "root");
  if (!states.is_array() || static_cast<int>(states.size()) != n) {
    throw ParseError(fmt::format("states: expected an array of {} entries", n));
  }
  std::vector<std::vector<Action>> actions(n);
  std::vector<Player> players(is_game ? n : 0, Player::kTerminal);
  std::vector<bool> seen(n, false);
  for (std::size_t k = 0; k < states.size(); ++k) {
    const std::string where = fmt::format("states[{}]", k);
    const json& entry = states[k];
    const int id = as_index(require(entry, "id", where), where + ".id");
    if (id < 0 || id >= n) throw ParseError(fmt::format("{}.id: {} out of range", where, id));
    if (seen[id]) throw ParseError(fmt::format("{}.id: duplicate state id {}", where, id));
    seen[id] = true;
    if (is_game) {
      if (auto it = entry.find("player"); it != entry.end()) {
        const int player = as_index(*it, where + ".player");
        if (player < 0 || player > 2) {
          throw ParseError(fmt::format("{}.player: expected 1 or 2", where));
        }
        players[id] = static_cast<Player>(player);
      } else if (id != 0) {
        throw ParseError(fmt::format("{}: missing field \"player\"", where));
      }
    }
    const json& acts = require(entry, "actions", where);
    if (!acts.is_array()) throw ParseError(where + ".actions: expected an array");
    for (std::size_t a = 0; a < acts.size(); ++a) {
      const std::string awhere = fmt::format("{}.actions[{}]", where, a);
      const double cost = as_number(require(acts[a], "cost", awhere), awhere + ".cost");
      const json& trans = require(acts[a], "transitions", awhere);
      if (!trans.is_array()) throw ParseError(awhere + ".transitions: expected an array");
      std::vector<std::pair<StateId, double>> pairs;
      for (std::size_t t = 0; t < trans.size(); ++t) {
        const std::string twhere = fmt::format("{}.transitions[{}]", awhere, t);
        if (!trans[t].is_array() || trans[t].size() != 2) {
          throw ParseError(twhere + ": expected [target, probability]");
        }
        const int target = as_index(trans[t][0], twhere + "[0]");
        if (target < 0 || target >= n) {
          throw ParseError(fmt::format("{}: target {} out of range", twhere, target));
        }
        pairs.emplace_back(target, as_number(trans[t][1], twhere + "[1]"));
      }
      try {
        actions[id].push_back(Action::from_pairs(cost, std::move(pairs)));
      } catch (const InvariantViolation& e) {
        throw InvariantViolation(fmt::format("state {}, action {}: {}", id, a, e.what()));
      }
    }
  }

  const json& initial = require(doc, "initial", "root");
  if (!initial.is_array() || static_cast<int>(initial.size()) != n) {
    throw ParseError(fmt::format("initial: expected an array of {} probabilities", n));
  }
  std::vector<double> p(n);
  for (int s = 0; s < n; ++s) p[s] = as_number(initial[s], fmt::format("initial[{}]", s));

  return MdpFile{Mdp(std::move(actions), *problem_class), InitialDistribution(std::move(p)),
                 std::move(players)};
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(fmt::format("cannot open file {}", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

MdpFile load_mdp(const std::filesystem::path& path) {
  return parse_mdp(read_text_file(path));
}

std::vector<std::vector<StateId>> parse_clusters(const std::string& text) {
  const json doc = parse_json(text);
  const json& clusters = require(doc, "clusters", "root");
  if (!clusters.is_array()) throw ParseError("clusters: expected an array");
  std::vector<std::vector<StateId>> out;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const std::string where = fmt::format("clusters[{}]", c);
    if (!clusters[c].is_array()) throw ParseError(where + ": expected an array of ids");
    std::vector<StateId> members;
    for (std::size_t k = 0; k < clusters[c].size(); ++k) {
      members.push_back(as_index(clusters[c][k], fmt::format("{}[{}]", where, k)));
    }
    out.push_back(std::move(members));
  }
  return out;
}

std::vector<std::vector<StateId>> load_clusters(const std::filesystem::path& path) {
  return parse_clusters(read_text_file(path));
}

}  // namespace mcopi

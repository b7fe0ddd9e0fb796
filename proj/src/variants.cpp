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

#include "mcopi/variants.hpp"

#include <cmath>
#include <limits>

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

std::vector<std::string> validate_ssp(const Mdp& mdp, const StructureReport& report) {
  std::vector<std::string> violations;
  if (report.recurrent_classes.size() != 1) {
    violations.push_back(fmt::format(
        "unique absorbing state: found {} recurrent classes", report.recurrent_classes.size()));
  }
  for (const auto& members : report.recurrent_classes) {
    if (members.size() != 1 || !mdp.is_absorbing(members[0])) {
      violations.push_back(
          fmt::format("unique absorbing state: recurrent class {} is not a single absorbing state",
                      members));
    } else if (members[0] != 0) {
      violations.push_back(
          fmt::format("unique absorbing state: absorbing state is {}, expected 0", members[0]));
    }
  }
  if (mdp.num_states() > 0 && mdp.is_absorbing(0)) {
    for (ActionIndex a = 0; a < mdp.num_actions(0); ++a) {
      if (mdp.action(0, a).cost != 0.0) {
        violations.push_back(fmt::format(
            "absorbing state 0 incurs a cost of 0 under every action: c(0,{}) = {}", a,
            mdp.action(0, a).cost));
      }
    }
  }
  if (!report.common_support_ok) {
    violations.push_back("all actions of a state must share one transition support");
  }
  if (!report.transient_acyclic_ok) {
    for (const auto& cycle : report.transient_cycles) {
      violations.push_back(fmt::format("non-absorbing states must be acyclic: cycle {}", cycle));
    }
  }
  return violations;
}

RunResult run_opi_ssp(const Mdp& mdp, const InitialDistribution& p, const OpiConfig& config,
                      const OptimalityOracle& oracle) {
  if (mdp.problem_class().kind() != ProblemKind::kStochasticShortestPath) {
    throw InvariantViolation("run_opi_ssp needs an MDP of class ssp");
  }
  const auto violations = validate_ssp(mdp, analyze_structure(mdp, p));
  if (!violations.empty()) throw StructureViolation(join(violations));
  return run_opi(mdp, p, config, oracle);
}

std::vector<std::string> game_violations(const Mdp& mdp, const std::vector<Player>& players) {
  std::vector<std::string> violations;
  const int n = mdp.num_states();
  if (mdp.problem_class().kind() != ProblemKind::kNegaminGame) {
    violations.push_back("game MDP must use the game problem class");
  }
  if (static_cast<int>(players.size()) != n) {
    violations.push_back(fmt::format("expected {} player tags, got {}", n, players.size()));
    return violations;
  }
  if (!mdp.is_absorbing(0)) {
    violations.push_back("state 0 must be absorbing");
  } else {
    for (ActionIndex a = 0; a < mdp.num_actions(0); ++a) {
      if (mdp.action(0, a).cost != 0.0) {
        violations.push_back(fmt::format("terminal state 0 must cost 0: c(0,{}) = {}", a,
                                         mdp.action(0, a).cost));
      }
    }
  }
  if (players[0] != Player::kTerminal) violations.push_back("state 0 must be the terminal");
  for (StateId s = 1; s < n; ++s) {
    if (players[s] == Player::kTerminal) {
      violations.push_back(fmt::format("state {} needs player 1 or 2", s));
    }
  }
  const ReachabilityGraph graph = build_reachability_graph(mdp);
  for (StateId s = 1; s < n; ++s) {
    for (StateId t : graph.successors[s]) {
      if (t != 0 && players[t] == players[s]) {
        violations.push_back(fmt::format(
            "player {} moves twice in a row on edge ({},{})", static_cast<int>(players[s]), s, t));
      }
    }
  }
  const StructureReport report = decompose_structure(graph, std::nullopt);
  if (!report.common_support_ok) {
    violations.push_back("all actions of a state must share one transition support");
  }
  if (!report.transient_acyclic_ok) violations.push_back("game graph must be acyclic");
  if (report.recurrent_classes.size() != 1) {
    violations.push_back("play must always end in the terminal state 0");
  }
  return violations;
}

GameSpec::GameSpec(Mdp mdp, std::vector<Player> players)
    : mdp_(std::move(mdp)), players_(std::move(players)) {
  const auto violations = game_violations(mdp_, players_);
  if (!violations.empty()) throw InvariantViolation("invalid game: " + join(violations));
}

GameFile parse_game(const std::string& text) {
  MdpFile file = parse_mdp(text);
  if (file.mdp.problem_class().kind() != ProblemKind::kNegaminGame) {
    throw ParseError("problem_class: a game file needs \"game\"");
  }
  return GameFile{GameSpec(std::move(file.mdp), std::move(file.players)),
                  std::move(file.initial)};
}

GameFile load_game(const std::filesystem::path& path) {
  return parse_game(read_text_file(path));
}

ValueFunction NegaminTransform::recover(const ValueFunction& negamin_values) const {
  ValueFunction out(negamin_values.size());
  for (std::size_t s = 0; s < out.size(); ++s) out[s] = form.sign[s] * negamin_values[s];
  return out;
}

ValueFunction NegaminTransform::to_negamin(const ValueFunction& values) const {
  return recover(values);  // sigma is its own inverse
}

NegaminTransform negamin_transform(const GameSpec& game) {
  const Mdp& mdp = game.mdp();
  NegaminForm form;
  form.costs.resize(mdp.num_states());
  form.sign.resize(mdp.num_states());
  for (StateId s = 0; s < mdp.num_states(); ++s) {
    form.sign[s] = game.sign(s);
    for (const Action& act : mdp.actions(s)) form.costs[s].push_back(form.sign[s] * act.cost);
  }
  Mdp transformed = mdp.with_costs(form.costs);
  return NegaminTransform{std::move(form), std::move(transformed)};
}

ValueFunction minimax_backup(const GameSpec& game, const ValueFunction& J) {
  const Mdp& mdp = game.mdp();
  ValueFunction out(mdp.num_states());
  for (StateId s = 0; s < mdp.num_states(); ++s) {
    const bool maximize = game.player(s) == Player::kMaximizer;
    double best = maximize ? -std::numeric_limits<double>::infinity()
                           : std::numeric_limits<double>::infinity();
    for (const Action& act : mdp.actions(s)) {
      double expected = 0.0;
      for (std::size_t k = 0; k < act.targets.size(); ++k) {
        expected += act.probabilities[k] * J[act.targets[k]];
      }
      const double value = act.cost + expected;
      best = maximize ? std::max(best, value) : std::min(best, value);
    }
    out[s] = best;
  }
  return out;
}

ValueFunction solve_game_exact(const GameSpec& game) {
  const Mdp& mdp = game.mdp();
  const StructureReport report = analyze_structure(mdp, std::nullopt);
  ValueFunction values(mdp.num_states(), 0.0);
  for (StateId s : report.transient_order) {
    // Successors precede s in the stored order, so one sweep is exact.
    values[s] = minimax_backup(game, values)[s];
  }

  const NegaminTransform transform = negamin_transform(game);
  const ValueFunction negamin = value_iteration(transform.mdp, 0.0);
  const ValueFunction recovered = transform.recover(negamin);
  const double gap = sup_norm_distance(recovered, values);
  if (gap > 1e-12) {
    throw InvariantViolation(
        fmt::format("minimax and negamin backward induction disagree by {}", gap));
  }
  return values;
}

OptimalityOracle game_oracle(const GameSpec& game) {
  return OptimalityOracle::from(policy_iteration(negamin_transform(game).mdp));
}

GameRunResult run_opi_game(const GameSpec& game, const InitialDistribution& p,
                           const OpiConfig& config, const OptimalityOracle& oracle) {
  const NegaminTransform transform = negamin_transform(game);
  GameRunResult out;
  out.negamin = run_opi(transform.mdp, p, config, oracle);
  out.recovered = transform.recover(out.negamin.J);
  if (!oracle.jstar.empty()) {
    out.recovered_sup_error =
        sup_norm_distance(out.recovered, transform.recover(oracle.jstar));
  }
  return out;
}

}  // namespace mcopi

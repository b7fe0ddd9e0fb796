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

// Undiscounted variants: stochastic shortest path problems and alternating
// two-player zero-sum games solved through their negamin form.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mcopi/mdp.hpp"
#include "mcopi/opi.hpp"
#include "mcopi/solvers.hpp"
#include "mcopi/structure.hpp"

namespace mcopi {

// Lists every violated clause of the SSP structure: a unique absorbing state,
// which is state 0 and costs 0 under every action, common supports, and an
// acyclic remainder. Empty means valid.
std::vector<std::string> validate_ssp(const Mdp& mdp, const StructureReport& report);

// validate_ssp, then run_opi with discount 1. Throws StructureViolation on an
// invalid structure.
RunResult run_opi_ssp(const Mdp& mdp, const InitialDistribution& p, const OpiConfig& config,
                      const OptimalityOracle& oracle);

// Alternating game: player 1 minimizes, player 2 maximizes, no player moves
// twice in a row, and play ends in the absorbing state 0. `mdp` holds the
// raw costs c(i,u) under the negamin class.
class GameSpec {
 public:
  // Throws InvariantViolation listing every broken game invariant.
  GameSpec(Mdp mdp, std::vector<Player> players);

  const Mdp& mdp() const { return mdp_; }
  const std::vector<Player>& players() const { return players_; }
  Player player(StateId s) const { return players_[s]; }
  // +1 for player 1 and the terminal state, -1 for player 2.
  double sign(StateId s) const { return players_[s] == Player::kMaximizer ? -1.0 : 1.0; }

 private:
  Mdp mdp_;
  std::vector<Player> players_;
};

// Empty when (mdp, players) forms a valid alternating game.
std::vector<std::string> game_violations(const Mdp& mdp, const std::vector<Player>& players);

struct GameFile {
  GameSpec game;
  InitialDistribution initial;
};
GameFile load_game(const std::filesystem::path& path);
GameFile parse_game(const std::string& text);

// c'(i,u) = sigma(i) c(i,u) with sigma = +1 on player-1 states and -1 on
// player-2 states.
struct NegaminForm {
  std::vector<std::vector<double>> costs;
  std::vector<double> sign;
};

struct NegaminTransform {
  NegaminForm form;
  Mdp mdp;  // costs c', backup factor -1

  // J*(i) = sigma(i) J'(i).
  ValueFunction recover(const ValueFunction& negamin_values) const;
  // J'(i) = sigma(i) J*(i).
  ValueFunction to_negamin(const ValueFunction& values) const;
};

NegaminTransform negamin_transform(const GameSpec& game);

// (TJ)(i) = min_u [c + sum P J] on player-1 states, max_u on player-2 states.
ValueFunction minimax_backup(const GameSpec& game, const ValueFunction& J);

// Minimax values by backward induction with explicit min/max. Cross-checked
// against sigma times the negamin backward induction; a disagreement above
// 1e-12 throws InvariantViolation.
ValueFunction solve_game_exact(const GameSpec& game);

// Oracle for runs on the negamin form.
OptimalityOracle game_oracle(const GameSpec& game);

struct GameRunResult {
  RunResult negamin;         // J' and run statistics
  ValueFunction recovered;   // sigma J'
  std::optional<double> recovered_sup_error;  // |sigma J' - J*|_inf
};

// OPI on the negamin form: pure minimization with alternating-sign tails.
GameRunResult run_opi_game(const GameSpec& game, const InitialDistribution& p,
                           const OpiConfig& config, const OptimalityOracle& oracle);

}  // namespace mcopi

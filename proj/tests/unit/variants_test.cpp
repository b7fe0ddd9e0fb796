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

#include <gtest/gtest.h>

#include "mcopi/errors.hpp"
#include "mcopi/solvers.hpp"
#include "mcopi/structure.hpp"
#include "support/instances.hpp"

namespace mcopi {
namespace {

using testing::chain_mdp;

bool mentions(const std::vector<std::string>& violations, const std::string& needle) {
  for (const auto& v : violations) {
    if (v.find(needle) != std::string::npos) return true;
  }
  return false;
}

// Root state 1 owned by `root` with two actions into terminal 0 costing a
// and b.
GameSpec two_choice_game(Player root, double a, double b) {
  std::vector<std::vector<Action>> actions(2);
  actions[0].push_back(Action::from_pairs(0.0, {{0, 1.0}}));
  actions[1].push_back(Action::from_pairs(a, {{0, 1.0}}));
  actions[1].push_back(Action::from_pairs(b, {{0, 1.0}}));
  return GameSpec(Mdp(std::move(actions), ProblemClass::negamin_game()),
                  {Player::kTerminal, root});
}

// 2 (player 1) -> 1 (player 2) -> 0.
GameSpec two_ply_game(double c1, double c2) {
  std::vector<std::vector<Action>> actions(3);
  actions[0].push_back(Action::from_pairs(0.0, {{0, 1.0}}));
  actions[1].push_back(Action::from_pairs(c2, {{0, 1.0}}));
  actions[2].push_back(Action::from_pairs(c1, {{1, 1.0}}));
  return GameSpec(Mdp(std::move(actions), ProblemClass::negamin_game()),
                  {Player::kTerminal, Player::kMaximizer, Player::kMinimizer});
}

TEST(SspTest, ValidateExamples) {
  const Mdp chain = chain_mdp(ProblemClass::stochastic_shortest_path());
  EXPECT_TRUE(validate_ssp(chain, analyze_structure(chain, std::nullopt)).empty());

  std::vector<std::vector<Action>> two_sinks(3);
  two_sinks[0].push_back(Action::from_pairs(0.0, {{0, 1.0}}));
  two_sinks[1].push_back(Action::from_pairs(0.0, {{1, 1.0}}));
  two_sinks[2].push_back(Action::from_pairs(1.0, {{0, 0.5}, {1, 0.5}}));
  const Mdp sinks(std::move(two_sinks), ProblemClass::stochastic_shortest_path());
  EXPECT_TRUE(mentions(validate_ssp(sinks, analyze_structure(sinks, std::nullopt)),
                       "unique absorbing state"));

  std::vector<std::vector<Action>> costly(2);
  costly[0].push_back(Action::from_pairs(1.0, {{0, 1.0}}));
  costly[1].push_back(Action::from_pairs(1.0, {{0, 1.0}}));
  const Mdp paid(std::move(costly), ProblemClass::stochastic_shortest_path());
  EXPECT_TRUE(mentions(validate_ssp(paid, analyze_structure(paid, std::nullopt)),
                       "incurs a cost of 0"));
  EXPECT_THROW(run_opi_ssp(paid, InitialDistribution::point_mass(2, 1), OpiConfig{}, {}),
               StructureViolation);
}

TEST(SspTest, ChainValues) {
  const Mdp chain = chain_mdp(ProblemClass::stochastic_shortest_path());
  EXPECT_EQ(policy_iteration(chain).values, ValueFunction({0, 1, 3}));
  OpiConfig config;
  config.max_iterations = 5;
  const auto run = run_opi_ssp(chain, InitialDistribution::point_mass(3, 2), config,
                               OptimalityOracle::from(policy_iteration(chain)));
  EXPECT_LT(sup_norm_distance(run.J, {0, 1, 3}), 1e-12);
}

TEST(SspTest, ZeroCostStaysZero) {
  Rng rng(2);
  const auto inst = testing::random_dag_mdp(rng, 12, 3, ProblemClass::stochastic_shortest_path());
  std::vector<std::vector<double>> zeros(12);
  for (StateId s = 0; s < 12; ++s) zeros[s].assign(inst.mdp.num_actions(s), 0.0);
  const Mdp zero = inst.mdp.with_costs(zeros);
  EXPECT_EQ(policy_iteration(zero).values, ValueFunction(12, 0.0));
  OpiConfig config;
  config.max_iterations = 200;
  config.observer = [](const OpiRunState& state) {
    for (double v : state.J) ASSERT_EQ(v, 0.0);
  };
  run_opi_ssp(zero, inst.p, config, {});
}

TEST(SspTest, TrajectoriesAbsorbWithinTransientCount) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst =
        testing::random_dag_mdp(rng, 15, 3, ProblemClass::stochastic_shortest_path());
    const Policy mu = greedy_policy(inst.mdp, ValueFunction(15, 0.0));
    for (int k = 0; k < 20; ++k) {
      const StateId start = 1 + static_cast<StateId>(rng.next_u64() % 14);
      const Trajectory traj = simulate_trajectory(inst.mdp, mu, start, rng, 1e-6);
      EXPECT_EQ(traj.termination, Termination::kAbsorbed);
      EXPECT_LE(traj.steps.size(), 15u);
    }
  }
}

TEST(SspTest, NearOneDiscountMatchesUndiscountedOracle) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst =
        testing::random_dag_mdp(rng, 10, 3, ProblemClass::stochastic_shortest_path());
    const auto ssp = policy_iteration(inst.mdp).values;
    const auto near = policy_iteration(
        inst.mdp.with_problem_class(ProblemClass::discounted(1.0 - 1e-15))).values;
    EXPECT_LT(sup_norm_distance(ssp, near), 1e-10);
  }
}

TEST(GameTest, InvariantsEnforced) {
  // Player 1 moving into another player-1 state.
  std::vector<std::vector<Action>> actions(3);
  actions[0].push_back(Action::from_pairs(0.0, {{0, 1.0}}));
  actions[1].push_back(Action::from_pairs(1.0, {{0, 1.0}}));
  actions[2].push_back(Action::from_pairs(1.0, {{1, 1.0}}));
  const Mdp mdp(std::move(actions), ProblemClass::negamin_game());
  const std::vector<Player> same = {Player::kTerminal, Player::kMinimizer, Player::kMinimizer};
  EXPECT_FALSE(game_violations(mdp, same).empty());
  EXPECT_THROW(GameSpec(mdp, same), InvariantViolation);
  EXPECT_NO_THROW(
      GameSpec(mdp, {Player::kTerminal, Player::kMinimizer, Player::kMaximizer}));
  EXPECT_THROW(GameSpec(mdp.with_problem_class(ProblemClass::stochastic_shortest_path()),
                        {Player::kTerminal, Player::kMinimizer, Player::kMaximizer}),
               InvariantViolation);
}

TEST(GameTest, NegaminTransformExamples) {
  const GameSpec game = two_ply_game(3.0, 3.0);
  const auto t = negamin_transform(game);
  EXPECT_EQ(t.form.costs[2][0], 3.0);
  EXPECT_EQ(t.form.costs[1][0], -3.0);
  EXPECT_EQ(t.form.sign, std::vector<double>({1, -1, 1}));
  EXPECT_EQ(t.mdp.discount(), -1.0);
  for (StateId s = 0; s < 3; ++s) {
    EXPECT_EQ(t.form.sign[s] * t.form.costs[s][0], game.mdp().action(s, 0).cost);
  }
  const ValueFunction J = {0.0, 1.5, -2.0};
  EXPECT_EQ(t.recover(t.to_negamin(J)), J);
}

TEST(GameTest, SingleChoiceExamples) {
  EXPECT_EQ(solve_game_exact(two_choice_game(Player::kMinimizer, 3, 5))[1], 3.0);
  EXPECT_EQ(solve_game_exact(two_choice_game(Player::kMaximizer, 3, 5))[1], 5.0);
}

TEST(GameTest, TwoPlyNegaminValues) {
  const GameSpec game = two_ply_game(1.0, 2.0);
  const auto t = negamin_transform(game);
  const auto jprime = policy_iteration(t.mdp).values;
  EXPECT_EQ(jprime, ValueFunction({0, -2, 3}));
  EXPECT_EQ(solve_game_exact(game), ValueFunction({0, 2, 3}));
  OpiConfig config;
  config.max_iterations = 3;
  const auto run = run_opi_game(game, InitialDistribution::point_mass(3, 2), config,
                                game_oracle(game));
  EXPECT_EQ(run.negamin.J, ValueFunction({0, -2, 3}));
  EXPECT_EQ(run.recovered, ValueFunction({0, 2, 3}));
  EXPECT_EQ(run.recovered_sup_error, 0.0);
}

TEST(GameTest, ZeroCostGame) {
  const GameSpec game = two_ply_game(0.0, 0.0);
  EXPECT_EQ(solve_game_exact(game), ValueFunction(3, 0.0));
  const auto run = run_opi_game(game, InitialDistribution::point_mass(3, 2), OpiConfig{},
                                game_oracle(game));
  EXPECT_EQ(run.negamin.J, ValueFunction(3, 0.0));
}

TEST(GameTest, MatchesBruteForceMinimax) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = testing::random_game(rng, 4 + static_cast<int>(rng.next_u64() % 5), 3);
    const auto exact = solve_game_exact(inst.game);
    const auto brute = testing::brute_force_minimax(inst.game);
    for (StateId s = 0; s < inst.game.mdp().num_states(); ++s) {
      EXPECT_EQ(exact[s], brute[s]) << "state " << s;
      // Nonnegative costs keep every value nonnegative.
      EXPECT_GE(exact[s], 0.0);
    }
  }
}

TEST(GameTest, NegaminEquivalenceOnVectorsWithZeroTerminal) {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = testing::random_game(rng, 6, 3);
    const auto t = negamin_transform(inst.game);
    ValueFunction J(inst.game.mdp().num_states());
    for (double& v : J) v = 10 * rng.uniform() - 5;
    J[0] = 0.0;
    const auto direct = minimax_backup(inst.game, J);
    const auto via = t.recover(apply_bellman(t.mdp, t.to_negamin(J)).values);
    for (std::size_t s = 0; s < J.size(); ++s) EXPECT_NEAR(via[s], direct[s], 1e-12);
  }
}

TEST(GameTest, ShippedGameFile) {
  const GameFile file = load_game(MCOPI_DATA_DIR "/game.json");
  const auto exact = solve_game_exact(file.game);
  const auto brute = testing::brute_force_minimax(file.game);
  for (std::size_t s = 0; s < exact.size(); ++s) EXPECT_NEAR(exact[s], brute[s], 1e-12);
}

}  // namespace
}  // namespace mcopi

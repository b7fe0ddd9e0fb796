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

#include <cmath>

#include <gtest/gtest.h>

#include "mcopi/errors.hpp"
#include "mcopi/structure.hpp"
#include "support/instances.hpp"

namespace mcopi {
namespace {

using testing::chain_mdp;

Trajectory make_trajectory(const std::vector<std::pair<StateId, double>>& states_costs) {
  Trajectory traj;
  for (const auto& [s, c] : states_costs) traj.steps.push_back({s, 0, c});
  return traj;
}

OptimalityOracle oracle_for(const Mdp& mdp) {
  return OptimalityOracle::from(policy_iteration(mdp));
}

// States 1..k each have two actions straight into absorbing state 0.
Mdp one_step_mdp(Rng& rng, int k, double alpha) {
  std::vector<std::vector<Action>> actions(k + 1);
  actions[0].push_back(Action::from_pairs(0.0, {{0, 1.0}}));
  for (int s = 1; s <= k; ++s) {
    actions[s].push_back(Action::from_pairs(rng.uniform(), {{0, 1.0}}));
    actions[s].push_back(Action::from_pairs(rng.uniform(), {{0, 1.0}}));
  }
  return Mdp(std::move(actions), ProblemClass::discounted(alpha));
}

TEST(HorizonTest, SelfLoopExample) {
  const Mdp loop({{Action::from_pairs(1.0, {{0, 1.0}})}}, ProblemClass::discounted(0.9));
  EXPECT_EQ(truncation_horizon(loop, 1e-6), 153);
  EXPECT_EQ(truncation_horizon(chain_mdp(ProblemClass::stochastic_shortest_path()), 1e-6), 0);
  // A huge bias still yields at least one step.
  EXPECT_EQ(truncation_horizon(loop, 1e6), 1);

  Rng rng(1);
  const Trajectory traj = simulate_trajectory(loop, {0}, 0, rng, 1e-6);
  EXPECT_EQ(traj.termination, Termination::kTruncated);
  EXPECT_EQ(traj.horizon, 153);
  EXPECT_EQ(traj.steps.size(), 153u);
  // Omitted tail alpha^H c_max / (1 - alpha) stays below the bias.
  EXPECT_LE(std::pow(0.9, 153) * 1.0 / 0.1, 1e-6);
  EXPECT_GT(std::pow(0.9, 152) * 1.0 / 0.1, 1e-6);
}

TEST(SimulateTest, DeterministicChain) {
  Rng rng(3);
  const Trajectory traj =
      simulate_trajectory(chain_mdp(ProblemClass::discounted(0.9)), {0, 0, 0}, 2, rng, 1e-6);
  ASSERT_EQ(traj.steps.size(), 3u);
  EXPECT_EQ(traj.steps[0].state, 2);
  EXPECT_EQ(traj.steps[0].cost, 2.0);
  EXPECT_EQ(traj.steps[1].state, 1);
  EXPECT_EQ(traj.steps[1].cost, 1.0);
  EXPECT_EQ(traj.steps[2].state, 0);
  EXPECT_EQ(traj.steps[2].cost, 0.0);
  EXPECT_EQ(traj.termination, Termination::kAbsorbed);
  EXPECT_EQ(traj.absorbed_at, 2u);
}

TEST(SimulateTest, BranchFrequencies) {
  std::vector<std::vector<Action>> actions(3);
  actions[0].push_back(Action::from_pairs(0.0, {{0, 1.0}}));
  actions[1].push_back(Action::from_pairs(0.0, {{0, 1.0}}));
  actions[2].push_back(Action::from_pairs(1.0, {{0, 0.6}, {1, 0.4}}));
  const Mdp mdp(std::move(actions), ProblemClass::discounted(0.9));
  Rng rng(11);
  const long samples = 100'000;
  long to_zero = 0;
  for (long k = 0; k < samples; ++k) {
    const Trajectory traj = simulate_trajectory(mdp, {0, 0, 0}, 2, rng, 1e-6);
    if (traj.steps[1].state == 0) ++to_zero;
  }
  const double sigma = std::sqrt(0.6 * 0.4 / samples);
  EXPECT_NEAR(static_cast<double>(to_zero) / samples, 0.6, 3 * sigma);
}

TEST(SimulateTest, StepsFollowGraphAndCosts) {
  Rng gen(8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = testing::random_discounted_mdp(gen, {});
    const auto graph = build_reachability_graph(inst.mdp);
    Policy mu(inst.mdp.num_states());
    for (StateId s = 0; s < inst.mdp.num_states(); ++s) {
      mu[s] = static_cast<ActionIndex>(gen.next_u64() % inst.mdp.num_actions(s));
    }
    const StateId start = static_cast<StateId>(gen.next_u64() % inst.mdp.num_states());
    const Trajectory traj = simulate_trajectory(inst.mdp, mu, start, gen, 1e-3);
    EXPECT_EQ(traj.steps.front().state, start);
    for (std::size_t k = 0; k < traj.steps.size(); ++k) {
      const auto& step = traj.steps[k];
      EXPECT_EQ(step.action, mu[step.state]);
      EXPECT_EQ(step.cost, inst.mdp.action(step.state, step.action).cost);
      if (k + 1 < traj.steps.size()) {
        EXPECT_TRUE(graph.has_edge(step.state, traj.steps[k + 1].state));
      }
    }
  }
}

TEST(SimulateTest, UndiscountedCycleThrows) {
  std::vector<std::vector<Action>> actions(3);
  actions[0].push_back(Action::from_pairs(0.0, {{0, 1.0}}));
  actions[1].push_back(Action::from_pairs(1.0, {{2, 1.0}}));
  actions[2].push_back(Action::from_pairs(1.0, {{1, 1.0}}));
  const Mdp mdp(std::move(actions), ProblemClass::stochastic_shortest_path());
  Rng rng(0);
  EXPECT_THROW(simulate_trajectory(mdp, {0, 0, 0}, 1, rng, 1e-6), HorizonWithoutAbsorption);
}

TEST(TailTest, ChainExample) {
  const auto tails = first_visit_tail_costs(make_trajectory({{2, 2.0}, {1, 1.0}, {0, 0.0}}), 0.9);
  EXPECT_DOUBLE_EQ(*tails.estimate(2), 2.9);
  EXPECT_DOUBLE_EQ(*tails.estimate(1), 1.0);
  EXPECT_DOUBLE_EQ(*tails.estimate(0), 0.0);
  EXPECT_EQ(tails.states, std::vector<StateId>({2, 1, 0}));
  EXPECT_EQ(*tails.first_visit(1), 1u);
  EXPECT_FALSE(tails.estimate(5).has_value());
}

TEST(TailTest, RevisitUsesFirstVisit) {
  const auto tails =
      first_visit_tail_costs(make_trajectory({{3, 1.0}, {4, 2.0}, {3, 1.0}, {4, 2.0}}), 0.5);
  EXPECT_EQ(tails.size(), 2u);
  EXPECT_DOUBLE_EQ(*tails.estimate(3), 1.0 + 0.5 * 2.0 + 0.25 * 1.0 + 0.125 * 2.0);
  EXPECT_DOUBLE_EQ(*tails.estimate(4), 2.0 + 0.5 * 1.0 + 0.25 * 2.0);
  EXPECT_EQ(*tails.first_visit(4), 1u);
}

TEST(TailTest, NegaminAlternatingSum) {
  const auto tails = first_visit_tail_costs(make_trajectory({{2, 3.0}, {1, -1.0}, {0, 0.0}}), -1.0);
  EXPECT_DOUBLE_EQ(*tails.estimate(2), 4.0);
  EXPECT_DOUBLE_EQ(*tails.estimate(1), -1.0);
}

TEST(OpiIterationTest, FullStepOverwrite) {
  const Mdp chain = chain_mdp(ProblemClass::discounted(0.9));
  const auto p = InitialDistribution::point_mass(3, 2);
  OpiConfig config;
  auto state = OpiRunState::initial(chain, config);
  EXPECT_EQ(state.J, ValueFunction({0, 0, 0}));
  opi_iteration(state, chain, p, config);
  EXPECT_DOUBLE_EQ(state.J[0], 0.0);
  EXPECT_DOUBLE_EQ(state.J[1], 1.0);
  EXPECT_DOUBLE_EQ(state.J[2], 2.9);
  EXPECT_EQ(state.t, 1);
  EXPECT_EQ(state.visit_counts, std::vector<long>({1, 1, 1}));
}

TEST(OpiIterationTest, ConvexCombination) {
  // State 1 has J = 2 and a deterministic tail of 3; visit-based harmonic
  // with one earlier visit gives gamma = 0.5.
  const Mdp mdp({{Action::from_pairs(0.0, {{0, 1.0}})}, {Action::from_pairs(3.0, {{0, 1.0}})}},
                ProblemClass::discounted(0.9));
  OpiConfig config;
  auto state = OpiRunState::initial(mdp, config);
  state.J = {0.0, 2.0};
  state.visit_counts = {1, 1};
  opi_iteration(state, mdp, InitialDistribution::point_mass(2, 1), config);
  EXPECT_DOUBLE_EQ(state.J[1], 2.5);
  ASSERT_EQ(state.last.updates.size(), 2u);
  EXPECT_EQ(state.last.updates[0].step, 0.5);
  EXPECT_EQ(state.last.updates[0].estimate, 3.0);
}

TEST(OpiIterationTest, FirstStateOnlyTouchesStart) {
  const Mdp chain = chain_mdp(ProblemClass::discounted(0.9));
  OpiConfig config;
  config.update_mode = UpdateMode::kFirstStateOnly;
  auto state = OpiRunState::initial(chain, config);
  opi_iteration(state, chain, InitialDistribution::point_mass(3, 2), config);
  EXPECT_EQ(state.J, ValueFunction({0, 0, 2.9}));
  EXPECT_EQ(state.visit_counts, std::vector<long>({0, 0, 1}));
}

TEST(OpiIterationTest, InitialValue) {
  OpiConfig config;
  config.initial_value = 4.5;
  const auto state = OpiRunState::initial(chain_mdp(ProblemClass::discounted(0.9)), config);
  EXPECT_EQ(state.J, ValueFunction({4.5, 4.5, 4.5}));
  config.initial_value = std::nan("");
  EXPECT_THROW(config.validate(), InvariantViolation);
}

TEST(RunOpiTest, OnePolicyIsOptimalAtZero) {
  const Mdp chain = chain_mdp(ProblemClass::discounted(0.9));
  const auto result =
      run_opi(chain, InitialDistribution::point_mass(3, 2), OpiConfig{}, oracle_for(chain));
  EXPECT_EQ(result.iterations_to_optimal, 0);
}

TEST(RunOpiTest, ChainSeed42) {
  const MdpFile file = load_mdp(MCOPI_DATA_DIR "/chain.json");
  OpiConfig config;
  config.seed = 42;
  config.max_iterations = 500;
  const auto result = run_opi(file.mdp, file.initial, config, oracle_for(file.mdp));
  ASSERT_TRUE(result.final_sup_error.has_value());
  EXPECT_LT(*result.final_sup_error, 0.05);
  EXPECT_EQ(result.iterations_run, 500);
}

TEST(RunOpiTest, BitIdenticalAcrossRuns) {
  Rng gen(4);
  const auto inst = testing::random_discounted_mdp(gen, {});
  const auto oracle = oracle_for(inst.mdp);
  OpiConfig config;
  config.seed = 99;
  config.max_iterations = 300;
  config.record_history = true;
  config.truncation_bias = 1e-3;
  const auto a = run_opi(inst.mdp, inst.p, config, oracle);
  const auto b = run_opi(inst.mdp, inst.p, config, oracle);
  EXPECT_EQ(a.J, b.J);
  EXPECT_EQ(a.visit_counts, b.visit_counts);
  EXPECT_EQ(a.iterations_to_optimal, b.iterations_to_optimal);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t k = 0; k < a.history.size(); ++k) EXPECT_EQ(a.history[k].J, b.history[k].J);
  config.seed = 100;
  EXPECT_NE(run_opi(inst.mdp, inst.p, config, oracle).J, a.J);
}

TEST(RunOpiTest, HistoryStride) {
  const Mdp chain = chain_mdp(ProblemClass::discounted(0.9));
  OpiConfig config;
  config.max_iterations = 25;
  config.record_history = true;
  config.history_stride = 10;
  const auto result = run_opi(chain, InitialDistribution::point_mass(3, 2), config, {});
  std::vector<long> ts;
  for (const auto& h : result.history) ts.push_back(h.t);
  EXPECT_EQ(ts, std::vector<long>({0, 10, 20, 25}));
}

TEST(RunOpiTest, ModeAgreementOnOneStepMdp) {
  Rng gen(12);
  for (int trial = 0; trial < 20; ++trial) {
    const Mdp mdp = one_step_mdp(gen, 6, 0.9);
    std::vector<double> p(7, 1.0 / 6.0);
    p[0] = 0.0;
    const InitialDistribution init(p);
    OpiConfig config;
    config.seed = 500 + trial;
    config.max_iterations = 200;
    config.update_mode = UpdateMode::kTrajectory;
    const auto traj = run_opi(mdp, init, config, {});
    config.update_mode = UpdateMode::kFirstStateOnly;
    const auto first = run_opi(mdp, init, config, {});
    for (StateId s = 1; s <= 6; ++s) {
      EXPECT_EQ(traj.J[s], first.J[s]);
      EXPECT_EQ(traj.visit_counts[s], first.visit_counts[s]);
    }
  }
}

TEST(RunOpiTest, ObservedInvariants) {
  Rng gen(21);
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = testing::random_discounted_mdp(gen, {});
    const double c_max = inst.mdp.max_abs_cost();
    const double alpha = inst.mdp.discount();
    for (const StepSchedule& schedule :
         {StepSchedule::harmonic(1.0, StepMode::kVisitBased),
          StepSchedule::power_law(0.9, 0.7, StepMode::kTimeBased)}) {
      for (UpdateMode mode : {UpdateMode::kTrajectory, UpdateMode::kFirstStateOnly}) {
        OpiConfig config;
        config.seed = trial;
        config.schedule = schedule;
        config.update_mode = mode;
        config.truncation_bias = 1e-4;
        config.max_iterations = 200;
        ValueFunction previous = OpiRunState::initial(inst.mdp, config).J;
        config.observer = [&](const OpiRunState& state) {
          std::vector<bool> touched(inst.mdp.num_states(), false);
          for (const auto& u : state.last.updates) {
            touched[u.component] = true;
            // Visit-based steps are never smaller than time-based ones.
            EXPECT_GE(schedule.beta(u.visits_before), schedule.beta(state.last.t));
            EXPECT_EQ(u.step, schedule.step(state.last.t, u.visits_before));
          }
          if (mode == UpdateMode::kFirstStateOnly) {
            ASSERT_EQ(state.last.updates.size(), 1u);
            EXPECT_EQ(state.last.updates[0].component, state.last.start);
          }
          for (StateId s = 0; s < inst.mdp.num_states(); ++s) {
            EXPECT_LE(state.visit_counts[s], state.t);
            EXPECT_TRUE(std::isfinite(state.J[s]));
            EXPECT_GE(state.J[s], 0.0);
            EXPECT_LE(state.J[s], c_max / (1 - alpha) + config.truncation_bias);
            if (!touched[s]) {
              EXPECT_EQ(state.J[s], previous[s]);
            }
          }
          previous = state.J;
        };
        run_opi(inst.mdp, inst.p, config, {});
      }
    }
  }
}

TEST(RunOpiTest, ConvergesOnRandomInstance) {
  Rng gen(5);
  testing::RandomMdpOptions options;
  options.max_states = 15;
  const auto inst = testing::random_discounted_mdp(gen, options);
  const auto oracle = oracle_for(inst.mdp);
  OpiConfig config;
  config.seed = 1;
  config.max_iterations = 20000;
  config.truncation_bias = 1e-4;
  const auto result = run_opi(inst.mdp, inst.p, config, oracle);
  ASSERT_TRUE(result.iterations_to_optimal.has_value());
  EXPECT_LT(*result.final_sup_error, 0.5);
}

TEST(DiagnosticsTest, DeterministicChainIsExact) {
  const Mdp chain = chain_mdp(ProblemClass::discounted(0.9));
  Rng rng(0);
  const auto rows =
      estimator_diagnostics(chain, {0, 0, 0}, InitialDistribution::point_mass(3, 2), 100, rng);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& row : rows) {
    EXPECT_NEAR(row.mean_estimate, row.j_exact, 1e-12);
    EXPECT_EQ(row.standard_error, 0.0);
    EXPECT_EQ(row.visit_freq, 1.0);
    EXPECT_EQ(row.q_exact, 1.0);
  }
}

TEST(DiagnosticsTest, RandomDagUnbiased) {
  Rng gen(33);
  int rows_checked = 0;
  int mean_outside = 0;
  int freq_outside = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = testing::random_dag_mdp(gen, 5, 2, ProblemClass::discounted(0.9));
    const Policy mu(5, 0);
    const long samples = 100'000;
    const auto rows = estimator_diagnostics(inst.mdp, mu, inst.p, samples, gen);
    for (const auto& row : rows) {
      if (row.visits == 0) continue;
      ++rows_checked;
      if (std::abs(row.mean_estimate - row.j_exact) > 3 * row.standard_error + 1e-9) ++mean_outside;
      const double sigma = std::sqrt(row.q_exact * (1 - row.q_exact) / samples);
      if (std::abs(row.visit_freq - row.q_exact) > 3 * sigma + 1e-12) ++freq_outside;
    }
  }
  EXPECT_GT(rows_checked, 30);
  EXPECT_LE(mean_outside, 1);
  EXPECT_LE(freq_outside, 1);
}

}  // namespace
}  // namespace mcopi

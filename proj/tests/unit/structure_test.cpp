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

#include "mcopi/structure.hpp"

#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "mcopi/errors.hpp"
#include "support/instances.hpp"

namespace mcopi {
namespace {

using testing::chain_mdp;

Mdp from_rows(const std::vector<std::vector<std::vector<std::pair<StateId, double>>>>& rows) {
  std::vector<std::vector<Action>> actions;
  for (const auto& state : rows) {
    actions.emplace_back();
    for (const auto& row : state) actions.back().push_back(Action::from_pairs(0.0, row));
  }
  return Mdp(std::move(actions), ProblemClass::discounted(0.5));
}

TEST(ReachabilityGraphTest, ChainEdges) {
  const ReachabilityGraph graph = build_reachability_graph(chain_mdp(ProblemClass::discounted(0.9)));
  EXPECT_EQ(graph.edges(), (std::vector<std::pair<StateId, StateId>>{{0, 0}, {1, 0}, {2, 1}}));
  EXPECT_TRUE(graph.common_supports());
}

TEST(ReachabilityGraphTest, EqualSupportsAccepted) {
  const Mdp mdp = from_rows({{{{0, 1.0}}},
                             {{{0, 1.0}}},
                             {{{0, 1.0}}},
                             {{{1, 0.3}, {2, 0.7}}, {{1, 0.9}, {2, 0.1}}}});
  const ReachabilityGraph graph = build_reachability_graph(mdp);
  EXPECT_TRUE(graph.common_supports());
  EXPECT_NO_THROW(require_common_supports(graph));
}

TEST(ReachabilityGraphTest, DifferentSupportsRejected) {
  const Mdp mdp = from_rows({{{{0, 1.0}}}, {{{0, 1.0}}}, {{{0, 1.0}}},
                             {{{1, 1.0}}, {{2, 1.0}}}});
  const ReachabilityGraph graph = build_reachability_graph(mdp);
  ASSERT_EQ(graph.support_mismatches.size(), 1u);
  const SupportMismatch& m = graph.support_mismatches[0];
  EXPECT_EQ(m.state, 3);
  EXPECT_EQ(m.first_action, 0);
  EXPECT_EQ(m.other_action, 1);
  EXPECT_EQ(m.first_support, std::vector<StateId>({1}));
  EXPECT_EQ(m.other_support, std::vector<StateId>({2}));
  EXPECT_THROW(require_common_supports(graph), Assumption2Violation);
  EXPECT_FALSE(analyze_structure(mdp, std::nullopt).common_support_ok);
}

TEST(ReachabilityGraphTest, InvariantToActionOrder) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Mdp mdp = testing::random_dense_mdp(rng, 8, 3, 0.9);
    std::vector<std::vector<Action>> reversed(mdp.num_states());
    for (StateId s = 0; s < mdp.num_states(); ++s) {
      auto acts = mdp.actions(s);
      reversed[s].assign(acts.rbegin(), acts.rend());
    }
    const auto a = build_reachability_graph(mdp);
    const auto b = build_reachability_graph(Mdp(reversed, mdp.problem_class()));
    EXPECT_EQ(a.successors, b.successors);
  }
}

TEST(DecomposeTest, ChainFromTwo) {
  const auto report = analyze_structure(chain_mdp(ProblemClass::discounted(0.9)),
                                        InitialDistribution::point_mass(3, 2));
  EXPECT_EQ(report.transient_order, std::vector<StateId>({1, 2}));
  EXPECT_EQ(report.recurrent_classes, (std::vector<std::vector<StateId>>{{0}}));
  EXPECT_TRUE(report.all_ok());
}

TEST(DecomposeTest, TransientCycleDetected) {
  // 1 -> {2, 0}, 2 -> {1, 0}.
  const Mdp mdp = from_rows({{{{0, 1.0}}}, {{{0, 0.5}, {2, 0.5}}}, {{{0, 0.5}, {1, 0.5}}}});
  const auto report = analyze_structure(mdp, InitialDistribution::uniform(3));
  EXPECT_FALSE(report.transient_acyclic_ok);
  ASSERT_EQ(report.transient_cycles.size(), 1u);
  auto cycle = report.transient_cycles[0];
  std::sort(cycle.begin(), cycle.end());
  EXPECT_EQ(cycle, std::vector<StateId>({1, 2}));
}

TEST(DecomposeTest, TransientSelfLoopIsACycle) {
  const Mdp mdp = from_rows({{{{0, 1.0}}}, {{{0, 0.5}, {1, 0.5}}}});
  const auto report = analyze_structure(mdp, InitialDistribution::uniform(2));
  EXPECT_FALSE(report.transient_acyclic_ok);
}

TEST(DecomposeTest, UnreachableStateReported) {
  const auto report = analyze_structure(chain_mdp(ProblemClass::discounted(0.9)),
                                        InitialDistribution::point_mass(3, 0));
  EXPECT_FALSE(report.reachability_ok);
  EXPECT_EQ(report.unreachable_states, std::vector<StateId>({1, 2}));
}

TEST(DecomposeTest, MultiStateRecurrentClass) {
  // 2 -> {0, 1}; {0, 1} is a closed ring.
  const Mdp mdp = from_rows({{{{1, 1.0}}}, {{{0, 0.5}, {1, 0.5}}}, {{{0, 0.5}, {1, 0.5}}}});
  const auto report = analyze_structure(mdp, InitialDistribution::point_mass(3, 2));
  EXPECT_EQ(report.recurrent_classes, (std::vector<std::vector<StateId>>{{0, 1}}));
  EXPECT_EQ(report.transient_order, std::vector<StateId>({2}));
  EXPECT_TRUE(report.all_ok());
  EXPECT_EQ(report.class_of, std::vector<int>({0, 0, -1}));
}

// Scans every property of a report against the raw graph.
void check_report(const Mdp& mdp, const StructureReport& report) {
  const int n = mdp.num_states();
  const auto graph = build_reachability_graph(mdp);
  std::multiset<StateId> all(report.transient_order.begin(), report.transient_order.end());
  for (const auto& cls : report.recurrent_classes) all.insert(cls.begin(), cls.end());
  ASSERT_EQ(static_cast<int>(all.size()), n);
  for (StateId s = 0; s < n; ++s) ASSERT_EQ(all.count(s), 1u);

  // Recurrent classes are closed.
  for (std::size_t c = 0; c < report.recurrent_classes.size(); ++c) {
    for (StateId s : report.recurrent_classes[c]) {
      for (StateId t : graph.successors[s]) EXPECT_EQ(report.class_of[t], static_cast<int>(c));
    }
  }
  if (report.transient_acyclic_ok) {
    std::vector<int> position(n, -1);
    for (std::size_t k = 0; k < report.transient_order.size(); ++k) {
      position[report.transient_order[k]] = static_cast<int>(k);
    }
    for (StateId s : report.transient_order) {
      for (StateId t : graph.successors[s]) {
        if (report.is_transient(t)) {
          EXPECT_GT(position[s], position[t]);
        }
      }
    }
  }
}

TEST(DecomposeTest, RandomStructuredInstances) {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = testing::random_discounted_mdp(rng, {});
    const auto report = analyze_structure(inst.mdp, inst.p);
    EXPECT_TRUE(report.all_ok()) << report.describe();
    EXPECT_GE(report.recurrent_classes.size(), 2u);
    check_report(inst.mdp, report);
  }
}

TEST(DecomposeTest, ReachabilityMatchesBreadthFirstSearch) {
  Rng rng(23);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_u64() % 12);
    // Sparse graphs so that unreachable states are common.
    std::vector<std::vector<Action>> actions(n);
    for (StateId s = 0; s < n; ++s) {
      const StateId t = static_cast<StateId>(rng.next_u64() % n);
      if (rng.uniform() < 0.5 || t == s) {
        actions[s].push_back(Action::from_pairs(0.0, {{t, 1.0}}));
      } else {
        const StateId u = static_cast<StateId>(rng.next_u64() % n);
        actions[s].push_back(
            u == t ? Action::from_pairs(0.0, {{t, 1.0}})
                   : Action::from_pairs(0.0, {{t, 0.5}, {u, 0.5}}));
      }
    }
    const Mdp mdp(std::move(actions), ProblemClass::discounted(0.5));
    const StateId source = static_cast<StateId>(rng.next_u64() % n);
    const auto p = InitialDistribution::point_mass(n, source);
    const auto report = analyze_structure(mdp, p);
    const auto expected = testing::bfs_reachable(mdp, {source});
    const bool all = std::all_of(expected.begin(), expected.end(), [](bool b) { return b; });
    ASSERT_EQ(report.reachability_ok, all);
    for (StateId s : report.unreachable_states) ASSERT_FALSE(expected[s]);
    ASSERT_EQ(report.unreachable_states.size(),
              static_cast<std::size_t>(std::count(expected.begin(), expected.end(), false)));
    check_report(mdp, report);
  }
}

}  // namespace
}  // namespace mcopi

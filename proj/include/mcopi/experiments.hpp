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

// Slippery-DAG benchmark generators and the trajectory-vs-single-state
// comparison harness.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mcopi/mdp.hpp"
#include "mcopi/opi.hpp"

namespace mcopi {

// DAG with sink 0 and a reward label per state.
struct EdgeGraph {
  int num_states = 0;
  std::vector<double> rewards;
  std::vector<std::pair<StateId, StateId>> edges;

  // Out-neighbors of every state, sorted ascending.
  std::vector<std::vector<StateId>> neighbors() const;
};

// JSON: {"num_states": n, "rewards": [...], "edges": [[i, j], ...]}.
EdgeGraph parse_edge_graph(const std::string& text);
EdgeGraph load_edge_graph(const std::filesystem::path& path);
std::string edge_graph_to_json(const EdgeGraph& graph);

// Empty when the graph is acyclic, state 0 is its only sink and every other
// state has an out-edge.
std::vector<std::string> edge_graph_violations(const EdgeGraph& graph);

struct RandomGraph {
  int num_states = 20;
  int max_out_degree = 3;
  std::uint64_t seed = 0;
};

// Random DAG: state i > 0 gets between 1 and min(D, i) distinct edges to
// lower-numbered states; rewards are integers in [0, 10], with reward 0 on
// the sink.
EdgeGraph random_edge_graph(const RandomGraph& spec);

enum class ExperimentKind { kExperiment1, kExperiment2 };

// Shipped ~20-state graphs for each experiment.
EdgeGraph default_experiment_graph(ExperimentKind kind);

struct GeneratorSpec {
  ExperimentKind kind = ExperimentKind::kExperiment1;
  std::variant<EdgeGraph, RandomGraph> base_graph;
  double chosen_probability = 0.6;
  double safe_probability = 0.8;  // second action of each edge (experiment 2)
  double safe_penalty = 1.0;      // reward given up by the second action
  double discount = 0.9;
  // Added on top of the minimal nonnegative shift; 0 in normal use.
  double extra_shift = 0.0;
};

struct GeneratedExperiment {
  Mdp mdp;
  InitialDistribution initial;  // uniform over states 1..n-1
  EdgeGraph graph;
  // cost(i, .) = shift - reward(i, .), with shift the smallest value making
  // every cost nonnegative (plus extra_shift).
  double shift = 0.0;
  // Edge (i, j) behind each action, per state.
  std::vector<std::vector<StateId>> action_edges;

  // shift / (1 - alpha): the image of the zero vector of the reward
  // problem. Starting OPI here reproduces a reward-space start at 0; in
  // particular the sink, which is never a start state, begins at its
  // exact value.
  double value_offset() const { return shift / (1.0 - mdp.discount()); }
};

// Experiment 1: one action per out-edge (i, j) that moves to j with
// probability chosen_probability and to the other out-neighbors uniformly
// otherwise; single-edge states move deterministically. Experiment 2: two
// actions per edge, the second with safe_probability and reward lowered by
// safe_penalty. Actions are ordered by edge, then by variant. State 0 is
// absorbing and, like every state, pays the shift.
GeneratedExperiment generate_experiment_mdp(const GeneratorSpec& spec);

struct TrialOutcome {
  long trial = 0;
  UpdateMode mode = UpdateMode::kTrajectory;
  std::uint64_t seed = 0;
  long iterations = 0;  // iterations to optimal, or the cap when censored
  bool censored = false;
};

struct ModeSummary {
  long trials = 0;
  long censored = 0;
  double mean = 0.0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  long min = 0;
  long max = 0;
};

struct ComparisonConfig {
  long trials = 100;
  std::uint64_t seed = 0;
  // Schedule, bias and iteration cap shared by both modes; update_mode,
  // seed, stream and stop_at_optimal are set per trial.
  OpiConfig base = [] {
    OpiConfig c;
    c.max_iterations = 1'000'000;
    return c;
  }();
  // 0 = OPI_THREADS or the hardware concurrency.
  int threads = 0;
};

struct ComparisonResult {
  std::vector<TrialOutcome> trajectory;
  std::vector<TrialOutcome> first_state;
  ModeSummary trajectory_summary;
  ModeSummary first_state_summary;
  ComparisonConfig config;

  const std::vector<TrialOutcome>& outcomes(UpdateMode mode) const {
    return mode == UpdateMode::kTrajectory ? trajectory : first_state;
  }
};

ModeSummary summarize(const std::vector<TrialOutcome>& outcomes);

// Worker count from OPI_THREADS, else hardware concurrency, at least 1.
int default_thread_count();

// Trial i of both modes uses seed mix_seed(config.seed, i); the stream is the
// mode index. Results do not depend on the thread count.
ComparisonResult run_comparison(const Mdp& mdp, const InitialDistribution& p,
                                const ComparisonConfig& config);

struct HistogramBin {
  UpdateMode mode;
  double lo;
  double hi;
  long count;
};

// `bins` equal-width bins over the pooled range of both modes.
std::vector<HistogramBin> comparison_histogram(const ComparisonResult& result, int bins = 30);

// trial,mode,seed,iterations_to_optimal,censored
std::string comparison_csv(const ComparisonResult& result);
// mode,bin_lo,bin_hi,count
std::string histogram_csv(const std::vector<HistogramBin>& bins);

}  // namespace mcopi

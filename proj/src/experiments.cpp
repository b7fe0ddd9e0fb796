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

#include "mcopi/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "mcopi/errors.hpp"
#include "mcopi/io.hpp"
#include "mcopi/rng.hpp"
#include "mcopi/solvers.hpp"

namespace mcopi {

using json = nlohmann::json;

std::vector<std::vector<StateId>> EdgeGraph::neighbors() const {
  std::vector<std::vector<StateId>> out(num_states);
  for (const auto& [from, to] : edges) {
    if (from >= 0 && from < num_states) out[from].push_back(to);
  }
  for (auto& list : out) std::sort(list.begin(), list.end());
  return out;
}

EdgeGraph parse_edge_graph(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("JSON syntax error: {}", e.what()));
  }
  if (!doc.is_object()) throw ParseError("graph: expected an object");
  for (const char* key : {"num_states", "rewards", "edges"}) {
    if (!doc.contains(key)) throw ParseError(fmt::format("graph: missing field \"{}\"", key));
  }
  EdgeGraph graph;
  if (!doc["num_states"].is_number_integer()) throw ParseError("num_states: expected an integer");
  graph.num_states = doc["num_states"].get<int>();
  if (graph.num_states <= 0) throw ParseError("num_states: must be positive");
  const json& rewards = doc["rewards"];
  if (!rewards.is_array() || static_cast<int>(rewards.size()) != graph.num_states) {
    throw ParseError(fmt::format("rewards: expected an array of {} numbers", graph.num_states));
  }
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    if (!rewards[i].is_number()) throw ParseError(fmt::format("rewards[{}]: expected a number", i));
    graph.rewards.push_back(rewards[i].get<double>());
  }
  const json& edges = doc["edges"];
  if (!edges.is_array()) throw ParseError("edges: expected an array");
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const json& e = edges[k];
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
        !e[1].is_number_integer()) {
      throw ParseError(fmt::format("edges[{}]: expected [from, to]", k));
    }
    const int from = e[0].get<int>();
    const int to = e[1].get<int>();
    if (from < 0 || from >= graph.num_states || to < 0 || to >= graph.num_states) {
      throw ParseError(fmt::format("edges[{}]: state out of range", k));
    }
    graph.edges.emplace_back(from, to);
  }
  return graph;
}

EdgeGraph load_edge_graph(const std::filesystem::path& path) {
  return parse_edge_graph(read_text_file(path));
}

std::string edge_graph_to_json(const EdgeGraph& graph) {
  std::string out = fmt::format("{{\n  \"num_states\": {},\n  \"rewards\": [", graph.num_states);
  for (std::size_t i = 0; i < graph.rewards.size(); ++i) {
    out += (i ? ", " : "") + format_number(graph.rewards[i]);
  }
  out += "],\n  \"edges\": [";
  for (std::size_t k = 0; k < graph.edges.size(); ++k) {
    out += fmt::format("{}{}[{}, {}]", k ? "," : "", k % 8 == 0 ? "\n    " : " ",
                       graph.edges[k].first, graph.edges[k].second);
  }
  out += "\n  ]\n}\n";
  return out;
}

std::vector<std::string> edge_graph_violations(const EdgeGraph& graph) {
  std::vector<std::string> out;
  const int n = graph.num_states;
  if (n <= 0) return {"graph has no states"};
  if (static_cast<int>(graph.rewards.size()) != n) {
    out.push_back(fmt::format("expected {} rewards, got {}", n, graph.rewards.size()));
  }
  for (std::size_t i = 0; i < graph.rewards.size(); ++i) {
    if (!std::isfinite(graph.rewards[i])) out.push_back(fmt::format("reward {} is not finite", i));
  }
  std::vector<std::vector<StateId>> next(n);
  for (const auto& [from, to] : graph.edges) {
    if (from < 0 || from >= n || to < 0 || to >= n) {
      out.push_back(fmt::format("edge ({},{}) leaves the state range", from, to));
      continue;
    }
    if (from == to) out.push_back(fmt::format("self-loop at state {}", from));
    if (from == 0) out.push_back(fmt::format("sink 0 has out-edge to {}", to));
    next[from].push_back(to);
  }
  for (StateId s = 0; s < n; ++s) {
    auto& list = next[s];
    std::sort(list.begin(), list.end());
    if (std::adjacent_find(list.begin(), list.end()) != list.end()) {
      out.push_back(fmt::format("duplicate edge out of state {}", s));
    }
    if (s > 0 && list.empty()) out.push_back(fmt::format("state {} has no out-edge", s));
  }
  // Kahn's algorithm for acyclicity.
  std::vector<int> indegree(n, 0);
  for (StateId s = 0; s < n; ++s) {
    for (StateId t : next[s]) {
      if (t != s) ++indegree[t];
    }
  }
  std::vector<StateId> ready;
  for (StateId s = 0; s < n; ++s) {
    if (indegree[s] == 0) ready.push_back(s);
  }
  int removed = 0;
  while (!ready.empty()) {
    const StateId s = ready.back();
    ready.pop_back();
    ++removed;
    for (StateId t : next[s]) {
      if (t != s && --indegree[t] == 0) ready.push_back(t);
    }
  }
  if (removed != n) out.push_back("graph has a cycle");
  return out;
}

EdgeGraph random_edge_graph(const RandomGraph& spec) {
  if (spec.num_states < 2 || spec.max_out_degree < 1) {
    throw InvariantViolation("random graph needs at least 2 states and out-degree 1");
  }
  Rng rng(spec.seed);
  EdgeGraph graph;
  graph.num_states = spec.num_states;
  graph.rewards.assign(spec.num_states, 0.0);
  for (StateId i = 1; i < spec.num_states; ++i) {
    graph.rewards[i] = static_cast<double>(rng.next_u64() % 11);
    const int cap = std::min(spec.max_out_degree, i);
    const int degree = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(cap));
    std::vector<StateId> pool(i);
    for (StateId j = 0; j < i; ++j) pool[j] = j;
    for (int k = 0; k < degree; ++k) {
      const auto pick = k + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(i - k));
      std::swap(pool[k], pool[pick]);
      graph.edges.emplace_back(i, pool[k]);
    }
  }
  return graph;
}

namespace {

Action slip_action(double cost, const std::vector<StateId>& neighbors, std::size_t chosen,
                   double chosen_probability) {
  std::vector<std::pair<StateId, double>> pairs;
  if (neighbors.size() == 1) {
    pairs.emplace_back(neighbors[0], 1.0);
  } else {
    const double rest = (1.0 - chosen_probability) / static_cast<double>(neighbors.size() - 1);
    for (std::size_t k = 0; k < neighbors.size(); ++k) {
      pairs.emplace_back(neighbors[k], k == chosen ? chosen_probability : rest);
    }
  }
  return Action::from_pairs(cost, std::move(pairs));
}

}  // namespace

GeneratedExperiment generate_experiment_mdp(const GeneratorSpec& spec) {
  EdgeGraph graph = std::holds_alternative<EdgeGraph>(spec.base_graph)
                        ? std::get<EdgeGraph>(spec.base_graph)
                        : random_edge_graph(std::get<RandomGraph>(spec.base_graph));
  const auto violations = edge_graph_violations(graph);
  if (!violations.empty()) {
    std::string joined;
    for (const auto& v : violations) joined += (joined.empty() ? "" : "; ") + v;
    throw InvariantViolation("invalid experiment graph: " + joined);
  }
  if (!(spec.chosen_probability > 0.0 && spec.chosen_probability <= 1.0) ||
      !(spec.safe_probability > 0.0 && spec.safe_probability <= 1.0)) {
    throw InvariantViolation("slip probabilities must lie in (0,1]");
  }
  if (!(spec.extra_shift >= 0.0)) throw InvariantViolation("extra shift must be nonnegative");
  const bool two_actions = spec.kind == ExperimentKind::kExperiment2;
  const int n = graph.num_states;

  // Largest reward any action pays; the penalized variant never exceeds it.
  double top = graph.rewards[0];
  for (double r : graph.rewards) top = std::max(top, r);
  const double shift = std::max(0.0, top) + spec.extra_shift;

  const auto neighbors = graph.neighbors();
  std::vector<std::vector<Action>> actions(n);
  std::vector<std::vector<StateId>> action_edges(n);
  actions[0].push_back(Action::from_pairs(shift - graph.rewards[0], {{0, 1.0}}));
  action_edges[0].push_back(0);
  for (StateId i = 1; i < n; ++i) {
    for (std::size_t e = 0; e < neighbors[i].size(); ++e) {
      actions[i].push_back(
          slip_action(shift - graph.rewards[i], neighbors[i], e, spec.chosen_probability));
      action_edges[i].push_back(neighbors[i][e]);
      if (two_actions) {
        actions[i].push_back(slip_action(shift - (graph.rewards[i] - spec.safe_penalty),
                                         neighbors[i], e, spec.safe_probability));
        action_edges[i].push_back(neighbors[i][e]);
      }
    }
  }

  std::vector<double> p(n, 1.0 / static_cast<double>(n - 1));
  p[0] = 0.0;
  return GeneratedExperiment{Mdp(std::move(actions), ProblemClass::discounted(spec.discount)),
                             InitialDistribution(std::move(p)), std::move(graph), shift,
                             std::move(action_edges)};
}

namespace {

double quantile(const std::vector<long>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return static_cast<double>(sorted[lo]) +
         frac * static_cast<double>(sorted[hi] - sorted[lo]);
}

}  // namespace

ModeSummary summarize(const std::vector<TrialOutcome>& outcomes) {
  ModeSummary s;
  s.trials = static_cast<long>(outcomes.size());
  if (outcomes.empty()) return s;
  std::vector<long> values;
  double total = 0.0;
  for (const auto& o : outcomes) {
    values.push_back(o.iterations);
    total += static_cast<double>(o.iterations);
    if (o.censored) ++s.censored;
  }
  std::sort(values.begin(), values.end());
  s.mean = total / static_cast<double>(values.size());
  s.median = quantile(values, 0.5);
  s.q25 = quantile(values, 0.25);
  s.q75 = quantile(values, 0.75);
  s.min = values.front();
  s.max = values.back();
  return s;
}

int default_thread_count() {
  if (const char* env = std::getenv("OPI_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

ComparisonResult run_comparison(const Mdp& mdp, const InitialDistribution& p,
                                const ComparisonConfig& config) {
  if (config.trials < 0) throw InvariantViolation("trial count must be nonnegative");
  config.base.validate();
  const OptimalityOracle oracle = OptimalityOracle::from(policy_iteration(mdp));

  const long tasks = 2 * config.trials;
  std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(tasks));
  std::atomic<long> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    while (true) {
      const long task = next.fetch_add(1);
      if (task >= tasks) return;
      const long trial = task / 2;
      const UpdateMode mode = task % 2 == 0 ? UpdateMode::kTrajectory : UpdateMode::kFirstStateOnly;
      OpiConfig cfg = config.base;
      cfg.update_mode = mode;
      cfg.seed = mix_seed(config.seed, static_cast<std::uint64_t>(trial));
      cfg.stream = static_cast<std::uint64_t>(task % 2);
      cfg.stop_at_optimal = true;
      cfg.record_history = false;
      cfg.observer = nullptr;
      try {
        const RunResult run = run_opi(mdp, p, cfg, oracle);
        TrialOutcome& out = outcomes[task];
        out.trial = trial;
        out.mode = mode;
        out.seed = cfg.seed;
        out.censored = !run.iterations_to_optimal.has_value();
        out.iterations = out.censored ? cfg.max_iterations : *run.iterations_to_optimal;
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(tasks);
      }
    }
  };

  const int threads = static_cast<int>(std::min<long>(
      config.threads > 0 ? config.threads : default_thread_count(), std::max(1L, tasks)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  ComparisonResult result;
  result.config = config;
  result.config.base.observer = nullptr;
  for (const auto& o : outcomes) {
    (o.mode == UpdateMode::kTrajectory ? result.trajectory : result.first_state).push_back(o);
  }
  result.trajectory_summary = summarize(result.trajectory);
  result.first_state_summary = summarize(result.first_state);
  return result;
}

std::vector<HistogramBin> comparison_histogram(const ComparisonResult& result, int bins) {
  if (bins < 1) throw InvariantViolation("histogram needs at least one bin");
  long lo = 0, hi = 0;
  bool any = false;
  for (const auto* list : {&result.trajectory, &result.first_state}) {
    for (const auto& o : *list) {
      lo = any ? std::min(lo, o.iterations) : o.iterations;
      hi = any ? std::max(hi, o.iterations) : o.iterations;
      any = true;
    }
  }
  const double low = static_cast<double>(lo);
  const double width = hi > lo ? static_cast<double>(hi - lo) / bins : 1.0 / bins;
  std::vector<HistogramBin> out;
  for (UpdateMode mode : {UpdateMode::kTrajectory, UpdateMode::kFirstStateOnly}) {
    std::vector<long> counts(bins, 0);
    for (const auto& o : result.outcomes(mode)) {
      auto b = static_cast<long>(std::floor((static_cast<double>(o.iterations) - low) / width));
      counts[std::clamp(b, 0L, static_cast<long>(bins - 1))]++;
    }
    for (int b = 0; b < bins; ++b) {
      out.push_back({mode, low + b * width, low + (b + 1) * width, counts[b]});
    }
  }
  return out;
}

std::string comparison_csv(const ComparisonResult& result) {
  std::string out = "trial,mode,seed,iterations_to_optimal,censored\n";
  for (std::size_t k = 0; k < result.trajectory.size(); ++k) {
    for (const auto* o : {&result.trajectory[k], &result.first_state[k]}) {
      out += fmt::format("{},{},{},{},{}\n", o->trial, to_string(o->mode), o->seed, o->iterations,
                         o->censored ? 1 : 0);
    }
  }
  return out;
}

std::string histogram_csv(const std::vector<HistogramBin>& bins) {
  std::string out = "mode,bin_lo,bin_hi,count\n";
  for (const auto& b : bins) {
    out += fmt::format("{},{},{},{}\n", to_string(b.mode), format_number(b.lo),
                       format_number(b.hi), b.count);
  }
  return out;
}

EdgeGraph default_experiment_graph(ExperimentKind kind) {
  // One 20-state DAG serves both experiments; data/experiment_graph.json
  // holds the same graph. Each state has up to three exits toward the sink.
  (void)kind;
  EdgeGraph graph;
  graph.num_states = 20;
  graph.rewards = {0, 3, 8, 3, 10, 5, 2, 6, 7, 2, 5, 7, 5, 8, 1, 3, 4, 4, 1, 7};
  graph.edges = {
      {1, 0},   {2, 0},   {3, 1},   {3, 2},   {3, 0},   {4, 2},   {4, 0},   {4, 3},
      {5, 3},   {5, 2},   {5, 0},   {6, 3},   {7, 4},   {7, 0},   {7, 5},   {8, 0},
      {8, 7},   {8, 4},   {9, 1},   {9, 0},   {9, 6},   {10, 2},  {11, 3},  {11, 4},
      {12, 4},  {12, 5},  {13, 8},  {13, 10}, {14, 7},  {14, 0},  {15, 5},  {15, 12},
      {15, 8},  {16, 11}, {16, 0},  {17, 12}, {17, 15}, {18, 15}, {19, 17}, {19, 2},
      {19, 16},
  };
  return graph;
}

}  // namespace mcopi

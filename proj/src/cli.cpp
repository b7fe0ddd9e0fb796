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

#include "mcopi/cli.hpp"

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "mcopi/aggregation.hpp"
#include "mcopi/errors.hpp"
#include "mcopi/experiments.hpp"
#include "mcopi/io.hpp"
#include "mcopi/mdp.hpp"
#include "mcopi/opi.hpp"
#include "mcopi/solvers.hpp"
#include "mcopi/structure.hpp"
#include "mcopi/variants.hpp"

namespace mcopi {
namespace {

namespace fs = std::filesystem;

struct RunOptions {
  std::string input;
  std::string mode = "trajectory";
  std::string schedule = "visit";
  std::string beta = "harmonic:1";
  std::uint64_t seed = 0;
  long iters = 1000;
  double bias = 1e-6;
  long stride = 10;
  std::string history;
  std::string out;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("input", o.input, "model file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--mode", o.mode, "trajectory or first-state")
      ->check(CLI::IsMember({"trajectory", "first-state"}));
  cmd->add_option("--schedule", o.schedule, "visit or time")
      ->check(CLI::IsMember({"visit", "time"}));
  cmd->add_option("--beta", o.beta, "harmonic:C or power:C,R");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--iters", o.iters, "number of iterations")->check(CLI::PositiveNumber);
  cmd->add_option("--bias", o.bias, "truncation bias bound")->check(CLI::PositiveNumber);
  cmd->add_option("--history-stride", o.stride, "record J every k iterations")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--history", o.history, "write the J history as CSV");
  cmd->add_option("--out", o.out, "write the run summary as CSV");
}

OpiConfig make_config(const RunOptions& o) {
  OpiConfig config;
  config.update_mode = o.mode == "first-state" ? UpdateMode::kFirstStateOnly
                                               : UpdateMode::kTrajectory;
  config.schedule = StepSchedule::parse(
      o.beta, o.schedule == "time" ? StepMode::kTimeBased : StepMode::kVisitBased);
  config.seed = o.seed;
  config.truncation_bias = o.bias;
  config.max_iterations = o.iters;
  config.record_history = !o.history.empty();
  config.history_stride = o.stride;
  return config;
}

void write_run_outputs(const RunOptions& o, const RunResult& run, const OpiConfig& config) {
  if (!o.history.empty()) write_file_atomic(o.history, history_csv(run.history));
  if (!o.out.empty()) write_file_atomic(o.out, run_summary_csv(run, config));
}

void print_run(std::ostream& out, const RunResult& run) {
  fmt::print(out, "iterations_run: {}\n", run.iterations_run);
  fmt::print(out, "iterations_to_optimal: {}\n",
             run.iterations_to_optimal ? fmt::format("{}", *run.iterations_to_optimal) : "none");
  if (run.final_sup_error) {
    fmt::print(out, "final_sup_error: {}\n", format_number(*run.final_sup_error));
  }
  out << values_csv(run.J);
}

// Thrown for inputs that load but fail a structural requirement.
struct ValidationFailure {
  std::string message;
};

void require_valid(const StructureReport& report) {
  if (!report.all_ok()) throw ValidationFailure{report.describe()};
}

int cmd_validate(const std::string& path, std::ostream& out) {
  const MdpFile file = load_mdp(path);
  const StructureReport report = analyze_structure(file.mdp, file.initial);
  out << report.describe();
  std::vector<std::string> extra;
  if (file.mdp.problem_class().kind() == ProblemKind::kStochasticShortestPath) {
    extra = validate_ssp(file.mdp, report);
  } else if (file.mdp.problem_class().kind() == ProblemKind::kNegaminGame) {
    extra = game_violations(file.mdp, file.players);
  }
  for (const auto& v : extra) fmt::print(out, "violation: {}\n", v);
  const bool ok = report.all_ok() && extra.empty();
  fmt::print(out, "verdict: {}\n", ok ? "ok" : "invalid");
  return ok ? kExitOk : kExitValidation;
}

int cmd_solve(const std::string& path, const std::string& out_path, std::ostream& out) {
  const MdpFile file = load_mdp(path);
  require_valid(analyze_structure(file.mdp, file.initial));
  const std::string text = solution_to_json(policy_iteration(file.mdp)) + "\n";
  if (out_path.empty()) {
    out << text;
  } else {
    write_file_atomic(out_path, text);
  }
  return kExitOk;
}

int cmd_opi(const RunOptions& o, bool ssp, std::ostream& out) {
  const MdpFile file = load_mdp(o.input);
  const StructureReport report = analyze_structure(file.mdp, file.initial);
  require_valid(report);
  const OpiConfig config = make_config(o);
  const OptimalityOracle oracle = OptimalityOracle::from(policy_iteration(file.mdp));
  RunResult run;
  if (ssp) {
    run = run_opi_ssp(file.mdp, file.initial, config, oracle);
  } else {
    if (file.mdp.problem_class().kind() != ProblemKind::kDiscounted) {
      throw ValidationFailure{"opi expects a discounted model; use ssp or game"};
    }
    run = run_opi(file.mdp, file.initial, config, oracle);
  }
  write_run_outputs(o, run, config);
  print_run(out, run);
  return kExitOk;
}

int cmd_game(const RunOptions& o, std::ostream& out) {
  const GameFile file = load_game(o.input);
  const OpiConfig config = make_config(o);
  const ValueFunction jstar = solve_game_exact(file.game);
  const GameRunResult run = run_opi_game(file.game, file.initial, config, game_oracle(file.game));
  write_run_outputs(o, run.negamin, config);
  fmt::print(out, "iterations_run: {}\n", run.negamin.iterations_run);
  fmt::print(out, "iterations_to_optimal: {}\n",
             run.negamin.iterations_to_optimal
                 ? fmt::format("{}", *run.negamin.iterations_to_optimal)
                 : "none");
  if (run.recovered_sup_error) {
    fmt::print(out, "recovered_sup_error: {}\n", format_number(*run.recovered_sup_error));
  }
  out << "state,player,j_negamin,j_recovered,j_star\n";
  for (StateId s = 0; s < file.game.mdp().num_states(); ++s) {
    fmt::print(out, "{},{},{},{},{}\n", s, static_cast<int>(file.game.player(s)),
               format_number(run.negamin.J[s]), format_number(run.recovered[s]),
               format_number(jstar[s]));
  }
  return kExitOk;
}

int cmd_aggregate(const RunOptions& o, const std::string& clusters_path, bool skip_check,
                  double tol, std::ostream& out) {
  const MdpFile file = load_mdp(o.input);
  const StructureReport report = analyze_structure(file.mdp, file.initial);
  require_valid(report);
  const auto lists = load_clusters(clusters_path);
  const PolicyIterationResult solved = policy_iteration(file.mdp);
  const auto violations =
      validate_clusters(file.mdp, lists, report, skip_check ? ValueFunction{} : solved.values,
                        tol);
  if (!violations.empty()) {
    std::string joined;
    for (const auto& v : violations) joined += v + "\n";
    throw ValidationFailure{joined};
  }
  const ClusterMap clusters = ClusterMap::build(file.mdp, lists);
  const OpiConfig config = make_config(o);
  const AggregatedRunResult run = run_opi_aggregated(file.mdp, file.initial, clusters, config,
                                                     OptimalityOracle::from(solved));
  write_run_outputs(o, run.run, config);
  fmt::print(out, "iterations_run: {}\n", run.run.iterations_run);
  fmt::print(out, "iterations_to_optimal: {}\n",
             run.run.iterations_to_optimal ? fmt::format("{}", *run.run.iterations_to_optimal)
                                           : "none");
  out << aggregation_csv(run.theta, cluster_values(clusters, solved.values));
  return kExitOk;
}

struct ExperimentOptions {
  std::string gen = "exp1";
  std::string graph;
  std::string random;
  long trials = 100;
  std::uint64_t seed = 0;
  long cap = 1'000'000;
  double bias = 1e-6;
  int threads = 0;
  int bins = 30;
  std::string out_dir = ".";
};

RandomGraph parse_random_spec(const std::string& text) {
  RandomGraph spec;
  char tail = 0;
  unsigned long long seed = 0;
  if (std::sscanf(text.c_str(), "%d,%d,%llu%c", &spec.num_states, &spec.max_out_degree, &seed,
                  &tail) != 3) {
    throw ParseError(fmt::format("--random \"{}\": expected N,D,SEED", text));
  }
  spec.seed = seed;
  return spec;
}

int cmd_experiment(const ExperimentOptions& o, std::ostream& out) {
  GeneratorSpec spec;
  spec.kind = o.gen == "exp2" ? ExperimentKind::kExperiment2 : ExperimentKind::kExperiment1;
  if (!o.graph.empty()) {
    spec.base_graph = load_edge_graph(o.graph);
  } else if (!o.random.empty()) {
    spec.base_graph = parse_random_spec(o.random);
  } else {
    spec.base_graph = default_experiment_graph(spec.kind);
  }
  const GeneratedExperiment exp = generate_experiment_mdp(spec);
  ComparisonConfig config;
  config.trials = o.trials;
  config.seed = o.seed;
  config.base.max_iterations = o.cap;
  config.base.truncation_bias = o.bias;
  config.base.initial_value = exp.value_offset();
  config.threads = o.threads;
  const ComparisonResult result = run_comparison(exp.mdp, exp.initial, config);

  fs::create_directories(o.out_dir);
  write_file_atomic(fs::path(o.out_dir) / "comparison.csv", comparison_csv(result));
  write_file_atomic(fs::path(o.out_dir) / "histogram.csv",
                    histogram_csv(comparison_histogram(result, o.bins)));
  fmt::print(out, "states: {}  shift: {}  trials: {}\n", exp.mdp.num_states(),
             format_number(exp.shift), o.trials);
  out << "mode,mean,median,q25,q75,min,max,censored\n";
  for (UpdateMode mode : {UpdateMode::kTrajectory, UpdateMode::kFirstStateOnly}) {
    const ModeSummary& s = mode == UpdateMode::kTrajectory ? result.trajectory_summary
                                                           : result.first_state_summary;
    fmt::print(out, "{},{},{},{},{},{},{},{}\n", to_string(mode), format_number(s.mean),
               format_number(s.median), format_number(s.q25), format_number(s.q75), s.min, s.max,
               s.censored);
  }
  return kExitOk;
}

Policy load_policy(const std::string& path, const Mdp& mdp) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(fmt::format("policy file: JSON syntax error: {}", e.what()));
  }
  const nlohmann::json* list = &doc;
  if (doc.is_object()) {
    if (!doc.contains("policy")) throw ParseError("policy file: missing field \"policy\"");
    list = &doc["policy"];
  }
  if (!list->is_array() || static_cast<int>(list->size()) != mdp.num_states()) {
    throw ParseError(fmt::format("policy: expected an array of {} actions", mdp.num_states()));
  }
  Policy mu;
  for (std::size_t s = 0; s < list->size(); ++s) {
    const auto& a = (*list)[s];
    if (!a.is_number_integer() || a.get<int>() < 0 ||
        a.get<int>() >= mdp.num_actions(static_cast<StateId>(s))) {
      throw ParseError(fmt::format("policy[{}]: not an action index of state {}", s, s));
    }
    mu.push_back(a.get<int>());
  }
  return mu;
}

int cmd_diagnose(const std::string& path, const std::string& policy_path, long samples,
                 std::uint64_t seed, double bias, const std::string& out_path,
                 std::ostream& out) {
  const MdpFile file = load_mdp(path);
  require_valid(analyze_structure(file.mdp, file.initial));
  const Policy mu = load_policy(policy_path, file.mdp);
  Rng rng(seed);
  const std::string text =
      diagnostics_csv(estimator_diagnostics(file.mdp, mu, file.initial, samples, rng, bias));
  if (out_path.empty()) {
    out << text;
  } else {
    write_file_atomic(out_path, text);
  }
  return kExitOk;
}

bool is_validation_error(const Error& e) {
  return dynamic_cast<const ParseError*>(&e) || dynamic_cast<const InvariantViolation*>(&e) ||
         dynamic_cast<const Assumption2Violation*>(&e) ||
         dynamic_cast<const StructureViolation*>(&e) ||
         dynamic_cast<const LayeringViolation*>(&e);
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Monte Carlo optimistic policy iteration on finite MDPs", "mcopi"};
  app.require_subcommand(1);

  std::string validate_input;
  auto* validate = app.add_subcommand("validate", "check the structural requirements");
  validate->add_option("input", validate_input, "model file")->required()->check(
      CLI::ExistingFile);

  std::string solve_input, solve_out;
  auto* solve = app.add_subcommand("solve", "exact J*, policy and optimal action sets as JSON");
  solve->add_option("input", solve_input, "model file")->required()->check(CLI::ExistingFile);
  solve->add_option("--out", solve_out, "write JSON here instead of stdout");

  RunOptions opi_opts, ssp_opts, game_opts, agg_opts;
  add_run_options(app.add_subcommand("opi", "run OPI on a discounted model"), opi_opts);
  add_run_options(app.add_subcommand("ssp", "run OPI on a stochastic shortest path model"),
                  ssp_opts);
  add_run_options(app.add_subcommand("game", "run OPI on an alternating game"), game_opts);
  auto* aggregate = app.add_subcommand("aggregate", "run cluster-aggregated OPI");
  add_run_options(aggregate, agg_opts);
  std::string clusters_path;
  bool skip_check = false;
  double tol = 1e-9;
  aggregate->add_option("--clusters", clusters_path, "cluster file")->required()->check(
      CLI::ExistingFile);
  aggregate->add_flag("--skip-value-check", skip_check, "do not compare J* inside clusters");
  aggregate->add_option("--tol", tol, "tolerance for equal J* inside a cluster");

  ExperimentOptions exp_opts;
  auto* experiment = app.add_subcommand("experiment", "compare trajectory and first-state updates");
  experiment->add_option("--gen", exp_opts.gen, "exp1 or exp2")
      ->required()
      ->check(CLI::IsMember({"exp1", "exp2"}));
  auto* graph_opt = experiment->add_option("--graph", exp_opts.graph, "edge-list JSON file")
                        ->check(CLI::ExistingFile);
  experiment->add_option("--random", exp_opts.random, "random graph N,D,SEED")
      ->excludes(graph_opt);
  experiment->add_option("--trials", exp_opts.trials, "paired trials")->check(
      CLI::NonNegativeNumber);
  experiment->add_option("--seed", exp_opts.seed, "base seed");
  experiment->add_option("--cap", exp_opts.cap, "iteration cap per trial")->check(
      CLI::PositiveNumber);
  experiment->add_option("--bias", exp_opts.bias, "truncation bias bound")->check(
      CLI::PositiveNumber);
  experiment->add_option("--threads", exp_opts.threads, "worker threads (0 = OPI_THREADS)")
      ->check(CLI::NonNegativeNumber);
  experiment->add_option("--bins", exp_opts.bins, "histogram bins")->check(CLI::PositiveNumber);
  experiment->add_option("--out-dir", exp_opts.out_dir, "directory for the CSV files");

  std::string diag_input, diag_policy, diag_out;
  long diag_samples = 10000;
  std::uint64_t diag_seed = 0;
  double diag_bias = 1e-6;
  auto* diagnose = app.add_subcommand("diagnose", "check first-visit estimates for a policy");
  diagnose->add_option("input", diag_input, "model file")->required()->check(CLI::ExistingFile);
  diagnose->add_option("--policy", diag_policy, "JSON policy (a list or solve output)")
      ->required()
      ->check(CLI::ExistingFile);
  diagnose->add_option("--samples", diag_samples, "trajectories to draw")->check(
      CLI::PositiveNumber);
  diagnose->add_option("--seed", diag_seed, "random seed");
  diagnose->add_option("--bias", diag_bias, "truncation bias bound")->check(CLI::PositiveNumber);
  diagnose->add_option("--out", diag_out, "write CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*validate) return cmd_validate(validate_input, out);
    if (*solve) return cmd_solve(solve_input, solve_out, out);
    if (app.got_subcommand("opi")) return cmd_opi(opi_opts, false, out);
    if (app.got_subcommand("ssp")) return cmd_opi(ssp_opts, true, out);
    if (app.got_subcommand("game")) return cmd_game(game_opts, out);
    if (*aggregate) return cmd_aggregate(agg_opts, clusters_path, skip_check, tol, out);
    if (*experiment) return cmd_experiment(exp_opts, out);
    if (*diagnose) {
      return cmd_diagnose(diag_input, diag_policy, diag_samples, diag_seed, diag_bias, diag_out,
                          out);
    }
  } catch (const ValidationFailure& e) {
    fmt::print(err, "mcopi: error: ValidationFailure: {}\n", e.message);
    return kExitValidation;
  } catch (const Error& e) {
    fmt::print(err, "mcopi: error: {}: {}\n", e.kind(), e.what());
    return is_validation_error(e) ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    fmt::print(err, "mcopi: error: RuntimeError: {}\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}

int cli_main(int argc, const char* const* argv) {
  return cli_main(argc, argv, std::cout, std::cerr);
}

}  // namespace mcopi

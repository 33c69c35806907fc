// Copyright 2026 The adact Authors
// SPDX-License-Identifier: Apache-2.0

#include "adact/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "adact/activation.hpp"
#include "adact/controller.hpp"
#include "adact/cost_model.hpp"
#include "adact/graph.hpp"
#include "adact/planner.hpp"
#include "adact/sensitivity.hpp"

namespace adact::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Options {
  std::string model;
  std::string dataset;
  std::string calib;
  std::string table;
  std::string trace;
  std::string sparsity_levels = "0,0.25,0.5,0.75,1";
  std::string precisions = "fp32,fp16,fp8,int4,int2";
  std::string budget;
  std::string budget_list;
  std::optional<double> latency_budget;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  bool joint_eval = false;
  std::size_t eval_subset = 0;
  std::size_t bins = 64;
  unsigned threads = 0;
  double period_ms = 1.0;
};

// Collects the run manifest while a command executes.
class Run {
 public:
  Run(std::string command, int argc, const char* const* argv, const Options& o) : command_(std::move(command)) {
    for (int i = 0; i < argc; ++i) argv_.emplace_back(argv[i]);
    out_dir_ = o.out_dir;
    seed_ = o.seed;
  }

  void input(const std::string& key, const std::string& path) {
    if (!path.empty()) inputs_[key] = fs::absolute(path).string();
  }
  void grid(const std::string& key, json value) { grid_[key] = std::move(value); }

  fs::path output(const std::string& name) {
    fs::create_directories(out_dir_);
    const fs::path p = out_dir_ / name;
    outputs_.push_back(p.string());
    return p;
  }

  void write_manifest() {
    json j;
    j["command"] = command_;
    j["argv"] = argv_;
    j["inputs"] = inputs_;
    j["grid"] = grid_;
    j["seed"] = seed_;
    j["outputs"] = outputs_;
    j["tool_version"] = ADACT_VERSION;
    fs::create_directories(out_dir_);
    std::ofstream(out_dir_ / "run_manifest.json") << j.dump(2) << '\n';
  }

 private:
  std::string command_;
  std::vector<std::string> argv_;
  fs::path out_dir_;
  std::uint64_t seed_ = 0;
  json inputs_ = json::object();
  json grid_ = json::object();
  std::vector<std::string> outputs_;
};

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw InvalidInputError("cannot write " + p.string());
  return f;
}

void require(const std::string& value, const char* flag, const char* command) {
  if (value.empty()) throw InvalidInputError(std::string(command) + " requires " + flag);
}

Budget make_budget(const std::string& text, const Options& o) {
  Budget b{parse_byte_count(text), o.latency_budget};
  b.validate();
  return b;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void print_cost_table(std::ostream& out, const Model& m, const std::vector<LayerCost>& layers, const CostReport& r) {
  out << "model " << m.name() << "  input " << shape_to_string(m.input_shape()) << "  classes " << m.class_count()
      << '\n';
  out << std::left << std::setw(20) << "layer" << std::setw(18) << "kind" << std::setw(16) << "output" << std::right
      << std::setw(12) << "params" << std::setw(14) << "param_bytes" << std::setw(14) << "act_bytes" << std::setw(16)
      << "macs" << '\n';
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& c = layers[i];
    out << std::left << std::setw(20) << c.layer_id << std::setw(18) << to_string(c.kind) << std::setw(16)
        << shape_to_string(m.layer(i).output_shape) << std::right << std::setw(12) << c.param_count << std::setw(14)
        << c.param_bytes << std::setw(14) << c.activation_bytes << std::setw(16) << c.macs << '\n';
  }
  out << "params " << r.param_bytes << " B, activations " << r.activation_bytes << " B, total " << r.total_bytes
      << " B (" << std::fixed << std::setprecision(2) << static_cast<double>(r.total_bytes) / 1e6
      << " MB), latency proxy " << std::setprecision(0) << r.latency_proxy << '\n';
  out.unsetf(std::ios::floatfield);
  out << std::setprecision(6);
}

int cmd_inspect(const Options& o, Run& run, std::ostream& out) {
  require(o.model, "--model", "inspect");
  run.input("model", o.model);
  const Model m = load_model(o.model);
  const CostModel cost(m);
  const RuntimeConfig config = m.baseline_config();
  const auto layers = cost.layer_costs(config);
  const CostReport r = cost.evaluate(config);
  print_cost_table(out, m, layers, r);
  open_out(run.output("cost.json")) << cost_report_json(r, layers) << '\n';
  auto csv = open_out(run.output("cost.csv"));
  write_cost_csv(csv, r, layers);
  return kExitOk;
}

std::map<std::string, CalibrationProfile> calibrate_checked(const Model& m, const Dataset& calib, const Options& o,
                                                            std::ostream& err) {
  CalibrationOptions copts;
  copts.seed = o.seed;
  auto profiles = calibrate_all(m, calib, copts);
  for (const auto& [id, p] : profiles) {
    if (is_degenerate(p, copts.min_samples)) {
      err << "warning: profile for '" << id << "' is degenerate (" << p.sample_count() << " samples, fewer than "
          << copts.min_samples << ")\n";
    }
  }
  return profiles;
}

int cmd_calibrate(const Options& o, Run& run, std::ostream& out, std::ostream& err) {
  require(o.model, "--model", "calibrate");
  const std::string data = o.calib.empty() ? o.dataset : o.calib;
  require(data, "--calib", "calibrate");
  run.input("model", o.model);
  run.input("calib", data);
  run.grid("bins", o.bins);
  const Model m = load_model(o.model);
  const Dataset ds = load_dataset(data);
  const auto profiles = calibrate_checked(m, ds, o, err);

  open_out(run.output("profiles.json")) << profiles_to_json(profiles) << '\n';
  for (const auto& id : m.activation_ids()) {
    const auto& p = profiles.at(id);
    auto csv = open_out(run.output("histogram_" + id + ".csv"));
    write_histogram_csv(csv, histogram(p.samples, o.bins));
    out << id << ": " << p.sample_count() << " samples, baseline zeros " << p.baseline_zero_fraction << '\n';
  }
  return kExitOk;
}

int cmd_sensitivity(const Options& o, Run& run, std::ostream& out, std::ostream& err) {
  require(o.model, "--model", "sensitivity");
  require(o.dataset, "--dataset", "sensitivity");
  const std::string calib = o.calib.empty() ? o.dataset : o.calib;
  run.input("model", o.model);
  run.input("dataset", o.dataset);
  run.input("calib", calib);

  SensitivityOptions sopts;
  sopts.sparsity_levels = parse_sparsity_levels(o.sparsity_levels);
  sopts.precisions = parse_precisions(o.precisions);
  sopts.eval_subset = o.eval_subset;
  sopts.threads = o.threads;
  run.grid("sparsity_levels", sopts.sparsity_levels);
  json precisions = json::array();
  for (Precision p : sopts.precisions) precisions.push_back(std::string(to_string(p)));
  run.grid("precisions", precisions);
  run.grid("eval_subset", o.eval_subset);

  const Model m = load_model(o.model);
  const Dataset calib_ds = load_dataset(calib);
  const Dataset eval_ds = load_dataset(o.dataset);
  const auto profiles = calibrate_checked(m, calib_ds, o, err);
  const SensitivityTable t = analyze(m, eval_ds, profiles, sopts);

  auto csv = open_out(run.output("sensitivity.csv"));
  write_table_csv(csv, t);
  open_out(run.output("sensitivity.json")) << table_to_json(t) << '\n';
  out << t.records.size() << " records, baseline accuracy " << t.baseline_accuracy << ", baseline memory "
      << t.baseline_memory_bytes << " B\n";
  return kExitOk;
}

struct PlanInputs {
  Model model;
  SensitivityTable table;
  std::vector<Candidate> ranklist;
};

PlanInputs load_plan_inputs(const Options& o, Run& run, const char* command) {
  require(o.model, "--model", command);
  require(o.table, "--table", command);
  run.input("model", o.model);
  run.input("table", o.table);
  Model m = load_model(o.model);
  SensitivityTable t = load_table(o.table);
  check_table_matches(m, t);
  auto ranklist = build_ranklist(t);
  return {std::move(m), std::move(t), std::move(ranklist)};
}

std::optional<Dataset> joint_dataset(const Options& o, Run& run, const char* command) {
  if (!o.joint_eval) return std::nullopt;
  require(o.dataset, "--dataset with --joint-eval", command);
  run.input("dataset", o.dataset);
  Dataset ds = load_dataset(o.dataset);
  if (o.eval_subset > 0 && o.eval_subset < ds.size()) ds = ds.head(o.eval_subset);
  return ds;
}

int cmd_plan(const Options& o, Run& run, std::ostream& out) {
  require(o.budget, "--budget", "plan");
  const PlanInputs in = load_plan_inputs(o, run, "plan");
  const Budget budget = make_budget(o.budget, o);
  run.grid("budget", budget.memory_bytes);
  if (budget.latency_proxy) run.grid("latency_budget", *budget.latency_proxy);
  const auto ds = joint_dataset(o, run, "plan");

  Plan plan = greedy_select(in.ranklist, in.model, budget, in.table.baseline_accuracy);
  if (ds) joint_evaluate(in.model, plan, *ds);
  open_out(run.output("plan.json")) << plan_to_json(plan) << '\n';
  out << plan.assignments.size() << " layer(s) changed, memory " << plan.baseline_memory_bytes << " -> "
      << plan.projected_memory_bytes << " B, accuracy drop sum " << plan.projected_accuracy_drop_sum;
  if (plan.joint_accuracy) out << ", joint accuracy " << *plan.joint_accuracy;
  out << '\n';
  return kExitOk;
}

int cmd_sweep(const Options& o, Run& run, std::ostream& out) {
  require(o.budget_list, "--budget-list", "sweep");
  const PlanInputs in = load_plan_inputs(o, run, "sweep");
  const auto ds = joint_dataset(o, run, "sweep");
  const auto items = split_list(o.budget_list);
  if (items.empty()) throw InvalidInputError("--budget-list is empty");
  std::vector<Budget> budgets;
  for (const auto& item : items) budgets.push_back(make_budget(item, o));
  json grid = json::array();
  for (const auto& b : budgets) grid.push_back(b.memory_bytes);
  run.grid("budget_list", grid);

  auto csv = open_out(run.output("sweep.csv"));
  csv << "budget_bytes,status,memory_bytes,latency_proxy,accuracy_estimate,joint_accuracy,assignments\n";
  csv << std::setprecision(10);
  for (const auto& b : budgets) {
    csv << b.memory_bytes << ',';
    try {
      Plan plan = greedy_select(in.ranklist, in.model, b, in.table.baseline_accuracy);
      if (ds) joint_evaluate(in.model, plan, *ds);
      csv << "ok," << plan.projected_memory_bytes << ',' << plan.projected_latency_proxy << ','
          << in.table.baseline_accuracy - plan.projected_accuracy_drop_sum << ',';
      if (plan.joint_accuracy) csv << *plan.joint_accuracy;
      csv << ',';
      for (std::size_t i = 0; i < plan.assignments.size(); ++i) {
        const auto& a = plan.assignments[i];
        csv << (i ? ";" : "") << a.layer_id << ':' << a.sparsity << ':' << to_string(a.precision);
      }
      csv << '\n';
    } catch (const InfeasibleBudgetError& e) {
      csv << "infeasible,,,,,\n";
      out << "budget " << b.memory_bytes << " B infeasible (floor " << e.floor_memory_bytes() << " B)\n";
    }
  }
  out << budgets.size() << " budget(s) swept\n";
  return kExitOk;
}

int cmd_simulate(const Options& o, Run& run, std::ostream& out) {
  require(o.trace, "--trace", "simulate");
  require(o.dataset, "--dataset", "simulate");
  const PlanInputs in = load_plan_inputs(o, run, "simulate");
  run.input("trace", o.trace);
  run.input("dataset", o.dataset);
  run.grid("period_ms", o.period_ms);
  const BudgetSignal signal = load_budget_trace(o.trace);
  Dataset ds = load_dataset(o.dataset);
  if (o.eval_subset > 0 && o.eval_subset < ds.size()) ds = ds.head(o.eval_subset);

  const ControllerLog log = run_adaptive(in.model, in.table, signal, ds, o.period_ms);
  auto jsonl = open_out(run.output("controller_log.jsonl"));
  write_log_jsonl(jsonl, log);
  for (const auto& r : log.records) {
    out << "event " << r.event_index << " t=" << r.event.timestamp_ms << "ms budget " << r.event.memory_budget_bytes
        << " B -> " << (r.feasible ? "ok" : "infeasible") << ", memory " << r.plan.projected_memory_bytes << " B, "
        << r.inferences_served << " inferences\n";
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Budget-adaptive activation sparsity and precision planner", "adact"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("adact ") + ADACT_VERSION);
  Options o;

  auto add_model = [&](CLI::App* c) { c->add_option("--model", o.model, "Model manifest JSON")->check(CLI::ExistingFile); };
  auto add_out = [&](CLI::App* c) { c->add_option("--out-dir", o.out_dir, "Output directory")->capture_default_str(); };
  auto add_seed = [&](CLI::App* c) { c->add_option("--seed", o.seed, "Calibration sampling seed")->capture_default_str(); };
  auto add_table = [&](CLI::App* c) { c->add_option("--table", o.table, "Sensitivity table JSON")->check(CLI::ExistingFile); };
  auto add_joint = [&](CLI::App* c) {
    c->add_flag("--joint-eval", o.joint_eval, "Measure the accuracy of each plan on --dataset");
    c->add_option("--dataset", o.dataset, "Evaluation dataset directory")->check(CLI::ExistingDirectory);
    c->add_option("--eval-subset", o.eval_subset, "Use only the first N samples");
    c->add_option("--latency-budget", o.latency_budget, "Latency proxy budget");
  };

  auto* inspect = app.add_subcommand("inspect", "Print per-layer parameters, activations and memory");
  add_model(inspect);
  add_out(inspect);

  auto* calibrate = app.add_subcommand("calibrate", "Profile activation outputs");
  add_model(calibrate);
  calibrate->add_option("--calib,--dataset", o.calib, "Calibration dataset directory")->check(CLI::ExistingDirectory);
  calibrate->add_option("--bins", o.bins, "Histogram bins")->capture_default_str();
  add_seed(calibrate);
  add_out(calibrate);

  auto* sensitivity = app.add_subcommand("sensitivity", "Sweep sparsity x precision per activation layer");
  add_model(sensitivity);
  sensitivity->add_option("--dataset", o.dataset, "Evaluation dataset directory")->check(CLI::ExistingDirectory);
  sensitivity->add_option("--calib", o.calib, "Calibration dataset directory (defaults to --dataset)")
      ->check(CLI::ExistingDirectory);
  sensitivity->add_option("--sparsity-levels", o.sparsity_levels, "Comma-separated levels")->capture_default_str();
  sensitivity->add_option("--precisions", o.precisions, "Comma-separated precisions")->capture_default_str();
  sensitivity->add_option("--eval-subset", o.eval_subset, "Use only the first N samples");
  sensitivity->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  add_seed(sensitivity);
  add_out(sensitivity);

  auto* plan = app.add_subcommand("plan", "Greedy plan for one memory budget");
  add_model(plan);
  add_table(plan);
  plan->add_option("--budget", o.budget, "Memory budget, e.g. 5000000 or 48KiB");
  add_joint(plan);
  add_out(plan);

  auto* sweep = app.add_subcommand("sweep", "Plans for a list of budgets");
  add_model(sweep);
  add_table(sweep);
  sweep->add_option("--budget-list", o.budget_list, "Comma-separated memory budgets");
  add_joint(sweep);
  add_out(sweep);

  auto* simulate = app.add_subcommand("simulate", "Replay a budget trace through the runtime controller");
  add_model(simulate);
  add_table(simulate);
  simulate->add_option("--trace", o.trace, "Budget trace CSV")->check(CLI::ExistingFile);
  simulate->add_option("--dataset", o.dataset, "Workload dataset directory")->check(CLI::ExistingDirectory);
  simulate->add_option("--eval-subset", o.eval_subset, "Serve only the first N samples");
  simulate->add_option("--period-ms", o.period_ms, "Simulated time between inferences")->capture_default_str();
  add_out(simulate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalidInput;
  }

  CLI::App* chosen = app.get_subcommands().front();
  Run run(chosen->get_name(), argc, argv, o);
  try {
    int code = kExitOk;
    if (chosen == inspect) code = cmd_inspect(o, run, out);
    else if (chosen == calibrate) code = cmd_calibrate(o, run, out, err);
    else if (chosen == sensitivity) code = cmd_sensitivity(o, run, out, err);
    else if (chosen == plan) code = cmd_plan(o, run, out);
    else if (chosen == sweep) code = cmd_sweep(o, run, out);
    else code = cmd_simulate(o, run, out);
    run.write_manifest();
    return code;
  } catch (const InfeasibleBudgetError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const InvalidInputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalidInput;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalidInput;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitNumeric;
  }
}

}  // namespace adact::cli

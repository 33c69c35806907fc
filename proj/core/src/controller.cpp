// Copyright 2026 The adact Authors
// SPDX-License-Identifier: Apache-2.0

#include "adact/controller.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "adact/cost_model.hpp"

namespace adact {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::uint64_t parse_u64(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    if (s.empty() || s[0] == '-') throw std::invalid_argument(s);
    const unsigned long long v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidInputError("budget trace line " + std::to_string(line_no) + ": bad integer '" + s + "'");
  }
}

}  // namespace

BudgetSignal::BudgetSignal(std::vector<BudgetEvent> events) : events_(std::move(events)) {
  for (std::size_t i = 0; i < events_.size(); ++i) {
    events_[i].budget().validate();
    if (i > 0 && events_[i].timestamp_ms <= events_[i - 1].timestamp_ms) {
      throw InvalidInputError("budget events must have strictly increasing timestamps (event " + std::to_string(i) +
                              ")");
    }
  }
}

BudgetSignal parse_budget_trace(std::istream& in) {
  std::vector<BudgetEvent> events;
  std::string line;
  std::size_t line_no = 0;
  bool seen_data = false;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (!seen_data && !std::isdigit(static_cast<unsigned char>(line[0]))) {
      seen_data = true;  // header row
      continue;
    }
    seen_data = true;
    const auto f = split_commas(line);
    if (f.size() < 2 || f.size() > 3) {
      throw InvalidInputError("budget trace line " + std::to_string(line_no) + ": expected 2 or 3 fields");
    }
    BudgetEvent e;
    e.timestamp_ms = parse_u64(f[0], line_no);
    e.memory_budget_bytes = parse_u64(f[1], line_no);
    if (f.size() == 3 && !f[2].empty()) {
      try {
        std::size_t used = 0;
        e.latency_budget_proxy = std::stod(f[2], &used);
        if (used != f[2].size()) throw std::invalid_argument(f[2]);
      } catch (const std::exception&) {
        throw InvalidInputError("budget trace line " + std::to_string(line_no) + ": bad latency budget '" + f[2] +
                                "'");
      }
    }
    events.push_back(e);
  }
  return BudgetSignal(std::move(events));
}

BudgetSignal load_budget_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open budget trace " + path.string());
  return parse_budget_trace(in);
}

void write_log_jsonl(std::ostream& out, const ControllerLog& log) {
  using json = nlohmann::json;
  for (const auto& r : log.records) {
    json j;
    j["event_index"] = r.event_index;
    j["timestamp_ms"] = r.event.timestamp_ms;
    j["memory_budget_bytes"] = r.event.memory_budget_bytes;
    j["latency_budget_proxy"] = r.event.latency_budget_proxy ? json(*r.event.latency_budget_proxy) : json(nullptr);
    j["status"] = r.feasible ? "ok" : "infeasible";
    j["plan"] = json::parse(plan_to_json(r.plan));
    j["projected_memory_bytes"] = r.plan.projected_memory_bytes;
    j["projected_latency_proxy"] = r.plan.projected_latency_proxy;
    j["memory_shortfall_bytes"] = r.memory_shortfall_bytes;
    j["latency_shortfall"] = r.latency_shortfall;
    j["replan_us"] = r.replan_us;
    j["inferences_served"] = r.inferences_served;
    j["correct"] = r.correct;
    out << j.dump() << '\n';
  }
}

AdaptiveController::AdaptiveController(const Model& m)
    : model_(&m), active_(std::make_shared<const RuntimeConfig>(m.baseline_config())) {}

void AdaptiveController::swap_config(const Plan& p) { swap_config(p.runtime_config()); }

void AdaptiveController::swap_config(const RuntimeConfig& partial) {
  // complete_config validates before anything is published.
  auto next = std::make_shared<const RuntimeConfig>(model_->complete_config(partial));
  std::lock_guard lock(mu_);
  active_ = std::move(next);
}

std::shared_ptr<const RuntimeConfig> AdaptiveController::snapshot() const {
  std::lock_guard lock(mu_);
  return active_;
}

Tensor AdaptiveController::infer(const Tensor& input) const {
  const auto pinned = snapshot();
  return forward(*model_, *pinned, input);
}

void check_table_matches(const Model& m, const SensitivityTable& t) {
  if (t.model_name != m.name()) {
    throw InvalidInputError("sensitivity table is for model '" + t.model_name + "', not '" + m.name() + "'");
  }
  if (t.layer_ids != m.activation_ids()) {
    throw InvalidInputError("sensitivity table layer ids do not match the aa_relu layers of '" + m.name() + "'");
  }
  const std::uint64_t base = memory_cost(m).total_bytes;
  if (t.baseline_memory_bytes != base) {
    throw InvalidInputError("sensitivity table baseline memory " + std::to_string(t.baseline_memory_bytes) +
                            " does not match the model's " + std::to_string(base) + " bytes");
  }
}

ControllerLog run_adaptive(const Model& m, const SensitivityTable& table, const BudgetSignal& signal,
                           const Dataset& workload, double period_ms) {
  if (signal.empty()) throw InvalidInputError("budget signal is empty");
  if (!(period_ms > 0.0) || !std::isfinite(period_ms)) throw InvalidInputError("inference period must be positive");
  check_table_matches(m, table);
  workload.validate();

  const std::vector<Candidate> ranklist = build_ranklist(table);
  AdaptiveController controller(m);
  const auto& events = signal.events();
  const double t0 = static_cast<double>(events.front().timestamp_ms);

  ControllerLog log;
  std::size_t next = 0;
  for (std::size_t k = 0; k < events.size(); ++k) {
    ControllerRecord rec;
    rec.event_index = k;
    rec.event = events[k];
    const Budget budget = events[k].budget();

    const auto start = std::chrono::steady_clock::now();
    try {
      rec.plan = greedy_select(ranklist, m, budget, table.baseline_accuracy);
    } catch (const InfeasibleBudgetError&) {
      rec.feasible = false;
      rec.plan = minimum_memory_plan(ranklist, m, table.baseline_accuracy);
      rec.plan.budget = budget;
      if (rec.plan.projected_memory_bytes > budget.memory_bytes) {
        rec.memory_shortfall_bytes = rec.plan.projected_memory_bytes - budget.memory_bytes;
      }
      if (budget.latency_proxy && rec.plan.projected_latency_proxy > *budget.latency_proxy) {
        rec.latency_shortfall = rec.plan.projected_latency_proxy - *budget.latency_proxy;
      }
    }
    controller.swap_config(rec.plan);
    rec.replan_us =
        std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - start).count();

    const bool last = k + 1 == events.size();
    const double end = last ? 0.0 : static_cast<double>(events[k + 1].timestamp_ms);
    while (next < workload.size() && (last || t0 + static_cast<double>(next) * period_ms < end)) {
      const Tensor out = controller.infer(workload.sample(next));
      if (static_cast<int>(argmax(out.data())) == workload.labels[next]) ++rec.correct;
      ++rec.inferences_served;
      ++next;
    }
    log.records.push_back(std::move(rec));
  }
  return log;
}

}  // namespace adact

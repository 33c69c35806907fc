// Copyright 2026 The adact Authors
// SPDX-License-Identifier: Apache-2.0

#include "adact/planner.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

namespace adact {

namespace {

using json = nlohmann::json;

bool rank_before(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.accuracy_drop != b.accuracy_drop) return a.accuracy_drop < b.accuracy_drop;
  if (a.layer_order != b.layer_order) return a.layer_order < b.layer_order;
  if (a.sparsity != b.sparsity) return a.sparsity > b.sparsity;
  return bits(a.precision) < bits(b.precision);
}

Assignment to_assignment(const Candidate& c) {
  return {c.layer_id, c.sparsity, c.threshold, c.precision, c.accuracy_drop, c.memory_saved_bytes};
}

LayerRuntimeConfig to_config(const Candidate& c) { return {c.threshold, c.precision, c.sparsity}; }

// Fills the projected fields and ordered assignments from the chosen
// candidates (keyed by layer order).
void finalize(Plan& plan, const std::map<std::size_t, Candidate>& chosen, const CostReport& r) {
  plan.assignments.clear();
  plan.projected_accuracy_drop_sum = 0.0;
  for (const auto& [order, c] : chosen) {
    plan.assignments.push_back(to_assignment(c));
    plan.projected_accuracy_drop_sum += c.accuracy_drop;
  }
  plan.projected_memory_bytes = r.total_bytes;
  plan.projected_latency_proxy = r.latency_proxy;
}

Plan start_plan(const Budget& budget, const CostReport& base, double baseline_accuracy) {
  Plan plan;
  plan.budget = budget;
  plan.baseline_memory_bytes = base.total_bytes;
  plan.baseline_latency_proxy = base.latency_proxy;
  plan.baseline_accuracy = baseline_accuracy;
  plan.projected_memory_bytes = base.total_bytes;
  plan.projected_latency_proxy = base.latency_proxy;
  return plan;
}

void check_candidate_layers(const std::vector<Candidate>& ranklist, const Model& m) {
  for (const auto& c : ranklist) {
    if (!m.is_activation(c.layer_id)) {
      throw InvalidInputError("candidate layer '" + c.layer_id + "' is not an aa_relu layer of model '" + m.name() + "'");
    }
  }
}

std::string describe(const Budget& b) {
  std::string s = "memory budget " + std::to_string(b.memory_bytes) + " bytes";
  if (b.latency_proxy) s += " and latency budget " + std::to_string(*b.latency_proxy);
  return s;
}

json budget_json(const Budget& b) {
  json j{{"memory_bytes", b.memory_bytes}};
  j["latency_proxy"] = b.latency_proxy ? json(*b.latency_proxy) : json(nullptr);
  return j;
}

json candidate_json(const Candidate& c) {
  return {{"layer_id", c.layer_id},
          {"layer_order", c.layer_order},
          {"s", c.sparsity},
          {"T", c.threshold},
          {"precision", std::string(to_string(c.precision))},
          {"accuracy_drop", c.accuracy_drop},
          {"memory_saved_bytes", c.memory_saved_bytes},
          {"score", c.score}};
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

void Budget::validate() const {
  if (memory_bytes == 0) throw InvalidInputError("memory budget must be positive");
  if (latency_proxy && (!std::isfinite(*latency_proxy) || *latency_proxy < 0.0)) {
    throw InvalidInputError("latency budget must be finite and non-negative");
  }
}

bool Budget::met_by(const CostReport& r) const noexcept {
  if (r.total_bytes > memory_bytes) return false;
  return !latency_proxy || r.latency_proxy <= *latency_proxy;
}

RuntimeConfig Plan::runtime_config() const {
  RuntimeConfig c;
  for (const auto& a : assignments) c[a.layer_id] = LayerRuntimeConfig{a.threshold, a.precision, a.sparsity};
  return c;
}

std::vector<Candidate> build_ranklist(const SensitivityTable& t) {
  t.validate();
  std::map<std::string, std::size_t> order;
  for (std::size_t i = 0; i < t.layer_ids.size(); ++i) order[t.layer_ids[i]] = i;

  std::vector<Candidate> out;
  for (const auto& r : t.records) {
    if (r.sparsity == 0.0 && r.precision == Precision::FP32) continue;
    if (r.memory_saved_bytes <= 0) continue;
    Candidate c;
    c.layer_id = r.layer_id;
    c.layer_order = order.at(r.layer_id);
    c.sparsity = r.sparsity;
    c.precision = r.precision;
    c.threshold = r.threshold;
    c.accuracy_drop = t.baseline_accuracy - r.accuracy;
    c.memory_saved_bytes = r.memory_saved_bytes;
    c.score = static_cast<double>(r.memory_saved_bytes) / std::max(c.accuracy_drop, kDropEpsilon);
    out.push_back(std::move(c));
  }
  std::stable_sort(out.begin(), out.end(), rank_before);
  return out;
}

Plan greedy_select(const std::vector<Candidate>& ranklist, const Model& m, const Budget& budget,
                   double baseline_accuracy) {
  budget.validate();
  check_candidate_layers(ranklist, m);
  const CostModel cost(m);
  RuntimeConfig config = m.baseline_config();
  const CostReport base = cost.evaluate(config);
  Plan plan = start_plan(budget, base, baseline_accuracy);
  if (budget.met_by(base)) return plan;

  std::map<std::size_t, Candidate> chosen;
  for (const auto& c : ranklist) {
    auto it = chosen.find(c.layer_order);
    if (it != chosen.end() && c.memory_saved_bytes <= it->second.memory_saved_bytes) continue;
    chosen[c.layer_order] = c;
    config[c.layer_id] = to_config(c);
    plan.provenance.push_back(c);

    const CostReport r = cost.evaluate(config);
    if (budget.met_by(r)) {
      finalize(plan, chosen, r);
      return plan;
    }
  }

  const std::uint64_t floor = minimum_memory_plan(ranklist, m).projected_memory_bytes;
  throw InfeasibleBudgetError("no selection meets the " + describe(budget) + "; lowest reachable memory is " +
                                  std::to_string(floor) + " bytes",
                              floor);
}

Plan minimum_memory_plan(const std::vector<Candidate>& ranklist, const Model& m, double baseline_accuracy) {
  check_candidate_layers(ranklist, m);
  const CostModel cost(m);
  RuntimeConfig config = m.baseline_config();
  const CostReport base = cost.evaluate(config);

  std::map<std::size_t, Candidate> chosen;
  for (const auto& c : ranklist) {
    auto it = chosen.find(c.layer_order);
    if (it != chosen.end() && c.memory_saved_bytes <= it->second.memory_saved_bytes) continue;
    chosen[c.layer_order] = c;
  }
  Plan plan = start_plan(Budget{}, base, baseline_accuracy);
  for (const auto& [order, c] : chosen) {
    config[c.layer_id] = to_config(c);
    plan.provenance.push_back(c);
  }
  finalize(plan, chosen, cost.evaluate(config));
  plan.budget.memory_bytes = plan.projected_memory_bytes;
  return plan;
}

Plan brute_force_select(const SensitivityTable& t, const Model& m, const Budget& budget,
                        std::size_t max_assignments) {
  budget.validate();
  const std::vector<Candidate> ranklist = build_ranklist(t);
  check_candidate_layers(ranklist, m);

  // Per-layer options in table order: s ascending as listed, then precision as listed.
  const std::size_t n_layers = t.layer_ids.size();
  std::vector<std::vector<Candidate>> options(n_layers);
  for (const auto& r : t.records) {
    for (const auto& c : ranklist) {
      if (c.layer_id == r.layer_id && c.sparsity == r.sparsity && c.precision == r.precision) {
        options[c.layer_order].push_back(c);
        break;
      }
    }
  }

  double space = 1.0;
  for (const auto& o : options) space *= static_cast<double>(o.size() + 1);
  if (space > static_cast<double>(max_assignments)) {
    throw InvalidInputError("brute_force_select: " + std::to_string(static_cast<unsigned long long>(space)) +
                            " assignments exceed the limit of " + std::to_string(max_assignments));
  }

  const CostModel cost(m);
  const RuntimeConfig baseline = m.baseline_config();
  const CostReport base = cost.evaluate(baseline);

  std::vector<std::size_t> choice(n_layers, 0);  // 0 = baseline, k = options[k - 1]
  std::optional<std::vector<std::size_t>> best;
  double best_drop = 0.0;
  std::uint64_t best_memory = 0;
  std::uint64_t floor = base.total_bytes;

  for (;;) {
    RuntimeConfig config = baseline;
    double drop = 0.0;
    for (std::size_t l = 0; l < n_layers; ++l) {
      if (choice[l] == 0) continue;
      const Candidate& c = options[l][choice[l] - 1];
      config[c.layer_id] = to_config(c);
      drop += c.accuracy_drop;
    }
    const CostReport r = cost.evaluate(config);
    floor = std::min(floor, r.total_bytes);
    if (budget.met_by(r)) {
      const bool better = !best || drop < best_drop ||
                          (drop == best_drop && (r.total_bytes < best_memory ||
                                                 (r.total_bytes == best_memory && choice < *best)));
      if (better) {
        best = choice;
        best_drop = drop;
        best_memory = r.total_bytes;
      }
    }

    // Odometer increment, last layer fastest.
    std::size_t l = n_layers;
    while (l > 0) {
      --l;
      if (++choice[l] <= options[l].size()) break;
      choice[l] = 0;
      if (l == 0) {
        l = n_layers + 1;
        break;
      }
    }
    if (l == n_layers + 1 || n_layers == 0) break;
  }

  if (!best) {
    throw InfeasibleBudgetError("no selection meets the " + describe(budget) + "; lowest reachable memory is " +
                                    std::to_string(floor) + " bytes",
                                floor);
  }

  Plan plan = start_plan(budget, base, t.baseline_accuracy);
  std::map<std::size_t, Candidate> chosen;
  RuntimeConfig config = baseline;
  for (std::size_t l = 0; l < n_layers; ++l) {
    if ((*best)[l] == 0) continue;
    const Candidate& c = options[l][(*best)[l] - 1];
    chosen[l] = c;
    config[c.layer_id] = to_config(c);
    plan.provenance.push_back(c);
  }
  finalize(plan, chosen, cost.evaluate(config));
  return plan;
}

double joint_evaluate(const Model& m, Plan& plan, const Dataset& ds) {
  const double acc = evaluate_accuracy(m, m.complete_config(plan.runtime_config()), ds);
  plan.joint_accuracy = acc;
  return acc;
}

std::string plan_to_json(const Plan& p) {
  json j;
  j["budget"] = budget_json(p.budget);
  j["baseline"] = {{"memory", p.baseline_memory_bytes},
                   {"accuracy", nullable(p.baseline_accuracy)},
                   {"latency_proxy", p.baseline_latency_proxy}};
  json assignments = json::array();
  for (const auto& a : p.assignments) {
    assignments.push_back({{"layer_id", a.layer_id},
                           {"s", a.sparsity},
                           {"T", a.threshold},
                           {"precision", std::string(to_string(a.precision))},
                           {"accuracy_drop", a.accuracy_drop},
                           {"memory_saved_bytes", a.memory_saved_bytes}});
  }
  j["assignments"] = std::move(assignments);
  j["projected"] = {{"memory", p.projected_memory_bytes},
                    {"accuracy_drop_sum", p.projected_accuracy_drop_sum},
                    {"accuracy_estimate", nullable(p.baseline_accuracy - p.projected_accuracy_drop_sum)},
                    {"latency_proxy", p.projected_latency_proxy}};
  if (p.joint_accuracy) j["joint_accuracy"] = *p.joint_accuracy;
  json prov = json::array();
  for (const auto& c : p.provenance) prov.push_back(candidate_json(c));
  j["provenance"] = std::move(prov);
  return j.dump(2);
}

Plan plan_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    Plan p;
    p.budget.memory_bytes = j.at("budget").at("memory_bytes").get<std::uint64_t>();
    if (j.at("budget").contains("latency_proxy") && !j.at("budget").at("latency_proxy").is_null()) {
      p.budget.latency_proxy = j.at("budget").at("latency_proxy").get<double>();
    }
    const json& base = j.at("baseline");
    p.baseline_memory_bytes = base.at("memory").get<std::uint64_t>();
    if (!base.at("accuracy").is_null()) p.baseline_accuracy = base.at("accuracy").get<double>();
    p.baseline_latency_proxy = base.value("latency_proxy", 0.0);
    for (const auto& a : j.at("assignments")) {
      p.assignments.push_back({a.at("layer_id").get<std::string>(), a.at("s").get<double>(), a.at("T").get<float>(),
                               parse_precision(a.at("precision").get<std::string>()),
                               a.value("accuracy_drop", 0.0), a.value("memory_saved_bytes", std::int64_t{0})});
    }
    const json& proj = j.at("projected");
    p.projected_memory_bytes = proj.at("memory").get<std::uint64_t>();
    p.projected_accuracy_drop_sum = proj.at("accuracy_drop_sum").get<double>();
    p.projected_latency_proxy = proj.value("latency_proxy", 0.0);
    if (j.contains("joint_accuracy")) p.joint_accuracy = j.at("joint_accuracy").get<double>();
    for (const auto& c : j.value("provenance", json::array())) {
      Candidate cand;
      cand.layer_id = c.at("layer_id").get<std::string>();
      cand.layer_order = c.value("layer_order", std::size_t{0});
      cand.sparsity = c.at("s").get<double>();
      cand.threshold = c.at("T").get<float>();
      cand.precision = parse_precision(c.at("precision").get<std::string>());
      cand.accuracy_drop = c.at("accuracy_drop").get<double>();
      cand.memory_saved_bytes = c.at("memory_saved_bytes").get<std::int64_t>();
      cand.score = c.at("score").get<double>();
      p.provenance.push_back(std::move(cand));
    }
    return p;
  } catch (const json::exception& e) {
    throw InvalidInputError(std::string("plan: ") + e.what());
  }
}

std::uint64_t parse_byte_count(std::string_view text) {
  std::string s(text);
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(s, &used);
  } catch (const std::exception&) {
    throw InvalidInputError("bad byte count '" + s + "'");
  }
  std::string unit = s.substr(used);
  std::transform(unit.begin(), unit.end(), unit.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  double mult = 1.0;
  if (unit.empty() || unit == "B") mult = 1.0;
  else if (unit == "KB") mult = 1e3;
  else if (unit == "MB") mult = 1e6;
  else if (unit == "GB") mult = 1e9;
  else if (unit == "KIB") mult = 1024.0;
  else if (unit == "MIB") mult = 1024.0 * 1024.0;
  else if (unit == "GIB") mult = 1024.0 * 1024.0 * 1024.0;
  else throw InvalidInputError("bad byte unit in '" + s + "'");
  const double bytes = std::floor(value * mult);
  if (!std::isfinite(bytes) || bytes < 0.0 || bytes > 1.8e19) throw InvalidInputError("byte count out of range: '" + s + "'");
  return static_cast<std::uint64_t>(bytes);
}

}  // namespace adact

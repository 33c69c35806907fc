// Copyright 2026 The adact Authors
// SPDX-License-Identifier: Apache-2.0

#include "adact/controller.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cstring>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "adact/cost_model.hpp"
#include "adact/error.hpp"
#include "support.hpp"

namespace adact {
namespace {

BudgetSignal parse(const std::string& text) {
  std::istringstream in(text);
  return parse_budget_trace(in);
}

TEST(BudgetTrace, Parsing) {
  const auto s = parse("# comment\ntimestamp_ms,memory_budget_bytes,latency_budget_proxy\n0,100\n\n5, 80 ,1.5\n");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.events()[1].timestamp_ms, 5u);
  EXPECT_EQ(s.events()[1].memory_budget_bytes, 80u);
  EXPECT_EQ(s.events()[1].latency_budget_proxy, 1.5);
  EXPECT_FALSE(s.events()[0].latency_budget_proxy);
}

TEST(BudgetTrace, Errors) {
  EXPECT_THROW(parse("0,100\n0,90\n"), InvalidInputError);
  EXPECT_THROW(parse("5,100\n3,90\n"), InvalidInputError);
  EXPECT_THROW(parse("0,abc\n"), InvalidInputError);
  EXPECT_THROW(parse("0,-5\n"), InvalidInputError);
  EXPECT_THROW(parse("0\n"), InvalidInputError);
  EXPECT_THROW(parse("0,1,2,3\n"), InvalidInputError);
  EXPECT_THROW(parse("0,0\n"), InvalidInputError);
  EXPECT_THROW(load_budget_trace("/nonexistent/trace.csv"), InvalidInputError);
  EXPECT_TRUE(parse("").empty());
}

TEST(Swap, EmptyPlanResetsAndPartialPlanKeepsBaseline) {
  const Model m = test::fixture_model();
  AdaptiveController c(m);
  EXPECT_EQ(*c.snapshot(), m.baseline_config());
  c.swap_config(RuntimeConfig{{"act2", {0.5f, Precision::INT4, 0.5}}});
  const auto snap = c.snapshot();
  EXPECT_EQ(snap->at("act1"), LayerRuntimeConfig{});
  EXPECT_EQ(snap->at("act3"), LayerRuntimeConfig{});
  EXPECT_EQ(snap->at("act2").precision, Precision::INT4);
  c.swap_config(Plan{});
  EXPECT_EQ(*c.snapshot(), m.baseline_config());
  // A pinned snapshot survives later swaps.
  EXPECT_EQ(snap->at("act2").precision, Precision::INT4);
}

TEST(Swap, UnknownLayerLeavesConfigUnchanged) {
  const Model m = test::fixture_model();
  AdaptiveController c(m);
  c.swap_config(RuntimeConfig{{"act1", {0.0f, Precision::FP16, 0.0}}});
  const auto before = *c.snapshot();
  Plan bad;
  bad.assignments.push_back({"conv1", 0.0, 0.0f, Precision::INT2, 0.0, 0});
  EXPECT_THROW(c.swap_config(bad), InvalidInputError);
  EXPECT_EQ(*c.snapshot(), before);
}

TEST(Swap, ConcurrentInferencesSeeOneWholeConfig) {
  const Model m = test::fixture_model();
  const Dataset ds = test::fixture_set("holdout").head(8);
  const RuntimeConfig a = m.complete_config({{"act1", {0.3f, Precision::INT2, 0.5}}, {"act3", {0.0f, Precision::FP8, 0.0}}});
  const RuntimeConfig b = m.complete_config({{"act2", {0.6f, Precision::INT4, 0.75}}, {"act3", {0.2f, Precision::INT2, 0.25}}});
  std::vector<Tensor> out_a, out_b;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out_a.push_back(forward(m, a, ds.sample(i)));
    out_b.push_back(forward(m, b, ds.sample(i)));
    ASSERT_NE(out_a.back(), out_b.back());
  }
  AdaptiveController c(m);
  c.swap_config(a);
  std::atomic<bool> stop{false};
  std::atomic<int> mixed{0}, served{0};
  std::vector<std::jthread> readers;
  for (int r = 0; r < 3; ++r) {
    readers.emplace_back([&, r] {
      for (std::size_t k = r; !stop; k = (k + 1) % ds.size()) {
        const Tensor y = c.infer(ds.sample(k));
        if (y != out_a[k] && y != out_b[k]) ++mixed;
        ++served;
      }
    });
  }
  for (int i = 0; i < 100 || served < 100; ++i) c.swap_config(i % 2 ? a : b);
  stop = true;
  readers.clear();
  EXPECT_EQ(mixed, 0);
  EXPECT_GE(served, 100);
}

TEST(RunAdaptive, SlackBudgetKeepsBaseline) {
  const Model m = test::fixture_model();
  const auto t = test::fixture_table();
  const Dataset ds = test::fixture_set("holdout").head(20);
  const auto log = run_adaptive(m, t, BudgetSignal({{0, t.baseline_memory_bytes * 2, std::nullopt}}), ds);
  ASSERT_EQ(log.records.size(), 1u);
  EXPECT_TRUE(log.records[0].plan.empty());
  EXPECT_TRUE(log.records[0].feasible);
  EXPECT_EQ(log.records[0].inferences_served, 20u);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) correct += static_cast<int>(argmax(forward(m, ds.sample(i)).data())) == ds.labels[i];
  EXPECT_EQ(log.records[0].correct, correct);
}

TEST(RunAdaptive, LooseThenTight) {
  const Model m = test::fixture_model();
  const auto t = test::fixture_table();
  const Dataset ds = test::fixture_set("holdout").head(30);
  const auto log = run_adaptive(m, t, BudgetSignal({{0, 30000, std::nullopt}, {10, 15000, std::nullopt}}), ds, 1.0);
  ASSERT_EQ(log.records.size(), 2u);
  EXPECT_LE(log.records[1].plan.projected_memory_bytes, 15000u);
  EXPECT_EQ(log.records[0].inferences_served, 10u);
  EXPECT_EQ(log.records[1].inferences_served, 20u);
}

TEST(RunAdaptive, FixtureTraceMatchesOfflineGreedy) {
  const Model m = test::fixture_model();
  const auto t = test::fixture_table();
  const auto signal = load_budget_trace(test::fixture_dir() / "trace.csv");
  ASSERT_EQ(signal.size(), 5u);
  const Dataset ds = test::fixture_set("holdout");
  const auto weights_before = std::vector<float>(m.weights().begin(), m.weights().end());
  const auto passes = dataset_pass_count();
  const auto log = run_adaptive(m, t, signal, ds, 2.0);
  EXPECT_EQ(dataset_pass_count(), passes);
  EXPECT_EQ(std::memcmp(weights_before.data(), m.weights().data(), weights_before.size() * sizeof(float)), 0);

  const auto ranked = build_ranklist(t);
  ASSERT_EQ(log.records.size(), 5u);
  std::size_t served = 0;
  for (std::size_t k = 0; k < 5; ++k) {
    const auto& rec = log.records[k];
    served += rec.inferences_served;
    EXPECT_EQ(rec.event_index, k);
    const Budget b = signal.events()[k].budget();
    try {
      const Plan offline = greedy_select(ranked, m, b, t.baseline_accuracy);
      EXPECT_TRUE(rec.feasible);
      EXPECT_EQ(rec.plan.assignments, offline.assignments);
      EXPECT_EQ(rec.plan.projected_memory_bytes, offline.projected_memory_bytes);
    } catch (const InfeasibleBudgetError& e) {
      EXPECT_FALSE(rec.feasible);
      EXPECT_EQ(rec.plan.projected_memory_bytes, e.floor_memory_bytes());
      EXPECT_EQ(rec.memory_shortfall_bytes, e.floor_memory_bytes() - b.memory_bytes);
    }
  }
  EXPECT_EQ(served, ds.size());
  EXPECT_FALSE(log.records[4].feasible);

  std::ostringstream out;
  write_log_jsonl(out, log);
  std::istringstream lines(out.str());
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("event_index").get<int>(), n);
    EXPECT_TRUE(j.contains("plan"));
    EXPECT_TRUE(j.contains("replan_us"));
    ++n;
  }
  EXPECT_EQ(n, 5);
}

TEST(RunAdaptive, MismatchedTableFailsBeforeInference) {
  const Model m = test::fixture_model();
  auto t = test::fixture_table();
  const Dataset ds = test::fixture_set("holdout").head(4);
  const BudgetSignal s({{0, 20000, std::nullopt}});
  auto renamed = t;
  renamed.model_name = "other";
  EXPECT_THROW(run_adaptive(m, renamed, s, ds), InvalidInputError);
  auto wrong_memory = t;
  wrong_memory.baseline_memory_bytes += 1;
  EXPECT_THROW(run_adaptive(m, wrong_memory, s, ds), InvalidInputError);
  EXPECT_THROW(run_adaptive(test::chain_model(3, 4), t, s, ds), InvalidInputError);
  EXPECT_THROW(run_adaptive(m, t, BudgetSignal{}, ds), InvalidInputError);
}

}  // namespace
}  // namespace adact

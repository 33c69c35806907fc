// Copyright 2026 The adact Authors
// SPDX-License-Identifier: Apache-2.0

#include "adact/planner.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <limits>
#include <random>
#include <tuple>

#include "adact/cost_model.hpp"
#include "adact/error.hpp"
#include "support.hpp"

namespace adact {
namespace {

const std::vector<Precision> kIntOnly = {Precision::FP32, Precision::INT4, Precision::INT2};

std::uint64_t configured_memory(const Model& m, const Plan& p) {
  return memory_cost(m, m.complete_config(p.runtime_config())).total_bytes;
}

// Two-layer table with hand-set accuracies.
SensitivityTable two_layer_table(const Model& m, double drop_a4, double drop_a2, double drop_b4, double drop_b2) {
  std::mt19937_64 rng(0);
  SensitivityTable t = test::synthetic_table(m, {0.0}, kIntOnly, rng, 0.9);
  for (auto& r : t.records) {
    const bool a = r.layer_id == "act0";
    if (r.precision == Precision::INT4) r.accuracy = 0.9 - (a ? drop_a4 : drop_b4);
    if (r.precision == Precision::INT2) r.accuracy = 0.9 - (a ? drop_a2 : drop_b2);
  }
  return t;
}

TEST(Ranklist, EqualSavingSmallerDropFirst) {
  const Model m = test::chain_model(2, 16);
  const auto t = two_layer_table(m, 0.05, 0.3, 0.01, 0.3);
  const auto r = build_ranklist(t);
  ASSERT_EQ(r.size(), 4u);
  EXPECT_EQ(r[0].layer_id, "act1");
  EXPECT_EQ(r[0].precision, Precision::INT4);
  // The drop is baseline minus accuracy, so it carries rounding error.
  EXPECT_NEAR(r[0].accuracy_drop, 0.01, 1e-12);
  EXPECT_DOUBLE_EQ(r[0].score, r[0].memory_saved_bytes / r[0].accuracy_drop);
  EXPECT_EQ(r[1].layer_id, "act0");
}

TEST(Ranklist, ImprovedAccuracyUsesEpsilon) {
  const Model m = test::chain_model(2, 16);
  const auto t = two_layer_table(m, 0.02, 0.3, -0.01, 0.3);
  const auto r = build_ranklist(t);
  EXPECT_EQ(r[0].layer_id, "act1");
  EXPECT_DOUBLE_EQ(r[0].score, r[0].memory_saved_bytes / kDropEpsilon);
  EXPECT_NEAR(r[0].accuracy_drop, -0.01, 1e-12);
}

TEST(Ranklist, SkipsAnchorsAndNonSavingRecords) {
  const auto t = test::fixture_table();
  const auto r = build_ranklist(t);
  // Per layer: 25 records minus the anchor and the 4 other FP32 rows.
  EXPECT_EQ(r.size(), 3u * 20);
  for (const auto& c : r) EXPECT_GT(c.memory_saved_bytes, 0);
}

TEST(Ranklist, FixtureOrderMatchesIndependentSort) {
  const auto t = test::fixture_table();
  struct Row {
    std::string id;
    std::size_t order;
    double s;
    int b;
    double drop;
    double score;
  };
  std::vector<Row> rows;
  for (std::size_t i = 0; i < t.records.size(); ++i) {
    const auto& r = t.records[i];
    if (r.memory_saved_bytes <= 0) continue;
    const std::size_t order = i / 25;
    const double drop = t.baseline_accuracy - r.accuracy;
    rows.push_back({r.layer_id, order, r.sparsity, bits(r.precision), drop,
                    static_cast<double>(r.memory_saved_bytes) / std::max(drop, 1e-4)});
  }
  auto key = [](const Row& r) { return std::make_tuple(-r.score, r.drop, r.order, -r.s, r.b); };
  std::sort(rows.begin(), rows.end(), [&](const Row& a, const Row& b) { return key(a) < key(b); });
  const auto ranked = build_ranklist(t);
  ASSERT_EQ(ranked.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(ranked[i].layer_id, rows[i].id) << i;
    EXPECT_EQ(ranked[i].sparsity, rows[i].s) << i;
    EXPECT_EQ(bits(ranked[i].precision), rows[i].b) << i;
  }
}

TEST(Greedy, SlackBudgetGivesEmptyPlan) {
  const Model m = test::fixture_model();
  const auto t = test::fixture_table();
  const Plan p = greedy_select(build_ranklist(t), m, Budget{t.baseline_memory_bytes}, t.baseline_accuracy);
  EXPECT_TRUE(p.empty());
  EXPECT_EQ(p.projected_memory_bytes, t.baseline_memory_bytes);
  EXPECT_EQ(p.projected_accuracy_drop_sum, 0.0);
}

TEST(Greedy, BelowFloorIsInfeasible) {
  const Model m = test::fixture_model();
  const auto r = build_ranklist(test::fixture_table());
  const std::uint64_t floor = minimum_memory_plan(r, m).projected_memory_bytes;
  // Every activation at 2 bits.
  EXPECT_EQ(floor, memory_cost(m).param_bytes + 2048 * 2 / 8 + 768 * 2 / 8 + 256 * 2 / 8 + 64 + 40 + 40);
  try {
    greedy_select(r, m, Budget{floor - 1});
    FAIL() << "expected InfeasibleBudgetError";
  } catch (const InfeasibleBudgetError& e) {
    EXPECT_EQ(e.floor_memory_bytes(), floor);
  }
  EXPECT_NO_THROW(greedy_select(r, m, Budget{floor}));
  EXPECT_THROW(greedy_select(r, m, Budget{0}), InvalidInputError);
}

TEST(Greedy, TwoByTwoMatchesExhaustiveMemory) {
  const Model m = test::chain_model(2, 16);
  // act1 INT4 is nearly free, act0 INT4 next; INT2 on either is costly.
  const auto t = two_layer_table(m, 0.02, 0.3, 0.001, 0.25);
  const auto r = build_ranklist(t);
  const std::uint64_t base = t.baseline_memory_bytes;
  for (std::uint64_t budget = base; budget > 0; budget -= 1) {
    std::optional<Plan> g, o;
    try {
      g = greedy_select(r, m, Budget{budget}, t.baseline_accuracy);
    } catch (const InfeasibleBudgetError&) {
    }
    try {
      o = brute_force_select(t, m, Budget{budget});
    } catch (const InfeasibleBudgetError&) {
    }
    ASSERT_EQ(g.has_value(), o.has_value()) << budget;
    if (!g) break;
    EXPECT_LE(g->projected_memory_bytes, budget);
    EXPECT_EQ(configured_memory(m, *g), g->projected_memory_bytes);
    EXPECT_GE(g->projected_accuracy_drop_sum + 1e-12, o->projected_accuracy_drop_sum);
  }
  // With one layer at INT4 the plan stays on the cheap-drop candidate.
  const Plan p = greedy_select(r, m, Budget{base - 1}, t.baseline_accuracy);
  ASSERT_EQ(p.assignments.size(), 1u);
  EXPECT_EQ(p.assignments[0].layer_id, "act1");
  EXPECT_EQ(p.assignments[0].precision, Precision::INT4);
  EXPECT_EQ(p.provenance.size(), 1u);
}

TEST(Greedy, UpgradeReplacesAssignmentWhenItSavesMore) {
  const Model m = test::chain_model(1, 16);
  std::mt19937_64 rng(0);
  auto t = test::synthetic_table(m, {0.0}, kIntOnly, rng);
  for (auto& r : t.records) {
    if (r.precision == Precision::INT4) r.accuracy = 0.9 - 0.001;
    if (r.precision == Precision::INT2) r.accuracy = 0.9 - 0.2;
  }
  const auto r = build_ranklist(t);
  const auto int2 = t.at("act0", 0.0, Precision::INT2).memory_bytes;
  const Plan p = greedy_select(r, m, Budget{int2}, t.baseline_accuracy);
  ASSERT_EQ(p.assignments.size(), 1u);
  EXPECT_EQ(p.assignments[0].precision, Precision::INT2);
  ASSERT_EQ(p.provenance.size(), 2u);
  EXPECT_EQ(p.provenance[0].precision, Precision::INT4);
  EXPECT_EQ(p.projected_memory_bytes, int2);
}

TEST(Greedy, LatencyBudgetMustAlsoHold) {
  const Model m = test::fixture_model();
  const auto t = test::fixture_table();
  const auto r = build_ranklist(t);
  Budget b{t.baseline_memory_bytes, latency_proxy(m) * 0.6};
  const Plan p = greedy_select(r, m, b, t.baseline_accuracy);
  EXPECT_FALSE(p.empty());
  EXPECT_LE(p.projected_latency_proxy, *b.latency_proxy);
  EXPECT_DOUBLE_EQ(p.projected_latency_proxy, latency_proxy(m, m.complete_config(p.runtime_config())));
  EXPECT_THROW(greedy_select(r, m, Budget{t.baseline_memory_bytes, -1.0}), InvalidInputError);
}

TEST(Greedy, SoundOnFixtureBudgets) {
  const Model m = test::fixture_model();
  const auto t = test::fixture_table();
  const auto r = build_ranklist(t);
  const std::uint64_t floor = minimum_memory_plan(r, m).projected_memory_bytes;
  for (std::uint64_t b = floor; b <= t.baseline_memory_bytes + 100; b += 97) {
    const Plan p = greedy_select(r, m, Budget{b}, t.baseline_accuracy);
    EXPECT_LE(p.projected_memory_bytes, b);
    EXPECT_LE(p.projected_memory_bytes, t.baseline_memory_bytes);
    EXPECT_EQ(configured_memory(m, p), p.projected_memory_bytes);
    std::set<std::string> ids;
    for (const auto& a : p.assignments) EXPECT_TRUE(ids.insert(a.layer_id).second);
  }
}

// Holds when no candidate improves accuracy. A negative drop lets a tighter
// budget buy accuracy that a looser budget, satisfied earlier, never takes.
TEST(Greedy, LooserBudgetNeverIncreasesDropSumWithoutGains) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Model m = test::chain_model(3, 8 + 4 * (trial % 3));
    auto t = test::synthetic_table(m, {0.0, 0.5, 0.9}, {Precision::FP32, Precision::FP8, Precision::INT4, Precision::INT2}, rng);
    for (auto& rec : t.records) rec.accuracy = std::min(rec.accuracy, t.baseline_accuracy);
    const auto r = build_ranklist(t);
    const std::uint64_t floor = minimum_memory_plan(r, m).projected_memory_bytes;
    const std::uint64_t step = std::max<std::uint64_t>(1, (t.baseline_memory_bytes - floor) / 200);
    double prev = std::numeric_limits<double>::infinity();
    for (std::uint64_t b = floor; b <= t.baseline_memory_bytes; b += step) {
      const double drop = greedy_select(r, m, Budget{b}, t.baseline_accuracy).projected_accuracy_drop_sum;
      EXPECT_LE(drop, prev + 1e-12) << "trial " << trial << " budget " << b;
      prev = drop;
    }
  }
}

TEST(Greedy, FixtureDropSumMonotoneWhenGainsCountAsZero) {
  const Model m = test::fixture_model();
  const auto t = test::fixture_table();
  const auto r = build_ranklist(t);
  const std::uint64_t floor = minimum_memory_plan(r, m).projected_memory_bytes;
  double prev = std::numeric_limits<double>::infinity();
  for (std::uint64_t b = floor; b <= t.baseline_memory_bytes; b += 16) {
    const Plan p = greedy_select(r, m, Budget{b}, t.baseline_accuracy);
    double loss = 0.0;
    for (const auto& a : p.assignments) loss += std::max(a.accuracy_drop, 0.0);
    EXPECT_LE(loss, prev + 1e-12) << "budget " << b;
    prev = loss;
  }
}

TEST(BruteForce, Examples) {
  const Model m = test::chain_model(1, 16);
  std::mt19937_64 rng(2);
  const auto t = test::synthetic_table(m, {0.0}, {Precision::FP32, Precision::INT4}, rng);
  const auto& only = t.at("act0", 0.0, Precision::INT4);
  const Plan p = brute_force_select(t, m, Budget{only.memory_bytes});
  ASSERT_EQ(p.assignments.size(), 1u);
  EXPECT_EQ(p.assignments[0].precision, Precision::INT4);
  EXPECT_TRUE(brute_force_select(t, m, Budget{t.baseline_memory_bytes}).empty());
  EXPECT_THROW(brute_force_select(t, m, Budget{only.memory_bytes - 1}), InfeasibleBudgetError);
}

TEST(BruteForce, TooLargeInstanceIsRejected) {
  const auto t = test::fixture_table();
  EXPECT_THROW(brute_force_select(t, test::fixture_model(), Budget{20000}, 1000), InvalidInputError);
}

TEST(BruteForce, AgreesWithRecursiveEnumeration) {
  const Model m = test::chain_model(3, 12);
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = test::synthetic_table(m, {0.0, 0.5}, {Precision::FP32, Precision::INT4}, rng);
    const auto ranked = build_ranklist(t);
    // Options per layer, enumerated depth-first with the last layer outermost.
    std::vector<std::vector<Candidate>> options(3);
    for (const auto& c : ranked) options[c.layer_order].push_back(c);
    const std::uint64_t budget = t.baseline_memory_bytes - 60 - 20 * trial;
    double best = std::numeric_limits<double>::infinity();
    std::vector<const Candidate*> pick(3, nullptr);
    std::function<void(int)> rec = [&](int l) {
      if (l < 0) {
        RuntimeConfig c = m.baseline_config();
        double drop = 0.0;
        for (auto* p : pick) {
          if (!p) continue;
          c[p->layer_id] = {p->threshold, p->precision, p->sparsity};
          drop += p->accuracy_drop;
        }
        if (memory_cost(m, c).total_bytes <= budget) best = std::min(best, drop);
        return;
      }
      pick[l] = nullptr;
      rec(l - 1);
      for (const auto& c : options[l]) {
        pick[l] = &c;
        rec(l - 1);
      }
      pick[l] = nullptr;
    };
    rec(2);
    if (std::isinf(best)) {
      EXPECT_THROW(brute_force_select(t, m, Budget{budget}), InfeasibleBudgetError);
    } else {
      const Plan p = brute_force_select(t, m, Budget{budget});
      EXPECT_NEAR(p.projected_accuracy_drop_sum, best, 1e-12);
      EXPECT_LE(p.projected_memory_bytes, budget);
      EXPECT_EQ(configured_memory(m, p), p.projected_memory_bytes);
    }
  }
}

TEST(PlanJson, RoundTrip) {
  const Model m = test::fixture_model();
  const auto t = test::fixture_table();
  Plan p = greedy_select(build_ranklist(t), m, Budget{16000, 70000.0}, t.baseline_accuracy);
  p.joint_accuracy = 0.875;
  const Plan back = plan_from_json(plan_to_json(p));
  EXPECT_EQ(back.assignments, p.assignments);
  EXPECT_EQ(back.provenance, p.provenance);
  EXPECT_EQ(back.projected_memory_bytes, p.projected_memory_bytes);
  EXPECT_EQ(back.budget.latency_proxy, p.budget.latency_proxy);
  EXPECT_EQ(back.joint_accuracy, p.joint_accuracy);
  EXPECT_EQ(plan_to_json(back), plan_to_json(p));
  EXPECT_THROW(plan_from_json("[]"), InvalidInputError);
}

TEST(JointEvaluate, StoresMeasuredAccuracy) {
  const Model m = test::fixture_model();
  const auto t = test::fixture_table();
  Plan p = greedy_select(build_ranklist(t), m, Budget{18000}, t.baseline_accuracy);
  const Dataset ds = test::fixture_set("eval").head(50);
  const double acc = joint_evaluate(m, p, ds);
  EXPECT_EQ(p.joint_accuracy, acc);
  EXPECT_EQ(acc, evaluate_accuracy(m, m.complete_config(p.runtime_config()), ds));
}

TEST(ByteCount, Parsing) {
  EXPECT_EQ(parse_byte_count("123456"), 123456u);
  EXPECT_EQ(parse_byte_count("5.5e6"), 5500000u);
  EXPECT_EQ(parse_byte_count("64MB"), 64000000u);
  EXPECT_EQ(parse_byte_count("48KiB"), 49152u);
  EXPECT_EQ(parse_byte_count("2gib"), 2147483648u);
  EXPECT_THROW(parse_byte_count("lots"), InvalidInputError);
  EXPECT_THROW(parse_byte_count("12 parsecs"), InvalidInputError);
  EXPECT_THROW(parse_byte_count("-5"), InvalidInputError);
}

}  // namespace
}  // namespace adact

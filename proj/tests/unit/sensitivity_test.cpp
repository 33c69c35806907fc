// Copyright 2026 The adact Authors
// SPDX-License-Identifier: Apache-2.0

#include "adact/sensitivity.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "adact/activation.hpp"
#include "adact/cost_model.hpp"
#include "adact/error.hpp"
#include "support.hpp"

namespace adact {
namespace {

struct FixtureData {
  Model model = test::fixture_model();
  Dataset calib = test::fixture_set("calib");
  Dataset eval = test::fixture_set("eval");
  std::map<std::string, CalibrationProfile> profiles = calibrate_all(model, calib);
};

const FixtureData& fixture() {
  static const FixtureData f;
  return f;
}

// Top-1 accuracy via direct forward calls.
double slow_accuracy(const Model& m, const RuntimeConfig& c, const Dataset& ds,
                     const LayerHook& hook = {}) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto trace = forward_trace(m, c, ds.sample(i), hook);
    const auto out = trace.back().data();
    std::size_t best = 0;
    for (std::size_t k = 1; k < out.size(); ++k) {
      if (out[k] > out[best]) best = k;
    }
    correct += static_cast<int>(best) == ds.labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

TEST(Analyze, CardinalityAndAnchors) {
  const auto& f = fixture();
  SensitivityOptions o;
  o.sparsity_levels = {0.0, 0.5};
  o.precisions = {Precision::FP32, Precision::INT4};
  o.eval_subset = 40;
  const SensitivityTable t = analyze(f.model, f.eval, f.profiles, o);
  EXPECT_EQ(t.records.size(), 3u * 2 * 2);
  EXPECT_NO_THROW(t.validate());
  for (const auto& id : t.layer_ids) {
    const auto& anchor = t.at(id, 0.0, Precision::FP32);
    EXPECT_EQ(anchor.accuracy, t.baseline_accuracy);
    EXPECT_EQ(anchor.memory_bytes, t.baseline_memory_bytes);
    EXPECT_EQ(anchor.memory_saved_bytes, 0);
  }
  // Ordering: layer, then s, then q.
  EXPECT_EQ(t.records[1].precision, Precision::INT4);
  EXPECT_EQ(t.records[2].sparsity, 0.5);
  EXPECT_EQ(t.records[4].layer_id, "act2");
}

TEST(Analyze, SingleActivationModelHasFourRecords) {
  const Model m = Model::build("one", {3}, 3,
                               {test::layer("fc", LayerKind::Dense, test::dense_geo(3)), test::layer("act", LayerKind::AaRelu)},
                               std::vector<float>{1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0});
  Dataset ds;
  std::mt19937_64 rng(1);
  ds.images = Tensor({1200, 3}, test::random_values(rng, 3600, -1.0f, 1.0f));
  ds.labels.assign(1200, 0);
  for (std::size_t i = 0; i < 1200; ++i) ds.labels[i] = static_cast<int>(argmax(forward(m, ds.sample(i)).data()));
  SensitivityOptions o;
  o.sparsity_levels = {0.0, 1.0};
  o.precisions = {Precision::FP32, Precision::INT2};
  const auto t = analyze(m, ds, calibrate_all(m, ds), o);
  EXPECT_EQ(t.records.size(), 4u);
  EXPECT_EQ(t.baseline_accuracy, 1.0);
}

TEST(Analyze, FixtureGoldenMatchesSlowLoop) {
  const auto& f = fixture();
  const SensitivityTable golden = test::fixture_table();
  ASSERT_EQ(golden.records.size(), 75u);
  EXPECT_EQ(golden.baseline_accuracy, slow_accuracy(f.model, f.model.baseline_config(), f.eval));
  EXPECT_EQ(golden.baseline_memory_bytes, memory_cost(f.model).total_bytes);
  for (const auto& r : golden.records) {
    RuntimeConfig c = f.model.baseline_config();
    c[r.layer_id] = {threshold_for_sparsity(f.profiles.at(r.layer_id), r.sparsity), r.precision, r.sparsity};
    EXPECT_EQ(r.threshold, c[r.layer_id].threshold) << r.layer_id << " s=" << r.sparsity;
    EXPECT_EQ(r.accuracy, slow_accuracy(f.model, c, f.eval)) << r.layer_id << " s=" << r.sparsity << " " << to_string(r.precision);
    const auto mem = memory_cost(f.model, c).total_bytes;
    EXPECT_EQ(r.memory_bytes, mem);
    EXPECT_EQ(r.memory_saved_bytes, static_cast<std::int64_t>(golden.baseline_memory_bytes) - static_cast<std::int64_t>(mem));
  }
}

TEST(Analyze, DeterministicAcrossThreadCounts) {
  const auto& f = fixture();
  SensitivityOptions o;
  o.eval_subset = 60;
  o.threads = 1;
  const auto a = analyze(f.model, f.eval, f.profiles, o);
  o.threads = 3;
  const auto b = analyze(f.model, f.eval, f.profiles, o);
  EXPECT_EQ(table_to_json(a), table_to_json(b));
}

TEST(Analyze, FullSparsityEqualsZeroedOutput) {
  const auto& f = fixture();
  const Dataset eval = f.eval.head(100);
  SensitivityOptions o;
  o.sparsity_levels = {0.0, 1.0};
  o.eval_subset = 100;
  const auto t = analyze(f.model, eval, f.profiles, o);
  for (const auto& id : t.layer_ids) {
    const std::size_t index = *f.model.find_layer(id);
    const double zeroed = slow_accuracy(f.model, f.model.baseline_config(), eval,
                                        [&](std::size_t i, const Tensor& out) -> std::optional<Tensor> {
                                          if (i == index) return Tensor::zeros(out.shape());
                                          return std::nullopt;
                                        });
    for (Precision q : t.precisions) EXPECT_EQ(t.at(id, 1.0, q).accuracy, zeroed) << id << " " << to_string(q);
  }
}

TEST(Analyze, RejectsBadGrids) {
  const auto& f = fixture();
  SensitivityOptions o;
  o.sparsity_levels = {0.25, 0.5};
  EXPECT_THROW(analyze(f.model, f.eval, f.profiles, o), InvalidInputError);
  o.sparsity_levels = {0.0, 0.5, 0.5};
  EXPECT_THROW(analyze(f.model, f.eval, f.profiles, o), InvalidInputError);
  o.sparsity_levels = {0.0, 1.5};
  EXPECT_THROW(analyze(f.model, f.eval, f.profiles, o), InvalidInputError);
  o.sparsity_levels = {0.0};
  o.precisions = {Precision::INT4};
  EXPECT_THROW(analyze(f.model, f.eval, f.profiles, o), InvalidInputError);
  EXPECT_THROW(analyze(f.model, f.eval, {}, SensitivityOptions{}), InvalidInputError);
}

TEST(Table, JsonRoundTripAndCsv) {
  const SensitivityTable t = test::fixture_table();
  const SensitivityTable back = table_from_json(table_to_json(t));
  EXPECT_EQ(table_to_json(back), table_to_json(t));
  std::ostringstream csv;
  write_table_csv(csv, t);
  EXPECT_EQ(csv.str(), test::read_file(test::fixture_dir() / "golden" / "sensitivity.csv"));
  EXPECT_THROW(table_from_json("{}"), InvalidInputError);
}

TEST(Table, ValidateCatchesMissingAnchor) {
  SensitivityTable t = test::fixture_table();
  t.records.erase(t.records.begin());
  EXPECT_THROW(t.validate(), InvalidInputError);
}

TEST(Grid, Parsing) {
  EXPECT_EQ(parse_sparsity_levels("0,0.5,1"), (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_EQ(parse_precisions("fp32,INT2"), (std::vector<Precision>{Precision::FP32, Precision::INT2}));
  EXPECT_THROW(parse_sparsity_levels("0,abc"), InvalidInputError);
  EXPECT_THROW(parse_precisions("fp32,int3"), InvalidInputError);
}

}  // namespace
}  // namespace adact

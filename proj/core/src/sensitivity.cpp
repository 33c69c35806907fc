// Copyright 2026 The adact Authors
// SPDX-License-Identifier: Apache-2.0

#include "adact/sensitivity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <nlohmann/json.hpp>

#include "adact/cost_model.hpp"
#include "adact/error.hpp"

namespace adact {

namespace {

using json = nlohmann::json;

std::string grid_point(const std::string& layer, double s, Precision q) {
  std::ostringstream os;
  os << "(layer " << layer << ", s=" << s << ", q=" << to_string(q) << ")";
  return os.str();
}

std::vector<std::string_view> split(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    auto item = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.front()))) item.remove_prefix(1);
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.back()))) item.remove_suffix(1);
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

// One layer's sweep. `scratch` starts as the baseline config and is restored
// before returning.
std::vector<SensitivityRecord> sweep_layer(const Model& m, const Dataset& eval, const CostModel& cost,
                                           const CalibrationProfile& profile, const std::string& layer,
                                           const SensitivityOptions& opts, const RuntimeConfig& baseline,
                                           std::uint64_t baseline_memory) {
  RuntimeConfig scratch = baseline;
  std::vector<SensitivityRecord> out;
  for (double s : opts.sparsity_levels) {
    const float threshold = threshold_for_sparsity(profile, s);
    for (Precision q : opts.precisions) {
      try {
        scratch[layer] = LayerRuntimeConfig{threshold, q, s};
        for (const auto& [id, cfg] : scratch) {
          if (id != layer && !(cfg == baseline.at(id))) {
            throw Error("frozen layer '" + id + "' drifted from baseline");
          }
        }
        SensitivityRecord r;
        r.layer_id = layer;
        r.sparsity = s;
        r.precision = q;
        r.threshold = threshold;
        r.accuracy = evaluate_accuracy(m, scratch, eval);
        r.memory_bytes = cost.memory_bytes(scratch);
        r.memory_saved_bytes =
            static_cast<std::int64_t>(baseline_memory) - static_cast<std::int64_t>(r.memory_bytes);
        out.push_back(std::move(r));
      } catch (const NumericError& e) {
        throw NumericError("sensitivity " + grid_point(layer, s, q) + ": " + e.what());
      } catch (const InvalidInputError& e) {
        throw InvalidInputError("sensitivity " + grid_point(layer, s, q) + ": " + e.what());
      } catch (const Error& e) {
        throw Error("sensitivity " + grid_point(layer, s, q) + ": " + e.what());
      }
    }
  }
  scratch[layer] = baseline.at(layer);
  return out;
}

}  // namespace

const SensitivityRecord& SensitivityTable::at(const std::string& layer_id, double s, Precision q) const {
  for (const auto& r : records) {
    if (r.layer_id == layer_id && r.sparsity == s && r.precision == q) return r;
  }
  throw InvalidInputError("sensitivity table has no record " + grid_point(layer_id, s, q));
}

void SensitivityTable::validate() const {
  if (layer_ids.empty() || sparsity_levels.empty() || precisions.empty()) {
    throw InvalidInputError("sensitivity table is empty");
  }
  const std::size_t expected = layer_ids.size() * sparsity_levels.size() * precisions.size();
  if (records.size() != expected) {
    throw InvalidInputError("sensitivity table has " + std::to_string(records.size()) + " records, expected " +
                            std::to_string(expected));
  }
  std::set<std::tuple<std::string, double, int>> seen;
  for (const auto& r : records) {
    if (!seen.emplace(r.layer_id, r.sparsity, static_cast<int>(r.precision)).second) {
      throw InvalidInputError("sensitivity table has duplicate record " + grid_point(r.layer_id, r.sparsity, r.precision));
    }
  }
  for (const auto& id : layer_ids) {
    for (double s : sparsity_levels) {
      for (Precision q : precisions) at(id, s, q);
    }
    const auto& anchor = at(id, 0.0, Precision::FP32);
    if (anchor.memory_saved_bytes != 0) {
      throw InvalidInputError("sensitivity table: baseline record of '" + id + "' reports memory savings");
    }
  }
}

SensitivityTable analyze(const Model& m, const Dataset& eval_full,
                         const std::map<std::string, CalibrationProfile>& profiles,
                         const SensitivityOptions& opts) {
  if (opts.sparsity_levels.empty() || opts.precisions.empty()) {
    throw InvalidInputError("sensitivity: sparsity levels and precisions must be non-empty");
  }
  if (std::find(opts.sparsity_levels.begin(), opts.sparsity_levels.end(), 0.0) == opts.sparsity_levels.end()) {
    throw InvalidInputError("sensitivity: sparsity levels must include 0");
  }
  if (std::find(opts.precisions.begin(), opts.precisions.end(), Precision::FP32) == opts.precisions.end()) {
    throw InvalidInputError("sensitivity: precisions must include fp32");
  }
  for (double s : opts.sparsity_levels) {
    if (!(s >= 0.0 && s <= 1.0)) throw InvalidInputError("sensitivity: sparsity levels must be in [0, 1]");
  }
  if (std::set<double>(opts.sparsity_levels.begin(), opts.sparsity_levels.end()).size() != opts.sparsity_levels.size() ||
      std::set<Precision>(opts.precisions.begin(), opts.precisions.end()).size() != opts.precisions.size()) {
    throw InvalidInputError("sensitivity: grid levels must be distinct");
  }
  if (m.activation_ids().empty()) throw InvalidInputError("sensitivity: model has no aa_relu layers");
  for (const auto& id : m.activation_ids()) {
    if (!profiles.count(id)) throw InvalidInputError("sensitivity: no calibration profile for '" + id + "'");
  }

  const Dataset eval = eval_full.head(opts.eval_subset);
  const RuntimeConfig baseline = m.baseline_config();
  const CostModel cost(m);

  SensitivityTable t;
  t.model_name = m.name();
  t.layer_ids = m.activation_ids();
  t.sparsity_levels = opts.sparsity_levels;
  t.precisions = opts.precisions;
  t.baseline_accuracy = evaluate_accuracy(m, baseline, eval);
  t.baseline_memory_bytes = cost.memory_bytes(baseline);

  const std::size_t n_layers = t.layer_ids.size();
  std::vector<std::vector<SensitivityRecord>> per_layer(n_layers);
  std::vector<std::exception_ptr> errors(n_layers);
  unsigned workers = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_layers));

  std::mutex mu;
  std::size_t next = 0;
  auto work = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (next >= n_layers) return;
        i = next++;
      }
      try {
        const auto& id = t.layer_ids[i];
        per_layer[i] = sweep_layer(m, eval, cost, profiles.at(id), id, opts, baseline,
                                   t.baseline_memory_bytes);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (auto& recs : per_layer) {
    for (auto& r : recs) t.records.push_back(std::move(r));
  }
  return t;
}

void write_table_csv(std::ostream& out, const SensitivityTable& t) {
  out << "layer_id,s,q_bits,q_kind,accuracy,memory_bytes,memory_saved_bytes,threshold\n";
  out.precision(10);
  for (const auto& r : t.records) {
    out << r.layer_id << ',' << r.sparsity << ',' << bits(r.precision) << ',' << to_string(kind(r.precision)) << ','
        << r.accuracy << ',' << r.memory_bytes << ',' << r.memory_saved_bytes << ',' << r.threshold << '\n';
  }
}

std::string table_to_json(const SensitivityTable& t) {
  json j;
  j["model_name"] = t.model_name;
  j["baseline"] = {{"accuracy", t.baseline_accuracy}, {"memory_bytes", t.baseline_memory_bytes}};
  j["layer_ids"] = t.layer_ids;
  j["sparsity_levels"] = t.sparsity_levels;
  json qs = json::array();
  for (Precision q : t.precisions) qs.push_back(std::string(to_string(q)));
  j["precisions"] = qs;
  json recs = json::array();
  for (const auto& r : t.records) {
    recs.push_back({{"layer_id", r.layer_id},
                    {"s", r.sparsity},
                    {"q_bits", bits(r.precision)},
                    {"q_kind", std::string(to_string(kind(r.precision)))},
                    {"threshold", r.threshold},
                    {"accuracy", r.accuracy},
                    {"memory_bytes", r.memory_bytes},
                    {"memory_saved_bytes", r.memory_saved_bytes}});
  }
  j["records"] = std::move(recs);
  return j.dump(2);
}

SensitivityTable table_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    SensitivityTable t;
    t.model_name = j.at("model_name").get<std::string>();
    t.baseline_accuracy = j.at("baseline").at("accuracy").get<double>();
    t.baseline_memory_bytes = j.at("baseline").at("memory_bytes").get<std::uint64_t>();
    t.layer_ids = j.at("layer_ids").get<std::vector<std::string>>();
    t.sparsity_levels = j.at("sparsity_levels").get<std::vector<double>>();
    for (const auto& q : j.at("precisions")) t.precisions.push_back(parse_precision(q.get<std::string>()));
    for (const auto& jr : j.at("records")) {
      SensitivityRecord r;
      r.layer_id = jr.at("layer_id").get<std::string>();
      r.sparsity = jr.at("s").get<double>();
      const std::string k = jr.at("q_kind").get<std::string>();
      r.precision = precision_from_bits(jr.at("q_bits").get<int>(),
                                        k == "integer" ? PrecisionKind::Integer : PrecisionKind::Float);
      r.threshold = jr.at("threshold").get<float>();
      r.accuracy = jr.at("accuracy").get<double>();
      r.memory_bytes = jr.at("memory_bytes").get<std::uint64_t>();
      r.memory_saved_bytes = jr.at("memory_saved_bytes").get<std::int64_t>();
      t.records.push_back(std::move(r));
    }
    t.validate();
    return t;
  } catch (const json::exception& e) {
    throw InvalidInputError(std::string("sensitivity table: ") + e.what());
  }
}

SensitivityTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open sensitivity table " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return table_from_json(ss.str());
}

std::vector<double> parse_sparsity_levels(std::string_view text) {
  std::vector<double> out;
  for (auto item : split(text)) {
    try {
      std::size_t used = 0;
      const std::string s(item);
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument("trailing characters");
      out.push_back(v);
    } catch (const std::exception&) {
      throw InvalidInputError("bad sparsity level '" + std::string(item) + "'");
    }
  }
  if (out.empty()) throw InvalidInputError("empty sparsity level list");
  return out;
}

std::vector<Precision> parse_precisions(std::string_view text) {
  std::vector<Precision> out;
  for (auto item : split(text)) out.push_back(parse_precision(item));
  if (out.empty()) throw InvalidInputError("empty precision list");
  return out;
}

}  // namespace adact

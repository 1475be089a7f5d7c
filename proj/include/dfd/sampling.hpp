#pragma once

// Class-imbalance strategy: every model sees all train reals; original train
// fakes are split by seeded shuffle + round-robin into disjoint subsets of
// near-equal size; generated fakes are shared by every model.

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "dfd/manifest.hpp"
#include "dfd/rng.hpp"

namespace dfd {

struct PartitionPlan {
  int n_models = 3;
  std::vector<std::string> real_ids;                   // shared: train reals (orig + offline-aug)
  std::vector<std::string> generated_ids;              // shared: train fake-generated
  std::vector<std::vector<std::string>> fake_subsets;  // disjoint original train fakes
};

inline PartitionPlan partition_fakes(const std::vector<ManifestRecord>& manifest, int n_models,
                                     uint64_t seed) {
  if (n_models < 1) throw std::runtime_error("partition: n_models must be >= 1");
  PartitionPlan plan;
  plan.n_models = n_models;
  std::vector<std::string> fakes;
  for (const auto& r : manifest) {
    if (r.split != "train") continue;
    if (r.label == 1)
      plan.real_ids.push_back(r.id);
    else if (r.source == "fake-generated")
      plan.generated_ids.push_back(r.id);
    else
      fakes.push_back(r.id);
  }
  if (fakes.size() < static_cast<std::size_t>(n_models))
    throw std::runtime_error("partition: need at least n_models original fakes");
  Rng rng(derive_seed(seed, "partition"));
  rng.shuffle(fakes);
  plan.fake_subsets.assign(static_cast<std::size_t>(n_models), {});
  for (std::size_t i = 0; i < fakes.size(); ++i)
    plan.fake_subsets[i % static_cast<std::size_t>(n_models)].push_back(std::move(fakes[i]));
  return plan;
}

struct TrainsetView {
  std::vector<ManifestRecord> records;  // in manifest order
  std::size_t n_real = 0, n_fake = 0;
};

inline TrainsetView build_model_trainset(const std::vector<ManifestRecord>& manifest,
                                         const PartitionPlan& plan, int model_index) {
  if (model_index < 0 || model_index >= plan.n_models)
    throw std::runtime_error("trainset: model index out of range");
  std::set<std::string> wanted(plan.real_ids.begin(), plan.real_ids.end());
  wanted.insert(plan.generated_ids.begin(), plan.generated_ids.end());
  const auto& subset = plan.fake_subsets[static_cast<std::size_t>(model_index)];
  wanted.insert(subset.begin(), subset.end());
  TrainsetView view;
  for (const auto& r : manifest)
    if (wanted.count(r.id)) {
      view.records.push_back(r);
      (r.label == 1 ? view.n_real : view.n_fake) += 1;
    }
  return view;
}

inline nlohmann::json partition_plan_to_json(const PartitionPlan& plan) {
  nlohmann::json j;
  j["n_models"] = plan.n_models;
  j["real_ids"] = plan.real_ids;
  j["generated_ids"] = plan.generated_ids;
  j["fake_subsets"] = plan.fake_subsets;
  return j;
}

inline PartitionPlan partition_plan_from_json(const nlohmann::json& j) {
  PartitionPlan plan;
  plan.n_models = j.at("n_models").get<int>();
  plan.real_ids = j.at("real_ids").get<std::vector<std::string>>();
  plan.generated_ids = j.at("generated_ids").get<std::vector<std::string>>();
  plan.fake_subsets = j.at("fake_subsets").get<std::vector<std::vector<std::string>>>();
  return plan;
}

inline void save_partition_plan(const PartitionPlan& plan, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write plan: " + path);
  os << partition_plan_to_json(plan).dump(2) << "\n";
}

inline PartitionPlan load_partition_plan(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read plan: " + path);
  nlohmann::json j;
  is >> j;
  return partition_plan_from_json(j);
}

}  // namespace dfd

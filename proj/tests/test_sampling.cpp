#include "catch_amalgamated.hpp"

#include <set>

#include "dfd/sampling.hpp"

using namespace dfd;

namespace {

std::vector<ManifestRecord> toy_manifest(int reals, int aug, int fakes, int generated) {
  std::vector<ManifestRecord> m;
  for (int i = 0; i < reals; ++i)
    m.push_back({"r" + std::to_string(i), "p", 1, "real-orig", "train"});
  for (int i = 0; i < aug; ++i)
    m.push_back({"a" + std::to_string(i), "p", 1, "real-offline-aug", "train"});
  for (int i = 0; i < fakes; ++i)
    m.push_back({"f" + std::to_string(i), "p", 0, "fake-method-" + std::to_string(i % 4 + 1),
                 "train"});
  for (int i = 0; i < generated; ++i)
    m.push_back({"g" + std::to_string(i), "p", 0, "fake-generated", "train"});
  // validation records must never enter the partition
  m.push_back({"vr", "p", 1, "real-orig", "val"});
  m.push_back({"vf", "p", 0, "fake-method-1", "val"});
  return m;
}

}  // namespace

TEST_CASE("nine fakes over three models give disjoint covering triples", "[sampling]") {
  auto manifest = toy_manifest(4, 0, 9, 0);
  auto plan = partition_fakes(manifest, 3, 7);
  REQUIRE(plan.fake_subsets.size() == 3);
  std::set<std::string> seen;
  for (const auto& s : plan.fake_subsets) {
    CHECK(s.size() == 3);
    for (const auto& id : s) CHECK(seen.insert(id).second);
  }
  CHECK(seen.size() == 9);
}

TEST_CASE("partition is deterministic per seed and varies across seeds", "[sampling]") {
  auto manifest = toy_manifest(2, 0, 50, 0);
  auto a = partition_fakes(manifest, 3, 11);
  auto b = partition_fakes(manifest, 3, 11);
  CHECK(a.fake_subsets == b.fake_subsets);
  auto c = partition_fakes(manifest, 3, 12);
  CHECK(a.fake_subsets != c.fake_subsets);
  // invariants hold regardless of seed
  std::set<std::string> seen;
  for (const auto& s : c.fake_subsets)
    for (const auto& id : s) CHECK(seen.insert(id).second);
  CHECK(seen.size() == 50);
}

TEST_CASE("subset sizes skew by at most one", "[sampling]") {
  auto manifest = toy_manifest(1, 0, 32, 0);
  auto plan = partition_fakes(manifest, 3, 1);
  std::vector<size_t> sizes;
  for (const auto& s : plan.fake_subsets) sizes.push_back(s.size());
  CHECK(*std::max_element(sizes.begin(), sizes.end()) -
            *std::min_element(sizes.begin(), sizes.end()) <=
        1);
}

TEST_CASE("generated fakes are excluded from the split and shared", "[sampling]") {
  auto manifest = toy_manifest(3, 2, 12, 5);
  auto plan = partition_fakes(manifest, 3, 3);
  CHECK(plan.generated_ids.size() == 5);
  CHECK(plan.real_ids.size() == 5);  // originals + offline-aug
  for (const auto& s : plan.fake_subsets)
    for (const auto& id : s) CHECK(id[0] == 'f');

  for (int mi = 0; mi < 3; ++mi) {
    auto view = build_model_trainset(manifest, plan, mi);
    CHECK(view.n_real == 5);
    CHECK(view.n_fake == 4 + 5);  // subset + shared generated
    std::set<std::string> ids;
    for (const auto& r : view.records) ids.insert(r.id);
    for (const auto& g : plan.generated_ids) CHECK(ids.count(g) == 1);
    for (const auto& r : plan.real_ids) CHECK(ids.count(r) == 1);
  }
}

TEST_CASE("different models share only generated fakes", "[sampling]") {
  auto manifest = toy_manifest(2, 0, 30, 4);
  auto plan = partition_fakes(manifest, 3, 5);
  auto v0 = build_model_trainset(manifest, plan, 0);
  auto v1 = build_model_trainset(manifest, plan, 1);
  std::set<std::string> f0, f1;
  for (const auto& r : v0.records)
    if (r.label == 0) f0.insert(r.id);
  for (const auto& r : v1.records)
    if (r.label == 0) f1.insert(r.id);
  std::vector<std::string> common;
  std::set_intersection(f0.begin(), f0.end(), f1.begin(), f1.end(), std::back_inserter(common));
  for (const auto& id : common) CHECK(id[0] == 'g');
  CHECK(common.size() == 4);
}

TEST_CASE("desk-scale arithmetic: 3000 reals and 2000 fakes per model", "[sampling]") {
  auto manifest = toy_manifest(2000, 1000, 6000, 0);
  auto plan = partition_fakes(manifest, 3, 42);
  for (int mi = 0; mi < 3; ++mi) {
    auto view = build_model_trainset(manifest, plan, mi);
    CHECK(view.n_real == 3000);
    CHECK(view.n_fake == 2000);
  }
}

TEST_CASE("errors: bad model index and too few fakes", "[sampling]") {
  auto manifest = toy_manifest(2, 0, 2, 0);
  CHECK_THROWS(partition_fakes(manifest, 3, 1));
  auto manifest2 = toy_manifest(2, 0, 9, 0);
  auto plan = partition_fakes(manifest2, 3, 1);
  CHECK_THROWS(build_model_trainset(manifest2, plan, 3));
  CHECK_THROWS(partition_fakes(manifest2, 0, 1));
}

TEST_CASE("plan JSON round-trips", "[sampling]") {
  auto manifest = toy_manifest(3, 1, 10, 2);
  auto plan = partition_fakes(manifest, 3, 9);
  auto j = partition_plan_to_json(plan);
  auto back = partition_plan_from_json(j);
  CHECK(back.n_models == plan.n_models);
  CHECK(back.real_ids == plan.real_ids);
  CHECK(back.generated_ids == plan.generated_ids);
  CHECK(back.fake_subsets == plan.fake_subsets);
}

#include "catch_amalgamated.hpp"

#include <filesystem>
#include <fstream>

#include "dfd/config.hpp"
#include "dfd/runner.hpp"

using namespace dfd;
namespace fs = std::filesystem;

TEST_CASE("default config is valid and echoes faithfully", "[config]") {
  RunConfig cfg = load_run_config("");
  CHECK(cfg.seed == 42);
  CHECK(cfg.data.counts.train_real == 2000);
  CHECK(cfg.data.counts.train_fake == 6000);
  CHECK(cfg.data.counts.val_real == 400);
  CHECK(cfg.stage1.optimizer.algorithm == "adamw");
  CHECK(cfg.stage1.optimizer.weight_decay == 0.01);
  CHECK(cfg.stage2.optimizer.algorithm == "adam");
  CHECK(cfg.stage1.temperature == 0.07);
  CHECK(cfg.augment.online.p_aug == 0.5);

  auto j = run_config_to_json(cfg);
  auto back = run_config_from_json(j);
  CHECK(run_config_to_json(back) == j);
}

TEST_CASE("unknown keys are rejected with their full path", "[config]") {
  nlohmann::json j;
  j["frobnicate"] = 1;
  CHECK_THROWS_WITH(run_config_from_json(j),
                    Catch::Matchers::ContainsSubstring("unknown key 'frobnicate'"));

  nlohmann::json j2;
  j2["stage1"] = {{"learning_rate", 0.1}};
  CHECK_THROWS_WITH(run_config_from_json(j2),
                    Catch::Matchers::ContainsSubstring("stage1.learning_rate"));

  nlohmann::json j3;
  j3["data"] = {{"method_mix", {0.5, 0.5}}};
  CHECK_THROWS_WITH(run_config_from_json(j3),
                    Catch::Matchers::ContainsSubstring("method_mix"));

  nlohmann::json j4;
  j4["stage2"] = {{"head", {{"width", 3}}}};
  CHECK_THROWS_WITH(run_config_from_json(j4),
                    Catch::Matchers::ContainsSubstring("stage2.head.width"));
}

TEST_CASE("config validation catches bad values", "[config]") {
  nlohmann::json j;
  j["backbones"] = {"local-cnn", "no-such-net", "global-mlp"};
  CHECK_THROWS_WITH(run_config_from_json(j),
                    Catch::Matchers::ContainsSubstring("no-such-net"));

  nlohmann::json j2;
  j2["stage1"] = {{"optimizer", {{"algorithm", "adam"}, {"weight_decay", 0.1}}}};
  CHECK_THROWS(run_config_from_json(j2));

  nlohmann::json j3;
  j3["sampling"] = {{"n_models", 2}};  // backbones still lists 3
  CHECK_THROWS(run_config_from_json(j3));
}

TEST_CASE("online aug config propagates into both stages", "[config]") {
  nlohmann::json j;
  j["augment"] = {{"online", {{"p_aug", 0.25}}}};
  auto cfg = run_config_from_json(j);
  CHECK(cfg.stage1.online_aug.p_aug == 0.25);
  CHECK(cfg.stage2.online_aug.p_aug == 0.25);
}

TEST_CASE("ablation variants differ from full in exactly one dimension", "[config]") {
  RunConfig base = load_run_config("");
  auto full = ablation_variant_config(base, "full", 7);
  auto no_off = ablation_variant_config(base, "no-offline-aug", 7);
  auto no_on = ablation_variant_config(base, "no-online-aug", 7);
  auto bce = ablation_variant_config(base, "bce-instead-supcon", 7);

  CHECK(full.sampling.n_models == 1);
  CHECK(full.backbones == std::vector<std::string>{base.ablation.backbone});

  CHECK(no_off.augment.offline_fraction == 0.0);
  CHECK(no_off.augment.online.p_aug == full.augment.online.p_aug);
  CHECK(no_off.stage1.stage1_loss == "supcon");

  CHECK(no_on.stage1.online_aug.p_aug == 0.0);
  CHECK(no_on.stage2.online_aug.p_aug == 0.0);
  CHECK(no_on.augment.offline_fraction == full.augment.offline_fraction);

  CHECK(bce.stage1.stage1_loss == "bce");
  CHECK(bce.augment.offline_fraction == full.augment.offline_fraction);
  CHECK(bce.stage1.online_aug.p_aug == full.stage1.online_aug.p_aug);

  CHECK_THROWS(ablation_variant_config(base, "nonsense", 7));
}

TEST_CASE("micro end-to-end single-model recipe writes every artifact", "[config]") {
  auto dir = fs::temp_directory_path() / "dfd-test-recipe";
  fs::remove_all(dir);

  RunConfig cfg = load_run_config("");
  cfg.out_dir = dir.string();
  cfg.seed = 5;
  cfg.data.image_size = 16;
  cfg.data.counts = {40, 60, 4, 12, 12};
  cfg.sampling.n_models = 1;
  cfg.backbones = {"local-cnn"};
  cfg.stage1.epochs = 1;
  cfg.stage2.epochs = 2;
  cfg.validate();

  auto metrics = run_single_model_recipe(cfg);
  CHECK(metrics.tp + metrics.fp + metrics.tn + metrics.fn == 24);

  RunLayout layout(cfg.out_dir);
  CHECK(fs::exists(layout.config_echo_path()));
  CHECK(fs::exists(layout.manifest_path()));
  CHECK(fs::exists(layout.plan_path()));
  CHECK(fs::exists(layout.ckpt_path(1, 0)));
  CHECK(fs::exists(layout.ckpt_path(2, 0)));
  CHECK(fs::exists(layout.train_log_path(1, 0)));
  CHECK(fs::exists(layout.pred_path(0, "val")));

  // offline augmentation appended floor(0.5 * 40) = 20 records
  auto manifest = read_manifest(layout.manifest_path().string());
  int offline = 0;
  for (const auto& r : manifest)
    if (r.source == "real-offline-aug") ++offline;
  CHECK(offline == 20);

  // training log lines carry the documented fields
  std::ifstream log(layout.train_log_path(1, 0));
  std::string line;
  REQUIRE(std::getline(log, line));
  auto entry = nlohmann::json::parse(line);
  CHECK(entry.contains("epoch"));
  CHECK(entry.contains("split"));
  CHECK(entry.contains("loss"));
  CHECK(entry.contains("lr"));
  CHECK(entry.contains("wall_ms"));

  // every artifact stays inside out_dir (spot check: no stray files in cwd)
  fs::remove_all(dir);
}

TEST_CASE("config echo is byte-stable across rewrites", "[config]") {
  auto dir = fs::temp_directory_path() / "dfd-test-echo";
  fs::remove_all(dir);
  RunConfig cfg = load_run_config("");
  cfg.out_dir = dir.string();
  echo_config(cfg);
  std::ifstream f1(RunLayout(cfg.out_dir).config_echo_path(), std::ios::binary);
  std::string a((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  echo_config(cfg);
  std::ifstream f2(RunLayout(cfg.out_dir).config_echo_path(), std::ios::binary);
  std::string b((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(a == b);
  CHECK(!a.empty());
  fs::remove_all(dir);
}

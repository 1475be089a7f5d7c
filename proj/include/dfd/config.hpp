#pragma once

// Run configuration: one JSON document covering every stage. Parsing is
// strict — unknown keys are rejected by full path — and the resolved config
// (defaults expanded) is echoed beside each run's artifacts.

#include <array>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "dfd/augment.hpp"
#include "dfd/model.hpp"
#include "dfd/pipeline.hpp"
#include "dfd/synth.hpp"

namespace dfd {

struct DataConfig {
  int image_size = 32;
  DatasetCounts counts;
  std::vector<double> method_mix{0.25, 0.25, 0.25, 0.25};
};

struct AugmentStageConfig {
  double offline_fraction = 0.5;
  OnlineAugConfig online;
};

struct SamplingConfig {
  int n_models = 3;
};

struct EnsembleConfig {
  double threshold = 0.5;
};

struct AblationConfig {
  std::vector<uint64_t> seeds{1, 2, 3, 4, 5};
  std::string backbone = "multiscale-cnn";
};

struct RunConfig {
  uint64_t seed = 42;
  std::string out_dir = "out";
  int threads = 1;
  DataConfig data;
  AugmentStageConfig augment;
  SamplingConfig sampling;
  std::vector<std::string> backbones{"local-cnn", "multiscale-cnn", "global-mlp"};
  StageConfig stage1;
  StageConfig stage2;
  EnsembleConfig ensemble;
  AblationConfig ablation;

  RunConfig() {
    stage1.stage = "backbone";
    stage1.epochs = 4;
    stage1.optimizer.algorithm = "adamw";
    stage1.optimizer.lr = 2e-3;
    stage1.optimizer.weight_decay = 1e-2;
    stage2.stage = "classifier";
    stage2.epochs = 4;
    stage2.optimizer.algorithm = "adam";
    stage2.optimizer.lr = 5e-3;
    stage2.optimizer.weight_decay = 0.0;
  }

  void validate() const {
    if (data.image_size < 8 || data.image_size % 4 != 0)
      throw std::runtime_error("config: data.image_size must be >= 8 and divisible by 4");
    if (data.counts.train_real < 1 || data.counts.train_fake < 1 || data.counts.val_real < 1 ||
        data.counts.val_fake < 1 || data.counts.train_generated < 0)
      throw std::runtime_error("config: data counts must be positive");
    if (data.method_mix.size() != 4)
      throw std::runtime_error("config: data.method_mix needs 4 entries");
    if (augment.offline_fraction < 0 || augment.offline_fraction > 1)
      throw std::runtime_error("config: augment.offline_fraction must be in [0,1]");
    augment.online.validate();
    if (sampling.n_models < 1) throw std::runtime_error("config: sampling.n_models must be >= 1");
    if (backbones.size() != static_cast<std::size_t>(sampling.n_models))
      throw std::runtime_error("config: backbones must list one preset per model");
    for (const auto& b : backbones) backbone_preset(b, 32);  // throws on unknown name
    stage1.validate();
    stage2.validate();
    if (ensemble.threshold < 0 || ensemble.threshold > 1)
      throw std::runtime_error("config: ensemble.threshold must be in [0,1]");
    if (ablation.seeds.empty()) throw std::runtime_error("config: ablation.seeds is empty");
    backbone_preset(ablation.backbone, 32);
  }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::string& path,
                           std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw std::runtime_error("config: " + path + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed)
      if (it.key() == a) {
        ok = true;
        break;
      }
    if (!ok)
      throw std::runtime_error("config: unknown key '" +
                               (path.empty() ? it.key() : path + "." + it.key()) + "'");
  }
}

inline void parse_optimizer(const nlohmann::json& j, const std::string& path, OptimConfig& cfg) {
  reject_unknown(j, path, {"algorithm", "lr", "beta1", "beta2", "eps", "weight_decay"});
  cfg.algorithm = j.value("algorithm", cfg.algorithm);
  cfg.lr = j.value("lr", cfg.lr);
  cfg.beta1 = j.value("beta1", cfg.beta1);
  cfg.beta2 = j.value("beta2", cfg.beta2);
  cfg.eps = j.value("eps", cfg.eps);
  cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
}

inline void parse_scheduler(const nlohmann::json& j, const std::string& path,
                            SchedulerConfig& cfg) {
  reject_unknown(j, path, {"factor", "patience"});
  cfg.factor = j.value("factor", cfg.factor);
  cfg.patience = j.value("patience", cfg.patience);
}

inline void parse_stage(const nlohmann::json& j, const std::string& path, StageConfig& cfg,
                        bool is_stage1) {
  if (is_stage1)
    reject_unknown(j, path,
                   {"batch_size", "epochs", "optimizer", "scheduler", "temperature", "loss"});
  else
    reject_unknown(j, path, {"batch_size", "epochs", "optimizer", "scheduler", "head"});
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.epochs = j.value("epochs", cfg.epochs);
  if (j.contains("optimizer")) parse_optimizer(j["optimizer"], path + ".optimizer", cfg.optimizer);
  if (j.contains("scheduler")) parse_scheduler(j["scheduler"], path + ".scheduler", cfg.scheduler);
  if (is_stage1) {
    cfg.temperature = j.value("temperature", cfg.temperature);
    cfg.stage1_loss = j.value("loss", cfg.stage1_loss);
  } else if (j.contains("head")) {
    reject_unknown(j["head"], path + ".head", {"hidden", "dropout"});
    cfg.head.hidden = j["head"].value("hidden", cfg.head.hidden);
    cfg.head.dropout = j["head"].value("dropout", cfg.head.dropout);
  }
}

}  // namespace detail

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  detail::reject_unknown(j, "",
                         {"seed", "out_dir", "threads", "data", "augment", "sampling", "backbones",
                          "stage1", "stage2", "ensemble", "ablation"});
  cfg.seed = j.value("seed", cfg.seed);
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  cfg.threads = j.value("threads", cfg.threads);
  if (j.contains("data")) {
    const auto& d = j["data"];
    detail::reject_unknown(d, "data",
                           {"image_size", "train_real", "train_fake", "train_generated",
                            "val_real", "val_fake", "method_mix"});
    cfg.data.image_size = d.value("image_size", cfg.data.image_size);
    cfg.data.counts.train_real = d.value("train_real", cfg.data.counts.train_real);
    cfg.data.counts.train_fake = d.value("train_fake", cfg.data.counts.train_fake);
    cfg.data.counts.train_generated = d.value("train_generated", cfg.data.counts.train_generated);
    cfg.data.counts.val_real = d.value("val_real", cfg.data.counts.val_real);
    cfg.data.counts.val_fake = d.value("val_fake", cfg.data.counts.val_fake);
    if (d.contains("method_mix")) cfg.data.method_mix = d["method_mix"].get<std::vector<double>>();
  }
  if (j.contains("augment")) {
    const auto& a = j["augment"];
    detail::reject_unknown(a, "augment", {"offline_fraction", "online"});
    cfg.augment.offline_fraction = a.value("offline_fraction", cfg.augment.offline_fraction);
    if (a.contains("online")) {
      detail::reject_unknown(a["online"], "augment.online", {"p_aug"});
      cfg.augment.online.p_aug = a["online"].value("p_aug", cfg.augment.online.p_aug);
    }
  }
  if (j.contains("sampling")) {
    detail::reject_unknown(j["sampling"], "sampling", {"n_models"});
    cfg.sampling.n_models = j["sampling"].value("n_models", cfg.sampling.n_models);
  }
  if (j.contains("backbones")) cfg.backbones = j["backbones"].get<std::vector<std::string>>();
  if (j.contains("stage1")) detail::parse_stage(j["stage1"], "stage1", cfg.stage1, true);
  if (j.contains("stage2")) detail::parse_stage(j["stage2"], "stage2", cfg.stage2, false);
  if (j.contains("ensemble")) {
    detail::reject_unknown(j["ensemble"], "ensemble", {"threshold"});
    cfg.ensemble.threshold = j["ensemble"].value("threshold", cfg.ensemble.threshold);
  }
  if (j.contains("ablation")) {
    detail::reject_unknown(j["ablation"], "ablation", {"seeds", "backbone"});
    if (j["ablation"].contains("seeds"))
      cfg.ablation.seeds = j["ablation"]["seeds"].get<std::vector<uint64_t>>();
    cfg.ablation.backbone = j["ablation"].value("backbone", cfg.ablation.backbone);
  }
  // the online config rides along into both stage configs
  cfg.stage1.online_aug = cfg.augment.online;
  cfg.stage2.online_aug = cfg.augment.online;
  cfg.validate();
  return cfg;
}

inline nlohmann::json run_config_to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;
  j["threads"] = cfg.threads;
  j["data"] = {{"image_size", cfg.data.image_size},
               {"train_real", cfg.data.counts.train_real},
               {"train_fake", cfg.data.counts.train_fake},
               {"train_generated", cfg.data.counts.train_generated},
               {"val_real", cfg.data.counts.val_real},
               {"val_fake", cfg.data.counts.val_fake},
               {"method_mix", cfg.data.method_mix}};
  j["augment"] = {{"offline_fraction", cfg.augment.offline_fraction},
                  {"online", {{"p_aug", cfg.augment.online.p_aug}}}};
  j["sampling"] = {{"n_models", cfg.sampling.n_models}};
  j["backbones"] = cfg.backbones;
  auto opt_json = [](const OptimConfig& o) {
    return nlohmann::json{{"algorithm", o.algorithm}, {"lr", o.lr},   {"beta1", o.beta1},
                          {"beta2", o.beta2},         {"eps", o.eps}, {"weight_decay", o.weight_decay}};
  };
  auto sched_json = [](const SchedulerConfig& s) {
    return nlohmann::json{{"factor", s.factor}, {"patience", s.patience}};
  };
  j["stage1"] = {{"batch_size", cfg.stage1.batch_size},
                 {"epochs", cfg.stage1.epochs},
                 {"optimizer", opt_json(cfg.stage1.optimizer)},
                 {"scheduler", sched_json(cfg.stage1.scheduler)},
                 {"temperature", cfg.stage1.temperature},
                 {"loss", cfg.stage1.stage1_loss}};
  j["stage2"] = {{"batch_size", cfg.stage2.batch_size},
                 {"epochs", cfg.stage2.epochs},
                 {"optimizer", opt_json(cfg.stage2.optimizer)},
                 {"scheduler", sched_json(cfg.stage2.scheduler)},
                 {"head", {{"hidden", cfg.stage2.head.hidden}, {"dropout", cfg.stage2.head.dropout}}}};
  j["ensemble"] = {{"threshold", cfg.ensemble.threshold}};
  j["ablation"] = {{"seeds", cfg.ablation.seeds}, {"backbone", cfg.ablation.backbone}};
  return j;
}

inline RunConfig load_run_config(const std::string& path) {
  if (path.empty()) {
    RunConfig cfg;
    cfg.stage1.online_aug = cfg.augment.online;
    cfg.stage2.online_aug = cfg.augment.online;
    cfg.validate();
    return cfg;
  }
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read config: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("config: invalid JSON in " + path + ": " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace dfd

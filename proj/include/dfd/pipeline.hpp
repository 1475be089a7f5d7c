#pragma once

// Stage 1: backbone trained with SupCon on l2-normalized embeddings (AdamW +
// plateau scheduler). Stage 2: frozen backbone in eval mode, MLP head trained
// with stable BCE (Adam + plateau scheduler). Checkpoints are a JSON header
// line followed by NTF tensor blobs and round-trip byte-exactly.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dfd/augment.hpp"
#include "dfd/image.hpp"
#include "dfd/losses.hpp"
#include "dfd/manifest.hpp"
#include "dfd/model.hpp"
#include "dfd/ntf.hpp"
#include "dfd/optim.hpp"
#include "dfd/scheduler.hpp"

namespace dfd {

struct Sample {
  std::string id;
  int label = 0;
  Image img;
};

inline std::vector<Sample> load_samples(const std::vector<ManifestRecord>& records,
                                        const std::string& data_dir,
                                        const std::string& split = "") {
  namespace fs = std::filesystem;
  std::vector<Sample> out;
  for (const auto& r : records) {
    if (!split.empty() && r.split != split) continue;
    Sample s;
    s.id = r.id;
    s.label = r.label;
    s.img = png_read((fs::path(data_dir) / r.path).string());
    out.push_back(std::move(s));
  }
  return out;
}

struct SchedulerConfig {
  double factor = 0.5;
  int patience = 1;
};

struct ClassifierHeadSpec {
  std::size_t hidden = 64;
  double dropout = 0.3;

  std::vector<LayerSpec> layers(std::size_t embedding_dim) const {
    return {LayerSpec::dense_(embedding_dim, hidden), LayerSpec::batchnorm_(hidden),
            LayerSpec::relu_(), LayerSpec::dropout_(dropout), LayerSpec::dense_(hidden, 1)};
  }
};

struct StageConfig {
  std::string stage = "backbone";  // "backbone" | "classifier"
  int batch_size = 16;
  int epochs = 4;
  OptimConfig optimizer;
  SchedulerConfig scheduler;
  OnlineAugConfig online_aug;
  double temperature = 0.07;        // stage 1
  std::string stage1_loss = "supcon";  // "supcon" | "bce" (ablation variant)
  ClassifierHeadSpec head;          // stage 2
  uint64_t seed = 42;

  void validate() const {
    if (stage != "backbone" && stage != "classifier")
      throw std::runtime_error("stage must be 'backbone' or 'classifier'");
    if (epochs < 1) throw std::runtime_error("epochs must be >= 1");
    if (stage == "backbone" && batch_size < 2)
      throw std::runtime_error("backbone stage needs batch_size >= 2 (contrastive pairs)");
    if (batch_size < 1) throw std::runtime_error("batch_size must be >= 1");
    if (stage1_loss != "supcon" && stage1_loss != "bce")
      throw std::runtime_error("stage1 loss must be 'supcon' or 'bce'");
    if (!(temperature > 0)) throw std::runtime_error("temperature must be > 0");
    optimizer.validate();
    online_aug.validate();
    SchedulerState probe;
    probe.factor = scheduler.factor;
    probe.patience = scheduler.patience;
    probe.validate();
  }
};

struct TrainLogEntry {
  int epoch = 0;
  std::string split;  // train | val
  double loss = 0.0;
  double lr = 0.0;
  long long wall_ms = 0;  // written to the JSONL log only, never the checkpoint
};

struct ModelCheckpoint {
  std::string kind;  // stage1 | stage2
  BackboneSpec backbone_spec;
  Model<float> backbone;
  bool has_head = false;
  ClassifierHeadSpec head_spec;
  Model<float> head;
  OptimConfig optim_cfg;
  OptimizerState<float> opt_state;
  SchedulerState sched;
  std::vector<TrainLogEntry> log;
  uint64_t backbone_hash = 0;  // stage2: hash of the frozen backbone

  double epoch_mean_train_loss(int epoch) const {
    for (const auto& e : log)
      if (e.epoch == epoch && e.split == "train") return e.loss;
    throw std::runtime_error("no train log entry for epoch " + std::to_string(epoch));
  }
};

namespace detail {

inline Tensor<float> stack_batch(const std::vector<const Image*>& imgs) {
  const Image& first = *imgs.front();
  Tensor<float> x({imgs.size(), static_cast<std::size_t>(first.h),
                   static_cast<std::size_t>(first.w), 3});
  std::size_t per = first.px.size();
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    if (imgs[i]->px.size() != per) throw std::runtime_error("batch images differ in size");
    std::copy(imgs[i]->px.begin(), imgs[i]->px.end(), x.data.begin() + i * per);
  }
  return x;
}

inline bool single_class(const std::vector<int>& labels) {
  for (std::size_t i = 1; i < labels.size(); ++i)
    if (labels[i] != labels[0]) return false;
  return true;
}

inline void append_log_line(const std::string& path, const TrainLogEntry& e) {
  if (path.empty()) return;
  std::ofstream os(path, std::ios::binary | std::ios::app);
  nlohmann::json j;
  j["epoch"] = e.epoch;
  j["split"] = e.split;
  j["loss"] = e.loss;
  j["lr"] = e.lr;
  j["wall_ms"] = e.wall_ms;
  os << j.dump() << "\n";
}

// Validation order is shuffled once so contrastive batches mix both classes.
inline std::vector<std::size_t> fixed_eval_order(std::size_t n, uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(seed, "val-order"));
  rng.shuffle(order);
  return order;
}

}  // namespace detail

// Mean stage-1 loss over a sample set in eval mode (no augmentation). Used
// for the per-epoch validation loss that drives the plateau scheduler.
inline double stage1_eval_loss(Model<float>& backbone, Model<float>* bce_head,
                               const std::vector<Sample>& samples,
                               const std::vector<std::size_t>& order, int batch_size,
                               double temperature) {
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    std::size_t end = std::min(order.size(), start + batch_size);
    std::vector<const Image*> imgs;
    std::vector<int> labels;
    for (std::size_t k = start; k < end; ++k) {
      imgs.push_back(&samples[order[k]].img);
      labels.push_back(samples[order[k]].label);
    }
    if (imgs.size() < 2) continue;
    Tensor<float> x = detail::stack_batch(imgs);
    Tensor<float> emb = backbone.forward(x, false);
    if (bce_head != nullptr) {
      Tensor<float> logits = bce_head->forward(emb, false);
      auto res = bce_logits_loss(logits, labels);
      total += res.loss * static_cast<double>(imgs.size());
      counted += imgs.size();
    } else {
      if (detail::single_class(labels)) continue;
      auto norm = l2_normalize_rows(emb);
      auto res = supcon_loss(norm.normalized, labels, {temperature});
      if (res.no_positives) continue;
      total += res.loss * static_cast<double>(imgs.size());
      counted += imgs.size();
    }
  }
  return counted ? total / static_cast<double>(counted) : 0.0;
}

inline ModelCheckpoint train_stage1(const std::vector<Sample>& train,
                                    const std::vector<Sample>& val, const BackboneSpec& bspec,
                                    const StageConfig& cfg, const std::string& log_path = "") {
  cfg.validate();
  if (cfg.stage != "backbone") throw std::runtime_error("train_stage1 requires stage=backbone");
  if (train.empty() || val.empty()) throw std::runtime_error("train_stage1: empty dataset");

  ModelCheckpoint ckpt;
  ckpt.kind = "stage1";
  ckpt.backbone_spec = bspec;
  ckpt.backbone = build_backbone<float>(bspec, cfg.seed);
  ckpt.optim_cfg = cfg.optimizer;

  Model<float> bce_head;  // temporary logit head for the BCE ablation variant
  const bool use_bce = cfg.stage1_loss == "bce";
  if (use_bce)
    bce_head = build_model<float>({LayerSpec::dense_(bspec.embedding_dim, 1)},
                                  {bspec.embedding_dim}, derive_seed(cfg.seed, "bce-head"));

  auto params = ckpt.backbone.params();
  std::size_t backbone_param_count = params.size();
  if (use_bce) {
    auto hp = bce_head.params();
    params.insert(params.end(), hp.begin(), hp.end());
  }
  auto opt = OptimizerState<float>::init(params);

  ckpt.sched.factor = cfg.scheduler.factor;
  ckpt.sched.patience = cfg.scheduler.patience;
  ckpt.sched.current_lr = cfg.optimizer.lr;

  auto val_order = detail::fixed_eval_order(val.size(), cfg.seed);

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    const double lr = ckpt.sched.current_lr;
    Rng shuffle_rng(derive_seed(cfg.seed, "epoch-shuffle", static_cast<uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double total = 0.0;
    std::size_t counted = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size, ++batch_index) {
      std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<Image> augmented;
      std::vector<const Image*> imgs;
      std::vector<int> labels;
      augmented.reserve(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const Sample& s = train[order[k]];
        Rng aug_rng(derive_seed(cfg.seed, "online-aug", s.id, static_cast<uint64_t>(epoch)));
        augmented.push_back(online_augment(s.img, cfg.online_aug, aug_rng));
        labels.push_back(s.label);
      }
      for (const auto& im : augmented) imgs.push_back(&im);
      if (imgs.size() < 2 || (!use_bce && detail::single_class(labels))) {
        std::cerr << "stage1: skipping single-class batch " << batch_index << " in epoch "
                  << epoch << "\n";
        continue;
      }

      Rng model_rng(derive_seed(cfg.seed, "model-rng", static_cast<uint64_t>(epoch),
                                static_cast<uint64_t>(batch_index)));
      Tensor<float> x = detail::stack_batch(imgs);
      Tensor<float> emb = ckpt.backbone.forward(x, true, &model_rng);

      double loss;
      Tensor<float> demb;
      if (use_bce) {
        Tensor<float> logits = bce_head.forward(emb, true, &model_rng);
        auto res = bce_logits_loss(logits, labels);
        loss = res.loss;
        demb = bce_head.backward(res.grad);
      } else {
        auto norm = l2_normalize_rows(emb);
        auto res = supcon_loss(norm.normalized, labels, {cfg.temperature});
        if (res.no_positives) {
          std::cerr << "stage1: no positive pairs in batch " << batch_index << ", skipping\n";
          continue;
        }
        loss = res.loss;
        demb = l2_normalize_rows_backward(norm.normalized, norm.norms, res.grad);
      }
      if (!std::isfinite(loss))
        throw std::runtime_error("stage1: non-finite loss at epoch " + std::to_string(epoch) +
                                 " batch " + std::to_string(batch_index));
      total += loss * static_cast<double>(imgs.size());
      counted += imgs.size();

      ckpt.backbone.backward(demb);
      adamw_step(params, opt, cfg.optimizer, lr);
    }

    double train_loss = counted ? total / static_cast<double>(counted) : 0.0;
    double val_loss = stage1_eval_loss(ckpt.backbone, use_bce ? &bce_head : nullptr, val,
                                       val_order, cfg.batch_size, cfg.temperature);
    auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
    TrainLogEntry te{epoch, "train", train_loss, lr, wall};
    TrainLogEntry ve{epoch, "val", val_loss, lr, 0};
    ckpt.log.push_back(te);
    ckpt.log.push_back(ve);
    detail::append_log_line(log_path, te);
    detail::append_log_line(log_path, ve);
    plateau_step(ckpt.sched, val_loss);
  }

  // checkpoint keeps the backbone's optimizer slices only (the BCE ablation
  // head is a scaffold and is discarded with its moments)
  ckpt.opt_state.t = opt.t;
  ckpt.opt_state.m.assign(opt.m.begin(), opt.m.begin() + backbone_param_count);
  ckpt.opt_state.v.assign(opt.v.begin(), opt.v.begin() + backbone_param_count);
  return ckpt;
}

inline ModelCheckpoint train_stage2(const ModelCheckpoint& stage1,
                                    const std::vector<Sample>& train,
                                    const std::vector<Sample>& val,
                                    const ClassifierHeadSpec& head_spec, const StageConfig& cfg,
                                    const std::string& log_path = "") {
  cfg.validate();
  if (cfg.stage != "classifier") throw std::runtime_error("train_stage2 requires stage=classifier");
  if (stage1.kind != "stage1") throw std::runtime_error("train_stage2 needs a stage-1 checkpoint");
  if (train.empty() || val.empty()) throw std::runtime_error("train_stage2: empty dataset");

  ModelCheckpoint ckpt;
  ckpt.kind = "stage2";
  ckpt.backbone_spec = stage1.backbone_spec;
  ckpt.backbone = stage1.backbone;
  ckpt.has_head = true;
  ckpt.head_spec = head_spec;
  ckpt.head = build_model<float>(head_spec.layers(stage1.backbone_spec.embedding_dim),
                                 {stage1.backbone_spec.embedding_dim}, cfg.seed);
  ckpt.optim_cfg = cfg.optimizer;
  ckpt.backbone_hash = ckpt.backbone.content_hash();

  auto params = ckpt.head.params();
  auto opt = OptimizerState<float>::init(params);
  ckpt.sched.factor = cfg.scheduler.factor;
  ckpt.sched.patience = cfg.scheduler.patience;
  ckpt.sched.current_lr = cfg.optimizer.lr;

  auto val_order = detail::fixed_eval_order(val.size(), cfg.seed);
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  auto eval_bce = [&](const std::vector<Sample>& samples,
                      const std::vector<std::size_t>& ord) {
    double total = 0.0;
    std::size_t counted = 0;
    for (std::size_t start = 0; start < ord.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t end = std::min(ord.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<const Image*> imgs;
      std::vector<int> labels;
      for (std::size_t k = start; k < end; ++k) {
        imgs.push_back(&samples[ord[k]].img);
        labels.push_back(samples[ord[k]].label);
      }
      Tensor<float> emb = ckpt.backbone.forward(detail::stack_batch(imgs), false);
      Tensor<float> logits = ckpt.head.forward(emb, false);
      auto res = bce_logits_loss(logits, labels);
      total += res.loss * static_cast<double>(imgs.size());
      counted += imgs.size();
    }
    return counted ? total / static_cast<double>(counted) : 0.0;
  };

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    const double lr = ckpt.sched.current_lr;
    Rng shuffle_rng(derive_seed(cfg.seed, "epoch-shuffle", static_cast<uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double total = 0.0;
    std::size_t counted = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size, ++batch_index) {
      std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<Image> augmented;
      std::vector<const Image*> imgs;
      std::vector<int> labels;
      for (std::size_t k = start; k < end; ++k) {
        const Sample& s = train[order[k]];
        Rng aug_rng(derive_seed(cfg.seed, "online-aug", s.id, static_cast<uint64_t>(epoch)));
        augmented.push_back(online_augment(s.img, cfg.online_aug, aug_rng));
        labels.push_back(s.label);
      }
      for (const auto& im : augmented) imgs.push_back(&im);

      // frozen backbone: eval mode, no backward
      Tensor<float> emb = ckpt.backbone.forward(detail::stack_batch(imgs), false);
      Rng model_rng(derive_seed(cfg.seed, "model-rng", static_cast<uint64_t>(epoch),
                                static_cast<uint64_t>(batch_index)));
      Tensor<float> logits = ckpt.head.forward(emb, true, &model_rng);
      auto res = bce_logits_loss(logits, labels);
      if (!std::isfinite(res.loss))
        throw std::runtime_error("stage2: non-finite loss at epoch " + std::to_string(epoch) +
                                 " batch " + std::to_string(batch_index));
      total += res.loss * static_cast<double>(imgs.size());
      counted += imgs.size();
      ckpt.head.backward(res.grad);
      adam_step(params, opt, cfg.optimizer, lr);
    }

    double train_loss = counted ? total / static_cast<double>(counted) : 0.0;
    double val_loss = eval_bce(val, val_order);
    auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
    TrainLogEntry te{epoch, "train", train_loss, lr, wall};
    TrainLogEntry ve{epoch, "val", val_loss, lr, 0};
    ckpt.log.push_back(te);
    ckpt.log.push_back(ve);
    detail::append_log_line(log_path, te);
    detail::append_log_line(log_path, ve);
    plateau_step(ckpt.sched, val_loss);
  }

  if (ckpt.backbone.content_hash() != ckpt.backbone_hash)
    throw std::runtime_error("stage2: backbone parameters changed during classifier training");
  ckpt.opt_state = std::move(opt);
  return ckpt;
}

struct PredRecord {
  std::string id;
  int label = 0;
  double prob = 0.0;  // probability of "real"
};

inline std::vector<PredRecord> evaluate(ModelCheckpoint& ckpt, const std::vector<Sample>& samples,
                                        int batch_size = 64) {
  if (!ckpt.has_head) throw std::runtime_error("evaluate: checkpoint has no classifier head");
  std::vector<PredRecord> out;
  out.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size();
       start += static_cast<std::size_t>(batch_size)) {
    std::size_t end = std::min(samples.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<const Image*> imgs;
    for (std::size_t k = start; k < end; ++k) imgs.push_back(&samples[k].img);
    Tensor<float> emb = ckpt.backbone.forward(detail::stack_batch(imgs), false);
    Tensor<float> logits = ckpt.head.forward(emb, false);
    for (std::size_t k = start; k < end; ++k) {
      double x = static_cast<double>(logits.data[k - start]);
      out.push_back({samples[k].id, samples[k].label, 1.0 / (1.0 + std::exp(-x))});
    }
  }
  return out;
}

// Embeddings of a sample set in eval mode (diagnostics / silhouette).
inline Tensor<float> compute_embeddings(Model<float>& backbone, const std::vector<Sample>& samples,
                                        int batch_size = 64) {
  std::size_t d = backbone.layers.back().out_shape[0];
  Tensor<float> out({samples.size(), d});
  for (std::size_t start = 0; start < samples.size();
       start += static_cast<std::size_t>(batch_size)) {
    std::size_t end = std::min(samples.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<const Image*> imgs;
    for (std::size_t k = start; k < end; ++k) imgs.push_back(&samples[k].img);
    Tensor<float> emb = backbone.forward(detail::stack_batch(imgs), false);
    std::copy(emb.data.begin(), emb.data.end(), out.data.begin() + start * d);
  }
  return out;
}

// ---- checkpoint serialization (JSON header line + NTF blobs) ----

namespace detail {

inline nlohmann::json sched_to_json(const SchedulerState& s) {
  nlohmann::json j;
  j["factor"] = s.factor;
  j["patience"] = s.patience;
  j["best_loss"] = std::isfinite(s.best_loss) ? nlohmann::json(s.best_loss)
                                              : nlohmann::json("inf");
  j["bad_count"] = s.bad_count;
  j["current_lr"] = s.current_lr;
  return j;
}

inline SchedulerState sched_from_json(const nlohmann::json& j) {
  SchedulerState s;
  s.factor = j.at("factor").get<double>();
  s.patience = j.at("patience").get<int>();
  if (j.at("best_loss").is_string())
    s.best_loss = std::numeric_limits<double>::infinity();
  else
    s.best_loss = j.at("best_loss").get<double>();
  s.bad_count = j.at("bad_count").get<int>();
  s.current_lr = j.at("current_lr").get<double>();
  return s;
}

inline nlohmann::json optim_to_json(const OptimConfig& c) {
  nlohmann::json j;
  j["algorithm"] = c.algorithm;
  j["lr"] = c.lr;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["eps"] = c.eps;
  j["weight_decay"] = c.weight_decay;
  return j;
}

inline OptimConfig optim_from_json(const nlohmann::json& j) {
  OptimConfig c;
  c.algorithm = j.at("algorithm").get<std::string>();
  c.lr = j.at("lr").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.eps = j.at("eps").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  return c;
}

inline std::string hash_hex(uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace detail

inline void save_checkpoint(ModelCheckpoint& ckpt, const std::string& path) {
  nlohmann::json header;
  header["format"] = "dfd-checkpoint";
  header["version"] = 1;
  header["kind"] = ckpt.kind;
  header["backbone"] = backbone_spec_to_json(ckpt.backbone_spec);
  if (ckpt.has_head) {
    header["head"] = {{"hidden", ckpt.head_spec.hidden}, {"dropout", ckpt.head_spec.dropout}};
    header["backbone_hash"] = detail::hash_hex(ckpt.backbone_hash);
  } else {
    header["head"] = nullptr;
  }
  header["optimizer"] = detail::optim_to_json(ckpt.optim_cfg);
  header["step"] = ckpt.opt_state.t;
  header["scheduler"] = detail::sched_to_json(ckpt.sched);
  nlohmann::json log = nlohmann::json::array();
  for (const auto& e : ckpt.log)
    log.push_back({{"epoch", e.epoch}, {"split", e.split}, {"loss", e.loss}, {"lr", e.lr}});
  header["log"] = log;

  std::vector<std::pair<std::string, Tensor<float>*>> tensors;
  for (auto& p : ckpt.backbone.params()) tensors.push_back({"backbone/" + p.name, p.value});
  for (auto& p : ckpt.backbone.state_tensors()) tensors.push_back({"backbone/" + p.name, p.value});
  if (ckpt.has_head) {
    for (auto& p : ckpt.head.params()) tensors.push_back({"head/" + p.name, p.value});
    for (auto& p : ckpt.head.state_tensors()) tensors.push_back({"head/" + p.name, p.value});
  }
  for (std::size_t i = 0; i < ckpt.opt_state.m.size(); ++i)
    tensors.push_back({"opt/m/" + std::to_string(i), &ckpt.opt_state.m[i]});
  for (std::size_t i = 0; i < ckpt.opt_state.v.size(); ++i)
    tensors.push_back({"opt/v/" + std::to_string(i), &ckpt.opt_state.v[i]});
  nlohmann::json names = nlohmann::json::array();
  for (auto& [name, t] : tensors) names.push_back(name);
  header["tensors"] = names;

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint: " + path);
  os << header.dump() << "\n";
  for (auto& [name, t] : tensors) ntf_write(os, *t);
  if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

inline ModelCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read checkpoint: " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("checkpoint truncated: " + path);
  nlohmann::json header = nlohmann::json::parse(line, nullptr, false);
  if (header.is_discarded() || header.value("format", "") != "dfd-checkpoint")
    throw std::runtime_error("not a dfd checkpoint: " + path);
  if (header.value("version", 0) != 1)
    throw std::runtime_error("unsupported checkpoint version in " + path);

  ModelCheckpoint ckpt;
  ckpt.kind = header.at("kind").get<std::string>();
  ckpt.backbone_spec = backbone_spec_from_json(header.at("backbone"));
  ckpt.backbone = build_backbone<float>(ckpt.backbone_spec, 0);
  ckpt.optim_cfg = detail::optim_from_json(header.at("optimizer"));
  ckpt.sched = detail::sched_from_json(header.at("scheduler"));
  for (const auto& e : header.at("log"))
    ckpt.log.push_back({e.at("epoch").get<int>(), e.at("split").get<std::string>(),
                        e.at("loss").get<double>(), e.at("lr").get<double>(), 0});
  if (!header.at("head").is_null()) {
    ckpt.has_head = true;
    ckpt.head_spec.hidden = header.at("head").at("hidden").get<std::size_t>();
    ckpt.head_spec.dropout = header.at("head").at("dropout").get<double>();
    ckpt.head = build_model<float>(ckpt.head_spec.layers(ckpt.backbone_spec.embedding_dim),
                                   {ckpt.backbone_spec.embedding_dim}, 0);
  }

  std::vector<std::pair<std::string, Tensor<float>*>> slots;
  for (auto& p : ckpt.backbone.params()) slots.push_back({"backbone/" + p.name, p.value});
  for (auto& p : ckpt.backbone.state_tensors()) slots.push_back({"backbone/" + p.name, p.value});
  if (ckpt.has_head) {
    for (auto& p : ckpt.head.params()) slots.push_back({"head/" + p.name, p.value});
    for (auto& p : ckpt.head.state_tensors()) slots.push_back({"head/" + p.name, p.value});
  }
  auto names = header.at("tensors").get<std::vector<std::string>>();
  std::size_t n_model_tensors = slots.size();
  std::size_t n_opt = 0;
  for (const auto& n : names)
    if (n.rfind("opt/m/", 0) == 0) ++n_opt;
  ckpt.opt_state.t = header.at("step").get<uint64_t>();
  ckpt.opt_state.m.resize(n_opt);
  ckpt.opt_state.v.resize(n_opt);
  for (std::size_t i = 0; i < n_opt; ++i) {
    slots.push_back({"opt/m/" + std::to_string(i), &ckpt.opt_state.m[i]});
    slots.push_back({"opt/v/" + std::to_string(i), &ckpt.opt_state.v[i]});
  }
  // header order: model tensors, then all m, then all v
  std::vector<std::pair<std::string, Tensor<float>*>> ordered(slots.begin(),
                                                              slots.begin() + n_model_tensors);
  for (std::size_t i = 0; i < n_opt; ++i) ordered.push_back(slots[n_model_tensors + 2 * i]);
  for (std::size_t i = 0; i < n_opt; ++i) ordered.push_back(slots[n_model_tensors + 2 * i + 1]);

  if (names.size() != ordered.size())
    throw std::runtime_error("checkpoint tensor list mismatch in " + path);
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    if (names[i] != ordered[i].first)
      throw std::runtime_error("checkpoint tensor order mismatch at '" + names[i] + "' in " +
                               path);
    Tensor<float> t = ntf_read(is);
    if (t.shape != ordered[i].second->shape)
      throw std::runtime_error("checkpoint tensor shape mismatch at '" + names[i] + "' in " +
                               path);
    *ordered[i].second = std::move(t);
  }

  if (ckpt.has_head) {
    uint64_t embedded = std::stoull(header.at("backbone_hash").get<std::string>(), nullptr, 16);
    ckpt.backbone_hash = embedded;
    if (ckpt.backbone.content_hash() != embedded)
      throw std::runtime_error("checkpoint backbone hash mismatch in " + path);
  }
  return ckpt;
}

}  // namespace dfd

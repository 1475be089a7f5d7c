#pragma once

// Orchestration shared by the CLI and the acceptance suite: each step reads
// and writes artifacts under the run's out_dir, so subcommands compose into
// the full recipe synth -> augment-offline -> partition -> train -> eval ->
// ensemble -> report.

#include <array>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dfd/config.hpp"
#include "dfd/embedding.hpp"
#include "dfd/ensemble.hpp"
#include "dfd/pipeline.hpp"
#include "dfd/report.hpp"
#include "dfd/sampling.hpp"
#include "dfd/synth.hpp"

namespace dfd {

struct RunLayout {
  std::filesystem::path root;
  explicit RunLayout(const std::string& out_dir) : root(out_dir) {}

  std::filesystem::path data_dir() const { return root / "data"; }
  std::filesystem::path manifest_path() const { return data_dir() / "manifest.jsonl"; }
  std::filesystem::path plan_path() const { return root / "partition" / "plan.json"; }
  std::filesystem::path ckpt_path(int stage, int model) const {
    return root / "train" /
           ("m" + std::to_string(model) + "_stage" + std::to_string(stage) + ".ckpt");
  }
  std::filesystem::path train_log_path(int stage, int model) const {
    return root / "train" /
           ("m" + std::to_string(model) + "_stage" + std::to_string(stage) + "_log.jsonl");
  }
  std::filesystem::path pred_path(int model, const std::string& split) const {
    return root / "eval" / ("m" + std::to_string(model) + "_" + split + ".csv");
  }
  std::filesystem::path decisions_path() const { return root / "ensemble" / "decisions.csv"; }
  std::filesystem::path metrics_path() const { return root / "ensemble" / "metrics.json"; }
  std::filesystem::path report_dir() const { return root / "report"; }
  std::filesystem::path ablation_dir() const { return root / "ablation"; }
  std::filesystem::path config_echo_path() const { return root / "config.resolved.json"; }

  void ensure(const std::filesystem::path& dir) const {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create directory: " + dir.string());
  }
};

inline void echo_config(const RunConfig& cfg) {
  RunLayout layout(cfg.out_dir);
  layout.ensure(layout.root);
  std::ofstream os(layout.config_echo_path(), std::ios::binary);
  if (!os) throw std::runtime_error("cannot write config echo");
  os << run_config_to_json(cfg).dump(2) << "\n";
}

inline std::vector<ManifestRecord> run_synth(const RunConfig& cfg) {
  set_num_threads(cfg.threads);
  RunLayout layout(cfg.out_dir);
  echo_config(cfg);
  return generate_dataset(cfg.data.counts, cfg.data.method_mix, cfg.seed,
                          layout.data_dir().string(), cfg.data.image_size);
}

inline std::vector<ManifestRecord> run_offline_aug(const RunConfig& cfg) {
  RunLayout layout(cfg.out_dir);
  auto manifest = read_manifest(layout.manifest_path().string());
  return offline_augment(manifest, cfg.augment.offline_fraction, cfg.seed,
                         layout.data_dir().string());
}

inline PartitionPlan run_partition(const RunConfig& cfg) {
  RunLayout layout(cfg.out_dir);
  auto manifest = read_manifest(layout.manifest_path().string());
  auto plan = partition_fakes(manifest, cfg.sampling.n_models, cfg.seed);
  layout.ensure(layout.plan_path().parent_path());
  save_partition_plan(plan, layout.plan_path().string());
  return plan;
}

namespace detail {

inline std::vector<Sample> load_val_samples(const RunLayout& layout,
                                            const std::vector<ManifestRecord>& manifest) {
  return load_samples(manifest, layout.data_dir().string(), "val");
}

inline StageConfig stage_config_for_model(const RunConfig& cfg, int stage, int model) {
  StageConfig scfg = stage == 1 ? cfg.stage1 : cfg.stage2;
  scfg.seed = derive_seed(cfg.seed, stage == 1 ? "stage1-model" : "stage2-model",
                          static_cast<uint64_t>(model));
  return scfg;
}

}  // namespace detail

inline ModelCheckpoint run_train(const RunConfig& cfg, int stage, int model) {
  set_num_threads(cfg.threads);
  RunLayout layout(cfg.out_dir);
  if (model < 0 || model >= cfg.sampling.n_models)
    throw std::runtime_error("train: model index out of range");
  auto manifest = read_manifest(layout.manifest_path().string());
  auto plan = load_partition_plan(layout.plan_path().string());
  auto view = build_model_trainset(manifest, plan, model);
  auto train = load_samples(view.records, layout.data_dir().string());
  auto val = detail::load_val_samples(layout, manifest);
  layout.ensure(layout.ckpt_path(stage, model).parent_path());
  std::filesystem::remove(layout.train_log_path(stage, model));
  StageConfig scfg = detail::stage_config_for_model(cfg, stage, model);
  ModelCheckpoint ckpt;
  if (stage == 1) {
    BackboneSpec bspec = backbone_preset(cfg.backbones[static_cast<std::size_t>(model)],
                                         static_cast<std::size_t>(cfg.data.image_size));
    ckpt = train_stage1(train, val, bspec, scfg, layout.train_log_path(1, model).string());
  } else if (stage == 2) {
    auto stage1 = load_checkpoint(layout.ckpt_path(1, model).string());
    ckpt = train_stage2(stage1, train, val, cfg.stage2.head, scfg,
                        layout.train_log_path(2, model).string());
  } else {
    throw std::runtime_error("train: stage must be 1 or 2");
  }
  save_checkpoint(ckpt, layout.ckpt_path(stage, model).string());
  return ckpt;
}

inline std::vector<PredRecord> run_eval(const RunConfig& cfg, int model,
                                        const std::string& split = "val") {
  set_num_threads(cfg.threads);
  RunLayout layout(cfg.out_dir);
  auto manifest = read_manifest(layout.manifest_path().string());
  auto ckpt = load_checkpoint(layout.ckpt_path(2, model).string());
  auto samples = load_samples(manifest, layout.data_dir().string(), split);
  auto preds = evaluate(ckpt, samples);
  layout.ensure(layout.pred_path(model, split).parent_path());
  write_predictions_csv(layout.pred_path(model, split).string(), preds);
  return preds;
}

struct EnsembleOutcome {
  std::vector<MetricsReport> per_model;
  MetricsReport ensemble;
};

inline nlohmann::json ensemble_outcome_to_json(const EnsembleOutcome& o) {
  nlohmann::json j;
  j["models"] = nlohmann::json::array();
  for (const auto& m : o.per_model) j["models"].push_back(metrics_to_json(m));
  j["ensemble"] = metrics_to_json(o.ensemble);
  return j;
}

// Combine three per-model prediction files into decisions + metrics. The
// ensemble AUC is computed on the rendered probability.
inline EnsembleOutcome run_ensemble(const RunConfig& cfg,
                                    const std::vector<std::string>& pred_files = {}) {
  RunLayout layout(cfg.out_dir);
  std::array<std::vector<PredRecord>, 3> preds;
  for (int i = 0; i < 3; ++i) {
    std::string path = pred_files.size() == 3 ? pred_files[static_cast<std::size_t>(i)]
                                              : layout.pred_path(i, "val").string();
    preds[static_cast<std::size_t>(i)] = read_predictions_csv(path);
  }
  auto rows = ensemble_decisions(preds);
  layout.ensure(layout.decisions_path().parent_path());
  write_decisions_csv(layout.decisions_path().string(), rows);
  EnsembleOutcome out;
  for (int i = 0; i < 3; ++i)
    out.per_model.push_back(
        binary_metrics(preds[static_cast<std::size_t>(i)], cfg.ensemble.threshold));
  out.ensemble = binary_metrics(rendered_records(rows), cfg.ensemble.threshold);
  std::ofstream os(layout.metrics_path(), std::ios::binary);
  os << ensemble_outcome_to_json(out).dump(2) << "\n";
  return out;
}

// The full three-model recipe end to end.
inline EnsembleOutcome run_full_recipe(const RunConfig& cfg) {
  run_synth(cfg);
  if (cfg.augment.offline_fraction > 0) run_offline_aug(cfg);
  run_partition(cfg);
  for (int i = 0; i < cfg.sampling.n_models; ++i) {
    run_train(cfg, 1, i);
    run_train(cfg, 2, i);
    run_eval(cfg, i, "val");
  }
  return run_ensemble(cfg);
}

// Single-model recipe used by the ablation harness (n_models == 1).
inline MetricsReport run_single_model_recipe(const RunConfig& cfg) {
  run_synth(cfg);
  if (cfg.augment.offline_fraction > 0) run_offline_aug(cfg);
  run_partition(cfg);
  run_train(cfg, 1, 0);
  run_train(cfg, 2, 0);
  auto preds = run_eval(cfg, 0, "val");
  return binary_metrics(preds, cfg.ensemble.threshold);
}

// ---- ablation harness ----

inline const std::vector<std::string>& ablation_config_names() {
  static const std::vector<std::string> names = {"no-offline-aug", "no-online-aug",
                                                 "bce-instead-supcon", "full"};
  return names;
}

inline RunConfig ablation_variant_config(const RunConfig& base, const std::string& variant,
                                         uint64_t seed) {
  RunConfig sub = base;
  sub.seed = seed;
  sub.sampling.n_models = 1;
  sub.backbones = {base.ablation.backbone};
  RunLayout layout(base.out_dir);
  sub.out_dir =
      (layout.ablation_dir() / "runs" / variant / ("seed-" + std::to_string(seed))).string();
  if (variant == "no-offline-aug") {
    sub.augment.offline_fraction = 0.0;
  } else if (variant == "no-online-aug") {
    sub.augment.online.p_aug = 0.0;
    sub.stage1.online_aug.p_aug = 0.0;
    sub.stage2.online_aug.p_aug = 0.0;
  } else if (variant == "bce-instead-supcon") {
    sub.stage1.stage1_loss = "bce";
  } else if (variant != "full") {
    throw std::runtime_error("unknown ablation config: " + variant);
  }
  return sub;
}

// Runs the 4 named configs over the configured seeds with the designated
// backbone and emits the report table (JSON + aligned text).
inline nlohmann::json run_ablation(const RunConfig& cfg) {
  RunLayout layout(cfg.out_dir);
  layout.ensure(layout.ablation_dir());
  nlohmann::json rows = nlohmann::json::array();
  std::vector<std::vector<std::string>> text_rows;
  for (const auto& variant : ablation_config_names()) {
    double sum_acc = 0, sum_f1 = 0, sum_prec = 0;
    nlohmann::json per_seed = nlohmann::json::array();
    for (uint64_t seed : cfg.ablation.seeds) {
      RunConfig sub = ablation_variant_config(cfg, variant, seed);
      MetricsReport m;
      try {
        m = run_single_model_recipe(sub);
      } catch (const std::exception& e) {
        throw std::runtime_error("ablation run failed (config=" + variant + ", seed=" +
                                 std::to_string(seed) + "): " + e.what());
      }
      per_seed.push_back({{"seed", seed},
                          {"Accuracy", m.accuracy},
                          {"F1 Score", m.f1},
                          {"Precision", m.precision}});
      sum_acc += m.accuracy;
      sum_f1 += m.f1;
      sum_prec += m.precision;
    }
    double n = static_cast<double>(cfg.ablation.seeds.size());
    rows.push_back({{"Configuration", variant},
                    {"Accuracy", sum_acc / n},
                    {"F1 Score", sum_f1 / n},
                    {"Precision", sum_prec / n},
                    {"per_seed", per_seed}});
    text_rows.push_back(
        {variant, fmt4(sum_acc / n), fmt4(sum_f1 / n), fmt4(sum_prec / n)});
  }
  nlohmann::json table;
  table["columns"] = {"Configuration", "Accuracy", "F1 Score", "Precision"};
  table["backbone"] = cfg.ablation.backbone;
  table["seeds"] = cfg.ablation.seeds;
  table["rows"] = rows;
  {
    std::ofstream os(layout.ablation_dir() / "table.json", std::ios::binary);
    os << table.dump(2) << "\n";
  }
  {
    std::ofstream os(layout.ablation_dir() / "table.txt", std::ios::binary);
    os << format_table({"Configuration", "Accuracy", "F1 Score", "Precision"}, text_rows);
  }
  return table;
}

// ---- report ----

struct BackboneDiagnostics {
  std::string name;
  double silhouette_before = 0.0;
  double silhouette_after = 0.0;
};

inline BackboneDiagnostics backbone_diagnostics(const RunConfig& cfg, int model,
                                                const std::vector<Sample>& val,
                                                bool write_artifacts) {
  RunLayout layout(cfg.out_dir);
  BackboneDiagnostics diag;
  diag.name = cfg.backbones[static_cast<std::size_t>(model)];
  BackboneSpec bspec =
      backbone_preset(diag.name, static_cast<std::size_t>(cfg.data.image_size));
  StageConfig scfg = detail::stage_config_for_model(cfg, 1, model);
  Model<float> initial = build_backbone<float>(bspec, scfg.seed);
  auto trained = load_checkpoint(layout.ckpt_path(1, model).string());

  std::vector<int> labels;
  std::vector<std::string> ids;
  for (const auto& s : val) {
    labels.push_back(s.label);
    ids.push_back(s.id);
  }
  Tensor<float> emb_before = compute_embeddings(initial, val);
  Tensor<float> emb_after = compute_embeddings(trained.backbone, val);
  diag.silhouette_before = silhouette_score(emb_before, labels);
  diag.silhouette_after = silhouette_score(emb_after, labels);

  if (write_artifacts) {
    layout.ensure(layout.report_dir());
    auto proj_before = pca_project(emb_before);
    auto proj_after = pca_project(emb_after);
    std::string stem = "m" + std::to_string(model);
    write_projection_csv((layout.report_dir() / (stem + "_before.csv")).string(), ids,
                         proj_before, labels);
    write_projection_csv((layout.report_dir() / (stem + "_after.csv")).string(), ids, proj_after,
                         labels);
    write_svg_scatter((layout.report_dir() / (stem + "_before.svg")).string(), proj_before,
                      labels, diag.name + " embeddings before training");
    write_svg_scatter((layout.report_dir() / (stem + "_after.svg")).string(), proj_after, labels,
                      diag.name + " embeddings after training");
  }
  return diag;
}

inline nlohmann::json run_report(const RunConfig& cfg) {
  set_num_threads(cfg.threads);
  RunLayout layout(cfg.out_dir);
  layout.ensure(layout.report_dir());
  auto manifest = read_manifest(layout.manifest_path().string());
  auto val = detail::load_val_samples(layout, manifest);

  nlohmann::json metrics;
  {
    std::ifstream is(layout.metrics_path());
    if (!is) throw std::runtime_error("report: missing " + layout.metrics_path().string() +
                                      " (run ensemble first)");
    is >> metrics;
  }

  nlohmann::json summary;
  summary["models"] = nlohmann::json::array();
  std::vector<std::vector<std::string>> metric_rows, sil_rows;
  for (int i = 0; i < cfg.sampling.n_models; ++i) {
    auto diag = backbone_diagnostics(cfg, i, val, true);
    const auto& mj = metrics.at("models").at(static_cast<std::size_t>(i));
    nlohmann::json entry;
    entry["name"] = diag.name;
    entry["metrics"] = mj;
    entry["silhouette_before"] = diag.silhouette_before;
    entry["silhouette_after"] = diag.silhouette_after;
    summary["models"].push_back(entry);
    metric_rows.push_back({diag.name, fmt4(mj.at("Accuracy").get<double>()),
                           fmt4(mj.at("F1 Score").get<double>()),
                           fmt4(mj.at("Precision").get<double>()),
                           fmt4(mj.at("Recall").get<double>()),
                           fmt4(mj.at("AUC").get<double>())});
    sil_rows.push_back(
        {diag.name, fmt4(diag.silhouette_before), fmt4(diag.silhouette_after)});
  }
  const auto& ej = metrics.at("ensemble");
  summary["ensemble"] = ej;
  metric_rows.push_back({"ensemble", fmt4(ej.at("Accuracy").get<double>()),
                         fmt4(ej.at("F1 Score").get<double>()),
                         fmt4(ej.at("Precision").get<double>()),
                         fmt4(ej.at("Recall").get<double>()), fmt4(ej.at("AUC").get<double>())});

  std::string text = format_table({"Model", "Accuracy", "F1 Score", "Precision", "Recall", "AUC"},
                                  metric_rows);
  text += "\n";
  text += format_table({"Backbone", "Silhouette (init)", "Silhouette (trained)"}, sil_rows);
  {
    std::ofstream os(layout.report_dir() / "summary.json", std::ios::binary);
    os << summary.dump(2) << "\n";
  }
  {
    std::ofstream os(layout.report_dir() / "summary.txt", std::ios::binary);
    os << text;
  }
  return summary;
}

}  // namespace dfd

// dfdkit: synthetic deepfake-detection training pipeline.
//
// Subcommands: synth, augment-offline, partition, train, eval, ensemble,
// ablate, report, selftest. Every artifact lands under --out; the resolved
// config is echoed beside the outputs.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dfd/config.hpp"
#include "dfd/runner.hpp"
#include "dfd/verify.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "JSON run configuration");
  cmd->add_option("--out", opts.out_dir, "output directory (overrides config)");
  cmd->add_option("--seed", opts.seed, "root seed (overrides config)")
      ->each([&](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--threads", opts.threads, "worker threads (overrides config)");
}

dfd::RunConfig resolve_config(const CommonOpts& opts) {
  dfd::RunConfig cfg = dfd::load_run_config(opts.config_path);
  if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
  if (opts.seed_set) cfg.seed = opts.seed;
  if (opts.threads > 0) cfg.threads = opts.threads;
  cfg.validate();
  return cfg;
}

int run_selftest() {
  std::printf("loss oracles:\n");
  bool ok = dfd::print_results(dfd::verify_losses(40));
  std::printf("gradient checks:\n");
  ok = dfd::print_results(dfd::verify_gradients(7, 16)) && ok;
  std::printf("ensemble rule:\n");
  ok = dfd::print_results(dfd::verify_ensemble_rule(20000)) && ok;
  std::printf("metric oracles:\n");
  ok = dfd::print_results(dfd::verify_metrics_oracles(200)) && ok;
  std::printf("sampling arithmetic:\n");
  ok = dfd::print_results(dfd::verify_sampling_arithmetic()) && ok;
  std::printf("%s\n", ok ? "selftest: all checks passed" : "selftest: FAILURES above");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic deepfake-detection training pipeline"};
  app.require_subcommand(1);

  CommonOpts opts;
  int stage = 1;
  int model = 0;
  std::string split = "val";
  std::vector<std::string> pred_files;

  auto* synth = app.add_subcommand("synth", "generate the synthetic image corpus");
  add_common(synth, opts);
  auto* aug = app.add_subcommand("augment-offline", "persist offline augmentations of real images");
  add_common(aug, opts);
  auto* part = app.add_subcommand("partition", "split original fakes across models");
  add_common(part, opts);
  auto* train = app.add_subcommand("train", "train one model stage");
  add_common(train, opts);
  train->add_option("--stage", stage, "1 = backbone (contrastive), 2 = classifier head")
      ->check(CLI::Range(1, 2));
  train->add_option("--model", model, "model index");
  auto* eval = app.add_subcommand("eval", "write per-sample probabilities for one model");
  add_common(eval, opts);
  eval->add_option("--model", model, "model index");
  eval->add_option("--split", split, "dataset split (train|val)");
  auto* ens = app.add_subcommand("ensemble", "majority-vote ensemble over three prediction files");
  add_common(ens, opts);
  ens->add_option("--pred", pred_files, "three prediction CSVs (default: eval outputs in --out)");
  auto* abl = app.add_subcommand("ablate", "run the 4-config ablation over the configured seeds");
  add_common(abl, opts);
  auto* rep = app.add_subcommand("report", "summary tables and embedding projections");
  add_common(rep, opts);
  app.add_subcommand("selftest", "run the oracle and gradient-check suites");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("selftest")) return run_selftest();

    dfd::RunConfig cfg = resolve_config(opts);
    if (app.got_subcommand(synth)) {
      auto records = dfd::run_synth(cfg);
      std::printf("synth: wrote %zu samples under %s\n", records.size(), cfg.out_dir.c_str());
    } else if (app.got_subcommand(aug)) {
      auto before = dfd::read_manifest(dfd::RunLayout(cfg.out_dir).manifest_path().string());
      auto after = dfd::run_offline_aug(cfg);
      std::printf("augment-offline: appended %zu records (%zu total)\n",
                  after.size() - before.size(), after.size());
    } else if (app.got_subcommand(part)) {
      auto plan = dfd::run_partition(cfg);
      std::printf("partition: %d models,", plan.n_models);
      for (const auto& s : plan.fake_subsets) std::printf(" %zu", s.size());
      std::printf(" original fakes (+%zu shared generated)\n", plan.generated_ids.size());
    } else if (app.got_subcommand(train)) {
      auto ckpt = dfd::run_train(cfg, stage, model);
      std::printf("train: stage %d model %d done, final val loss %.6f (lr %.3g)\n", stage, model,
                  ckpt.log.back().loss, ckpt.sched.current_lr);
    } else if (app.got_subcommand(eval)) {
      auto preds = dfd::run_eval(cfg, model, split);
      std::printf("eval: wrote %zu predictions for model %d (%s split)\n", preds.size(), model,
                  split.c_str());
    } else if (app.got_subcommand(ens)) {
      if (!pred_files.empty() && pred_files.size() != 3)
        throw std::runtime_error("ensemble: --pred must be given exactly three times");
      auto outcome = dfd::run_ensemble(cfg, pred_files);
      std::printf("ensemble: accuracy %.4f f1 %.4f auc %.4f\n", outcome.ensemble.accuracy,
                  outcome.ensemble.f1, outcome.ensemble.auc);
    } else if (app.got_subcommand(abl)) {
      auto table = dfd::run_ablation(cfg);
      for (const auto& row : table.at("rows"))
        std::printf("ablate: %-20s accuracy %.4f\n",
                    row.at("Configuration").get<std::string>().c_str(),
                    row.at("Accuracy").get<double>());
    } else if (app.got_subcommand(rep)) {
      dfd::run_report(cfg);
      std::printf("report: wrote %s\n",
                  (dfd::RunLayout(cfg.out_dir).report_dir() / "summary.txt").string().c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

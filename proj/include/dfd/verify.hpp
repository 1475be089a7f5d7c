#pragma once

// Self-contained verification suites: independent oracles (double-loop
// SupCon, naive BCE, exhaustive pairwise AUC) and gradient checks against
// central differences, all evaluated on the float64 instantiation. These
// back the CLI `selftest` subcommand and the acceptance suite.

#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "dfd/ensemble.hpp"
#include "dfd/gradcheck.hpp"
#include "dfd/losses.hpp"
#include "dfd/model.hpp"
#include "dfd/sampling.hpp"

namespace dfd {

struct CheckResult {
  std::string name;
  bool passed = true;
  std::string detail;
};

// ---- independent oracles (deliberately different computation routes) ----

inline double supcon_bruteforce(const Tensor<double>& z, const std::vector<int>& labels,
                                double tau) {
  const std::size_t n = z.shape[0], d = z.shape[1];
  auto dot = [&](std::size_t i, std::size_t j) {
    double acc = 0.0;
    for (std::size_t k = 0; k < d; ++k) acc += z.data[i * d + k] * z.data[j * d + k];
    return acc;
  };
  double total = 0.0;
  std::size_t anchors = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t npos = 0;
    for (std::size_t p = 0; p < n; ++p)
      if (p != i && labels[p] == labels[i]) ++npos;
    if (npos == 0) continue;
    ++anchors;
    double li = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      if (p == i || labels[p] != labels[i]) continue;
      double denom = 0.0;
      for (std::size_t a = 0; a < n; ++a)
        if (a != i) denom += std::exp(dot(i, a) / tau);
      li += -std::log(std::exp(dot(i, p) / tau) / denom);
    }
    total += li / static_cast<double>(npos);
  }
  return anchors ? total / static_cast<double>(anchors) : 0.0;
}

inline double bce_naive(const std::vector<double>& logits, const std::vector<int>& targets) {
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    double s = 1.0 / (1.0 + std::exp(-logits[i]));
    total += -(targets[i] * std::log(s) + (1 - targets[i]) * std::log(1.0 - s));
  }
  return total / static_cast<double>(logits.size());
}

inline double auc_pairwise(const std::vector<PredRecord>& records) {
  double num = 0.0;
  long long pairs = 0;
  for (const auto& p : records) {
    if (p.label != 1) continue;
    for (const auto& q : records) {
      if (q.label != 0) continue;
      ++pairs;
      if (p.prob > q.prob)
        num += 1.0;
      else if (p.prob == q.prob)
        num += 0.5;
    }
  }
  if (pairs == 0) throw std::runtime_error("auc oracle: need both classes");
  return num / static_cast<double>(pairs);
}

namespace verify_detail {

inline Tensor<double> random_unit_rows(std::size_t n, std::size_t d, Rng& rng) {
  Tensor<double> z({n, d});
  for (auto& v : z.data) v = rng.uniform(-1.0, 1.0);
  auto norm = l2_normalize_rows(z);
  return norm.normalized;
}

inline std::vector<int> random_labels(std::size_t n, Rng& rng) {
  std::vector<int> y(n);
  for (auto& v : y) v = static_cast<int>(rng.below(2));
  return y;
}

// quadratic read-out so downstream curvature exercises every backward path
struct QuadLoss {
  std::vector<double> w;
  explicit QuadLoss(std::size_t n, uint64_t seed) : w(n) {
    Rng rng(derive_seed(seed, "quad-loss"));
    for (auto& v : w) v = rng.uniform(-1.0, 1.0);
  }
  double value(const Tensor<double>& out) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < out.numel(); ++i)
      acc += w[i % w.size()] * out.data[i] + 0.5 * out.data[i] * out.data[i];
    return acc;
  }
  Tensor<double> grad(const Tensor<double>& out) const {
    Tensor<double> g(out.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) g.data[i] = w[i % w.size()] + out.data[i];
    return g;
  }
};

// inputs kept away from relu/maxpool kinks so central differences stay valid
inline Tensor<double> kink_safe_input(const std::vector<std::size_t>& shape, uint64_t seed) {
  Tensor<double> x(shape);
  Rng rng(derive_seed(seed, "layer-input"));
  for (std::size_t i = 0; i < x.numel(); ++i) {
    double v = rng.uniform(-1.0, 1.0);
    if (std::abs(v) < 0.05) v += v < 0 ? -0.05 : 0.05;
    x.data[i] = v;
  }
  return x;
}

inline Tensor<double> pool_safe_input(std::size_t n, std::size_t h, std::size_t w, std::size_t c,
                                      uint64_t seed) {
  // values inside each 2x2 window separated by >= 0.05
  Tensor<double> x({n, h, w, c});
  Rng rng(derive_seed(seed, "pool-input"));
  for (std::size_t ni = 0; ni < n; ++ni)
    for (std::size_t y = 0; y < h; y += 2)
      for (std::size_t xx = 0; xx < w; xx += 2)
        for (std::size_t ci = 0; ci < c; ++ci) {
          std::vector<double> vals = {0.1, 0.25, 0.4, 0.55};
          rng.shuffle(vals);
          x.data[((ni * h + y) * w + xx) * c + ci] = vals[0] + rng.uniform(-0.01, 0.01);
          x.data[((ni * h + y) * w + xx + 1) * c + ci] = vals[1] + rng.uniform(-0.01, 0.01);
          x.data[((ni * h + y + 1) * w + xx) * c + ci] = vals[2] + rng.uniform(-0.01, 0.01);
          x.data[((ni * h + y + 1) * w + xx + 1) * c + ci] = vals[3] + rng.uniform(-0.01, 0.01);
        }
  return x;
}

inline CheckResult check_layer_kind(LayerKind kind, uint64_t seed) {
  CheckResult res;
  res.name = std::string("gradcheck.layer.") + layer_kind_name(kind);
  LayerSpec spec;
  Tensor<double> x;
  switch (kind) {
    case LayerKind::dense:
      spec = LayerSpec::dense_(5, 4);
      x = kink_safe_input({3, 5}, seed);
      break;
    case LayerKind::conv3x3:
      spec = LayerSpec::conv3(3, 4);
      x = kink_safe_input({2, 6, 6, 3}, seed);
      break;
    case LayerKind::conv5x5:
      spec = LayerSpec::conv5(2, 3);
      x = kink_safe_input({2, 6, 6, 2}, seed);
      break;
    case LayerKind::batchnorm:
      spec = LayerSpec::batchnorm_(5);
      x = kink_safe_input({6, 5}, seed);
      break;
    case LayerKind::dropout:
      spec = LayerSpec::dropout_(0.35);
      x = kink_safe_input({3, 7}, seed);
      break;
    case LayerKind::relu:
      spec = LayerSpec::relu_();
      x = kink_safe_input({3, 7}, seed);
      break;
    case LayerKind::maxpool2:
      spec = LayerSpec::maxpool2_();
      x = pool_safe_input(2, 4, 4, 2, seed);
      break;
    case LayerKind::global_avg_pool:
      spec = LayerSpec::gap_();
      x = kink_safe_input({2, 4, 4, 3}, seed);
      break;
    case LayerKind::patchify:
      spec = LayerSpec::patchify_(2);
      x = kink_safe_input({2, 4, 4, 3}, seed);
      break;
  }
  std::vector<std::size_t> per_sample(x.shape.begin() + 1, x.shape.end());
  Model<double> model = build_model<double>({spec}, per_sample, derive_seed(seed, "layer-model"));
  std::size_t out_n = Tensor<double>::numel_of(model.layers[0].out_shape);
  QuadLoss ql(out_n, seed);

  // input-gradient check (covers the dX path; dropout mask fixed by re-seed)
  auto input_loss = [&](const Tensor<double>& in) {
    Rng rng(derive_seed(seed, "layer-drop"));
    Model<double> m = model;  // copy so caches don't leak across evals
    return ql.value(m.forward(in, true, &rng));
  };
  Rng rng0(derive_seed(seed, "layer-drop"));
  Tensor<double> out = model.forward(x, true, &rng0);
  Tensor<double> dx = model.backward(ql.grad(out));
  auto input_report = finite_diff_input_check(input_loss, x, dx, 1e-3, 1e-3, 64, seed);
  if (!input_report.passed) {
    res.passed = false;
    res.detail = "input grad: " + input_report.summary();
    return res;
  }

  // parameter-gradient check where parameters exist
  if (!model.params().empty()) {
    auto loss_fn = [&](Model<double>& m, bool want_grad) {
      Rng rng(derive_seed(seed, "layer-drop"));
      Tensor<double> o = m.forward(x, true, &rng);
      if (want_grad) m.backward(ql.grad(o));
      return ql.value(o);
    };
    auto report = finite_diff_check(model, loss_fn, 1e-3, 1e-3, 64, seed);
    if (!report.passed) {
      res.passed = false;
      res.detail = "param grad: " + report.summary();
      return res;
    }
    res.detail = report.summary();
  } else {
    res.detail = input_report.summary();
  }
  return res;
}

}  // namespace verify_detail

// Criterion-1 style suite: SupCon vs double-loop oracle, BCE vs naive form,
// plus input-gradient checks for both losses.
inline std::vector<CheckResult> verify_losses(std::size_t n_batches = 200, uint64_t seed = 2024) {
  std::vector<CheckResult> out;
  Rng rng(derive_seed(seed, "verify-losses"));
  const std::array<double, 3> taus{0.07, 0.5, 1.0};

  double worst_supcon = 0.0;
  bool supcon_ok = true;
  for (std::size_t b = 0; b < n_batches; ++b) {
    std::size_t n = 2 + rng.below(15);  // N <= 16
    std::size_t d = 2 + rng.below(7);   // d <= 8
    auto z = verify_detail::random_unit_rows(n, d, rng);
    auto y = verify_detail::random_labels(n, rng);
    double tau = taus[b % taus.size()];
    auto res = supcon_loss(z, y, {tau});
    double oracle = supcon_bruteforce(z, y, tau);
    double err = std::abs(res.loss - oracle);
    worst_supcon = std::max(worst_supcon, err);
    if (err > 1e-6) supcon_ok = false;
  }
  {
    std::ostringstream os;
    os << n_batches << " random batches, worst |impl - oracle| = " << worst_supcon;
    out.push_back({"supcon.vs-double-loop-oracle", supcon_ok, os.str()});
  }

  double worst_bce = 0.0;
  bool bce_ok = true;
  for (std::size_t b = 0; b < n_batches; ++b) {
    std::size_t n = 1 + rng.below(16);
    Tensor<double> logits({n});
    std::vector<double> raw(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      raw[i] = rng.uniform(-20.0, 20.0);
      logits.data[i] = raw[i];
      y[i] = static_cast<int>(rng.below(2));
    }
    auto res = bce_logits_loss(logits, y);
    double err = std::abs(res.loss - bce_naive(raw, y));
    worst_bce = std::max(worst_bce, err);
    if (err > 1e-6) bce_ok = false;
  }
  {
    std::ostringstream os;
    os << n_batches << " random batches (|logit| <= 20), worst gap = " << worst_bce;
    out.push_back({"bce.vs-naive-formula", bce_ok, os.str()});
  }

  // gradient of both losses vs central differences
  {
    bool ok = true;
    std::string detail;
    for (int rep = 0; rep < 5 && ok; ++rep) {
      std::size_t n = 4 + rng.below(13), d = 2 + rng.below(7);
      auto z = verify_detail::random_unit_rows(n, d, rng);
      auto y = verify_detail::random_labels(n, rng);
      bool has_pos = false;
      for (std::size_t i = 0; i < n && !has_pos; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
          if (y[i] == y[j]) {
            has_pos = true;
            break;
          }
      if (!has_pos) continue;
      auto res = supcon_loss(z, y, {0.5});
      auto loss_at = [&](const Tensor<double>& zz) { return supcon_loss(zz, y, {0.5}).loss; };
      auto rep_chk = finite_diff_input_check(loss_at, z, res.grad, 1e-4, 1e-3, 64,
                                             seed + static_cast<uint64_t>(rep));
      if (!rep_chk.passed) ok = false;
      detail = rep_chk.summary();
    }
    out.push_back({"supcon.grad-vs-central-diff", ok, detail});
  }
  {
    Tensor<double> logits({8});
    std::vector<int> y(8);
    for (std::size_t i = 0; i < 8; ++i) {
      logits.data[i] = rng.uniform(-5.0, 5.0);
      y[i] = static_cast<int>(rng.below(2));
    }
    auto res = bce_logits_loss(logits, y);
    auto loss_at = [&](const Tensor<double>& l) { return bce_logits_loss(l, y).loss; };
    auto chk = finite_diff_input_check(loss_at, logits, res.grad, 1e-4, 1e-3, 64, seed);
    out.push_back({"bce.grad-vs-central-diff", chk.passed, chk.summary()});
  }
  return out;
}

// Criterion-2 suite: every layer kind plus the three preset backbones
// composed with normalize + SupCon, at 1e-3 relative.
inline std::vector<CheckResult> verify_gradients(uint64_t seed = 7, std::size_t image_size = 32) {
  std::vector<CheckResult> out;
  for (LayerKind kind :
       {LayerKind::dense, LayerKind::conv3x3, LayerKind::conv5x5, LayerKind::batchnorm,
        LayerKind::dropout, LayerKind::relu, LayerKind::maxpool2, LayerKind::global_avg_pool,
        LayerKind::patchify})
    out.push_back(verify_detail::check_layer_kind(kind, seed));

  Rng rng(derive_seed(seed, "backbone-batch"));
  for (const auto& name : backbone_preset_names()) {
    BackboneSpec spec = backbone_preset(name, image_size);
    Model<double> model = build_backbone<double>(spec, derive_seed(seed, "backbone", name));
    Tensor<double> x({8, spec.input_h, spec.input_w, 3});
    for (auto& v : x.data) v = rng.uniform(0.0, 1.0);
    std::vector<int> labels = {1, 0, 1, 0, 1, 1, 0, 0};
    auto loss_fn = [&](Model<double>& m, bool want_grad) {
      Rng drop(derive_seed(seed, "backbone-drop", name));
      Tensor<double> emb = m.forward(x, true, &drop);
      auto norm = l2_normalize_rows(emb);
      auto res = supcon_loss(norm.normalized, labels, {0.07});
      if (want_grad) {
        auto demb = l2_normalize_rows_backward(norm.normalized, norm.norms, res.grad);
        m.backward(demb);
      }
      return res.loss;
    };
    auto report = finite_diff_check(model, loss_fn, 1e-3, 1e-3, 64, seed);
    out.push_back({"gradcheck.backbone." + name, report.passed, report.summary()});
  }
  return out;
}

// Criterion-3 suite: ensemble rule invariants on random triples + the three
// worked boundary examples.
inline std::vector<CheckResult> verify_ensemble_rule(std::size_t n_triples = 100000,
                                                     uint64_t seed = 11) {
  std::vector<CheckResult> out;
  Rng rng(derive_seed(seed, "ensemble-fuzz"));
  bool ok = true;
  std::string detail = "all invariants held";
  for (std::size_t t = 0; t < n_triples && ok; ++t) {
    std::array<double, 3> p;
    for (auto& v : p) v = rng.below(20) == 0 ? 0.5 : rng.next_f64();
    auto d = majority_vote_render(p);
    int real_votes = 0;
    for (double v : p)
      if (v > 0.5) ++real_votes;
    double mx = std::max({p[0], p[1], p[2]}), mn = std::min({p[0], p[1], p[2]});
    if (d.vote_real != (real_votes >= 2) || d.rendered != (d.vote_real ? mx : mn) ||
        (d.vote_real && !(d.rendered > 0.5)) || (!d.vote_real && !(d.rendered <= 0.5))) {
      ok = false;
      detail = "vote/render inconsistency";
      break;
    }
    // permutation invariance
    std::array<double, 3> q = {p[1], p[2], p[0]};
    std::array<double, 3> r = {p[2], p[0], p[1]};
    for (const auto& perm : {q, r}) {
      auto dp = majority_vote_render(perm);
      if (dp.vote_real != d.vote_real || dp.rendered != d.rendered) {
        ok = false;
        detail = "permutation variance";
      }
    }
    // monotonicity: raising one probability never flips real -> fake
    if (d.vote_real) {
      std::size_t i = rng.below(3);
      std::array<double, 3> up = p;
      up[i] = std::min(1.0, up[i] + rng.next_f64() * (1.0 - up[i]));
      if (!majority_vote_render(up).vote_real) {
        ok = false;
        detail = "monotonicity violated";
      }
    }
  }
  out.push_back({"ensemble.invariants-fuzz", ok, detail});

  auto a = majority_vote_render({0.9, 0.6, 0.4});
  auto b = majority_vote_render({0.3, 0.45, 0.7});
  auto c = majority_vote_render({0.5, 0.5, 0.9});
  bool examples_ok = a.vote_real && a.rendered == 0.9 && !b.vote_real && b.rendered == 0.3 &&
                     !c.vote_real && c.rendered == 0.5;
  out.push_back({"ensemble.worked-examples", examples_ok,
                 "(0.9,0.6,0.4)->real/0.9  (0.3,0.45,0.7)->fake/0.3  (0.5,0.5,0.9)->fake/0.5"});
  return out;
}

// Criterion-4 suite: AUC vs exhaustive pairwise oracle (ties included),
// metric identities, and the reference report-row schema parse.
inline std::vector<CheckResult> verify_metrics_oracles(std::size_t n_sets = 1000,
                                                       uint64_t seed = 13) {
  std::vector<CheckResult> out;
  Rng rng(derive_seed(seed, "metrics-fuzz"));
  bool auc_ok = true, ident_ok = true;
  for (std::size_t s = 0; s < n_sets && (auc_ok && ident_ok); ++s) {
    std::size_t n = 2 + rng.below(199);
    std::vector<PredRecord> records;
    bool quantize = rng.below(2) == 0;  // force score ties half the time
    for (std::size_t i = 0; i < n; ++i) {
      double p = quantize ? static_cast<double>(rng.below(11)) / 10.0 : rng.next_f64();
      records.push_back({"r" + std::to_string(i), static_cast<int>(rng.below(2)), p});
    }
    bool has_pos = false, has_neg = false;
    for (auto& r : records) (r.label ? has_pos : has_neg) = true;
    if (!has_pos) records[0].label = 1;
    if (!has_neg) records[records.size() - 1].label = 0;

    if (roc_auc(records) != auc_pairwise(records)) auc_ok = false;

    auto m = binary_metrics(records);
    long long n_ll = static_cast<long long>(records.size());
    if (m.tp + m.fp + m.tn + m.fn != n_ll) ident_ok = false;
    double acc = static_cast<double>(m.tp + m.tn) / static_cast<double>(n_ll);
    if (std::abs(m.accuracy - acc) > 1e-12) ident_ok = false;
    if (m.tp + m.fp > 0 &&
        std::abs(m.precision - static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp)) > 1e-12)
      ident_ok = false;
    if (m.tp + m.fn > 0 &&
        std::abs(m.recall - static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn)) > 1e-12)
      ident_ok = false;
    if (m.precision + m.recall > 0 &&
        std::abs(m.f1 - 2 * m.precision * m.recall / (m.precision + m.recall)) > 1e-12)
      ident_ok = false;
  }
  out.push_back({"auc.vs-exhaustive-pairwise", auc_ok,
                 std::to_string(n_sets) + " random record sets (N <= 200, with ties), exact match"});
  out.push_back({"metrics.confusion-identities", ident_ok, "identities held on all inputs"});

  // reference ensemble row parses into a valid report
  bool parse_ok = true;
  std::string parse_detail;
  try {
    nlohmann::json row = {{"Accuracy", 0.9583}, {"F1 Score", 0.9586}, {"Precision", 0.9604},
                          {"Recall", 0.9567},   {"AUC", 0.9807}};
    auto m = metrics_from_json(row);
    parse_ok = m.accuracy == 0.9583 && m.f1 == 0.9586 && m.precision == 0.9604 &&
               m.recall == 0.9567 && m.auc == 0.9807;
    parse_detail = "reference ensemble row parsed";
  } catch (const std::exception& e) {
    parse_ok = false;
    parse_detail = e.what();
  }
  out.push_back({"metrics.report-schema", parse_ok, parse_detail});
  return out;
}

// Criterion-5 suite: partition invariants at published-corpus scale.
inline std::vector<CheckResult> verify_sampling_arithmetic(uint64_t seed = 17) {
  std::vector<CheckResult> out;
  std::vector<ManifestRecord> manifest;
  manifest.reserve(295695);
  auto add = [&](const std::string& id, int label, const std::string& source) {
    manifest.push_back({id, "x.png", label, source, "train"});
  };
  for (int i = 0; i < 42690; ++i) add("r" + std::to_string(i), 1, "real-orig");
  for (int i = 0; i < 21335; ++i) add("a" + std::to_string(i), 1, "real-offline-aug");
  for (int i = 0; i < 219470; ++i)
    add("f" + std::to_string(i), 0, "fake-method-" + std::to_string(i % 4 + 1));
  for (int i = 0; i < 12200; ++i) add("g" + std::to_string(i), 0, "fake-generated");

  auto plan = partition_fakes(manifest, 3, seed);
  std::vector<std::size_t> sizes;
  for (const auto& s : plan.fake_subsets) sizes.push_back(s.size());
  std::sort(sizes.rbegin(), sizes.rend());
  bool sizes_ok = sizes == std::vector<std::size_t>{73157, 73157, 73156};
  out.push_back({"sampling.subset-sizes", sizes_ok,
                 "219,470 fakes over 3 models -> {" + std::to_string(sizes[0]) + ", " +
                     std::to_string(sizes[1]) + ", " + std::to_string(sizes[2]) + "}"});

  std::set<std::string> seen;
  bool disjoint = true;
  for (const auto& s : plan.fake_subsets)
    for (const auto& id : s)
      if (!seen.insert(id).second) disjoint = false;
  bool covering = seen.size() == 219470;
  out.push_back({"sampling.disjoint-and-covering", disjoint && covering,
                 "union size " + std::to_string(seen.size())});

  bool counts_ok = true;
  std::vector<std::size_t> fake_counts;
  for (int mi = 0; mi < 3; ++mi) {
    auto view = build_model_trainset(manifest, plan, mi);
    if (view.n_real != 64025) counts_ok = false;
    fake_counts.push_back(view.n_fake);
  }
  std::sort(fake_counts.rbegin(), fake_counts.rend());
  if (!(fake_counts == std::vector<std::size_t>{85357, 85357, 85356})) counts_ok = false;
  out.push_back({"sampling.trainset-counts", counts_ok,
                 "per-model 64,025 reals; fakes {" + std::to_string(fake_counts[0]) + ", " +
                     std::to_string(fake_counts[1]) + ", " + std::to_string(fake_counts[2]) + "}"});
  return out;
}

inline bool print_results(const std::vector<CheckResult>& results) {
  bool all = true;
  for (const auto& r : results) {
    std::printf("  [%s] %-36s %s\n", r.passed ? "pass" : "FAIL", r.name.c_str(),
                r.detail.c_str());
    all = all && r.passed;
  }
  return all;
}

}  // namespace dfd

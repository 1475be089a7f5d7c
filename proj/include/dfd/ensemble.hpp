#pragma once

// Majority vote with min/max probability rendering, confusion-based binary
// metrics, and rank-based (Mann-Whitney) AUC with half credit for ties.
// A probability of exactly 0.5 counts as a fake vote (real needs > 0.5).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "dfd/pipeline.hpp"

namespace dfd {

struct EnsembleDecision {
  std::array<double, 3> probs{};
  bool vote_real = false;
  double rendered = 0.0;
};

inline EnsembleDecision majority_vote_render(const std::array<double, 3>& probs) {
  for (double p : probs)
    if (!(p >= 0.0 && p <= 1.0))
      throw std::runtime_error("ensemble: probability outside [0,1]");
  EnsembleDecision d;
  d.probs = probs;
  int real_votes = 0;
  for (double p : probs)
    if (p > 0.5) ++real_votes;
  d.vote_real = real_votes >= 2;
  d.rendered = d.vote_real ? *std::max_element(probs.begin(), probs.end())
                           : *std::min_element(probs.begin(), probs.end());
  return d;
}

struct MetricsReport {
  double accuracy = 0.0, f1 = 0.0, precision = 0.0, recall = 0.0, auc = 0.0;
  long long tp = 0, fp = 0, tn = 0, fn = 0;
  double threshold = 0.5;
};

// Probability a random positive outranks a random negative; ties get half
// credit. Computed from midranks, which matches the exhaustive pairwise
// count exactly (both numerators are sums of halves).
inline double roc_auc(const std::vector<PredRecord>& records) {
  std::size_t n = records.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return records[a].prob < records[b].prob;
  });
  std::vector<double> rank(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && records[order[j + 1]].prob == records[order[i]].prob) ++j;
    double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }
  double rank_sum_pos = 0.0;
  long long n_pos = 0, n_neg = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (records[k].label == 1) {
      rank_sum_pos += rank[k];
      ++n_pos;
    } else {
      ++n_neg;
    }
  }
  if (n_pos == 0 || n_neg == 0)
    throw std::runtime_error("roc_auc: need at least one positive and one negative");
  double u = rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

inline MetricsReport binary_metrics(const std::vector<PredRecord>& records,
                                    double threshold = 0.5) {
  if (records.empty()) throw std::runtime_error("binary_metrics: empty record set");
  MetricsReport m;
  m.threshold = threshold;
  bool has_pos = false, has_neg = false;
  for (const auto& r : records) {
    bool pred_real = r.prob > threshold;
    if (r.label == 1) {
      has_pos = true;
      (pred_real ? m.tp : m.fn) += 1;
    } else {
      has_neg = true;
      (pred_real ? m.fp : m.tn) += 1;
    }
  }
  auto n = static_cast<double>(records.size());
  m.accuracy = static_cast<double>(m.tp + m.tn) / n;
  m.precision = (m.tp + m.fp) ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp) : 0.0;
  m.recall = (m.tp + m.fn) ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn) : 0.0;
  m.f1 = (m.precision + m.recall) > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  m.auc = (has_pos && has_neg) ? roc_auc(records) : 0.0;
  return m;
}

// JSON schema uses the report table's column names.
inline nlohmann::json metrics_to_json(const MetricsReport& m) {
  nlohmann::json j;
  j["Accuracy"] = m.accuracy;
  j["F1 Score"] = m.f1;
  j["Precision"] = m.precision;
  j["Recall"] = m.recall;
  j["AUC"] = m.auc;
  j["tp"] = m.tp;
  j["fp"] = m.fp;
  j["tn"] = m.tn;
  j["fn"] = m.fn;
  j["threshold"] = m.threshold;
  return j;
}

inline MetricsReport metrics_from_json(const nlohmann::json& j) {
  MetricsReport m;
  m.accuracy = j.at("Accuracy").get<double>();
  m.f1 = j.at("F1 Score").get<double>();
  m.precision = j.at("Precision").get<double>();
  m.recall = j.at("Recall").get<double>();
  m.auc = j.at("AUC").get<double>();
  m.tp = j.value("tp", 0);
  m.fp = j.value("fp", 0);
  m.tn = j.value("tn", 0);
  m.fn = j.value("fn", 0);
  m.threshold = j.value("threshold", 0.5);
  return m;
}

// ---- prediction / decision CSV files ----

namespace detail {
inline std::string fmt_prob(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", p);
  return buf;
}
}  // namespace detail

inline void write_predictions_csv(const std::string& path,
                                  const std::vector<PredRecord>& records) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write predictions: " + path);
  os << "id,prob,label\n";
  for (const auto& r : records)
    os << r.id << "," << detail::fmt_prob(r.prob) << "," << r.label << "\n";
}

inline std::vector<PredRecord> read_predictions_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read predictions: " + path);
  std::string line;
  if (!std::getline(is, line) || line.rfind("id,prob,label", 0) != 0)
    throw std::runtime_error("bad predictions header in " + path);
  std::vector<PredRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    PredRecord r;
    std::string tok;
    if (!std::getline(ss, r.id, ',') || !std::getline(ss, tok, ','))
      throw std::runtime_error("bad predictions row in " + path);
    r.prob = std::stod(tok);
    if (!std::getline(ss, tok, ',')) throw std::runtime_error("bad predictions row in " + path);
    r.label = std::stoi(tok);
    out.push_back(std::move(r));
  }
  return out;
}

struct EnsembleRow {
  std::string id;
  std::array<double, 3> probs{};
  bool vote_real = false;
  double rendered = 0.0;
  int label = 0;
};

// Joins three per-model prediction sets (must agree on ids/labels in order)
// into per-sample ensemble decisions.
inline std::vector<EnsembleRow> ensemble_decisions(
    const std::array<std::vector<PredRecord>, 3>& preds) {
  std::size_t n = preds[0].size();
  for (const auto& p : preds)
    if (p.size() != n) throw std::runtime_error("ensemble: prediction sets differ in size");
  std::vector<EnsembleRow> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int m = 1; m < 3; ++m) {
      if (preds[m][i].id != preds[0][i].id || preds[m][i].label != preds[0][i].label)
        throw std::runtime_error("ensemble: prediction sets disagree at row " +
                                 std::to_string(i));
    }
    EnsembleRow row;
    row.id = preds[0][i].id;
    row.label = preds[0][i].label;
    auto d = majority_vote_render({preds[0][i].prob, preds[1][i].prob, preds[2][i].prob});
    row.probs = d.probs;
    row.vote_real = d.vote_real;
    row.rendered = d.rendered;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_decisions_csv(const std::string& path, const std::vector<EnsembleRow>& rows) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write decisions: " + path);
  os << "id,prob_m1,prob_m2,prob_m3,vote,rendered,label\n";
  for (const auto& r : rows)
    os << r.id << "," << detail::fmt_prob(r.probs[0]) << "," << detail::fmt_prob(r.probs[1])
       << "," << detail::fmt_prob(r.probs[2]) << "," << (r.vote_real ? "real" : "fake") << ","
       << detail::fmt_prob(r.rendered) << "," << r.label << "\n";
}

inline std::vector<PredRecord> rendered_records(const std::vector<EnsembleRow>& rows) {
  std::vector<PredRecord> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back({r.id, r.label, r.rendered});
  return out;
}

}  // namespace dfd

#pragma once

// Central-difference gradient verification. Runs on the double instantiation
// of the model stack so the comparison isolates scheme error from float32
// rounding. The optional grad_transform hook lets verification tests inject
// a known fault and confirm the check catches it.

#include <cmath>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dfd/model.hpp"
#include "dfd/rng.hpp"

namespace dfd {

struct GradCheckEntry {
  std::string param;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_err = 0.0;
};

struct GradCheckReport {
  bool passed = true;
  double tolerance = 0.0;
  std::size_t coords_checked = 0;
  GradCheckEntry worst;
  std::vector<GradCheckEntry> failures;

  std::string summary() const {
    std::ostringstream os;
    os << (passed ? "pass" : "FAIL") << ": " << coords_checked << " coordinates, worst "
       << worst.param << "[" << worst.index << "] rel_err=" << worst.rel_err << " (analytic "
       << worst.analytic << ", central-diff " << worst.numeric << ", tol " << tolerance << ")";
    return os.str();
  }
};

// loss_fn(model, want_grad): evaluate the loss; when want_grad, also run the
// backward pass so every layer's parameter gradients are populated. The
// closure must be deterministic call-to-call (re-seed any rng it uses).
using ModelLossFn = std::function<double(Model<double>&, bool)>;

inline GradCheckReport finite_diff_check(
    Model<double>& model, const ModelLossFn& loss_fn, double tolerance = 1e-3, double h = 1e-3,
    std::size_t min_coords = 64, uint64_t seed = 1234,
    const std::function<void(std::vector<Tensor<double>>&)>& grad_transform = nullptr) {
  GradCheckReport report;
  report.tolerance = tolerance;

  auto params = model.params();
  if (params.empty()) throw std::runtime_error("finite_diff_check: model has no parameters");

  loss_fn(model, true);
  std::vector<Tensor<double>> analytic;
  analytic.reserve(params.size());
  for (auto& p : params) analytic.push_back(*p.grad);
  if (grad_transform) grad_transform(analytic);

  // sample coordinates: every parameter tensor is covered, total >= min_coords
  Rng rng(derive_seed(seed, "gradcheck-coords"));
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  std::size_t per = (min_coords + params.size() - 1) / params.size();
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    std::size_t n = params[pi].value->numel();
    std::size_t want = std::min(per, n);
    while (want > 0) {
      auto key = std::make_pair(pi, static_cast<std::size_t>(rng.below(n)));
      if (seen.insert(key).second) {
        coords.push_back(key);
        --want;
      }
    }
  }
  while (coords.size() < min_coords) {
    std::size_t pi = static_cast<std::size_t>(rng.below(params.size()));
    std::size_t n = params[pi].value->numel();
    auto key = std::make_pair(pi, static_cast<std::size_t>(rng.below(n)));
    if (seen.insert(key).second)
      coords.push_back(key);
    else if (seen.size() >= static_cast<std::size_t>(model.param_count()))
      break;  // tiny model: everything already sampled
  }

  for (auto [pi, idx] : coords) {
    double& theta = params[pi].value->data[idx];
    const double orig = theta;
    theta = orig + h;
    double lp = loss_fn(model, false);
    theta = orig - h;
    double lm = loss_fn(model, false);
    theta = orig;
    double cd = (lp - lm) / (2.0 * h);
    double an = analytic[pi].data[idx];
    double rel = std::abs(an - cd) / std::max(1.0, std::abs(cd));
    GradCheckEntry e{params[pi].name, idx, an, cd, rel};
    if (rel > report.worst.rel_err) report.worst = e;
    if (rel > tolerance) {
      report.passed = false;
      report.failures.push_back(e);
    }
    ++report.coords_checked;
  }
  return report;
}

// Same scheme for gradients with respect to an input tensor (used for the
// losses and for parameterless layer kinds).
inline GradCheckReport finite_diff_input_check(
    const std::function<double(const Tensor<double>&)>& loss_fn, Tensor<double> x,
    const Tensor<double>& analytic_grad, double tolerance = 1e-4, double h = 1e-3,
    std::size_t max_coords = 64, uint64_t seed = 99) {
  GradCheckReport report;
  report.tolerance = tolerance;
  Rng rng(derive_seed(seed, "gradcheck-input"));
  std::size_t n = x.numel();
  std::vector<std::size_t> idxs;
  if (n <= max_coords) {
    for (std::size_t i = 0; i < n; ++i) idxs.push_back(i);
  } else {
    std::set<std::size_t> seen;
    while (seen.size() < max_coords) seen.insert(static_cast<std::size_t>(rng.below(n)));
    idxs.assign(seen.begin(), seen.end());
  }
  for (std::size_t i : idxs) {
    const double orig = x.data[i];
    x.data[i] = orig + h;
    double lp = loss_fn(x);
    x.data[i] = orig - h;
    double lm = loss_fn(x);
    x.data[i] = orig;
    double cd = (lp - lm) / (2.0 * h);
    double an = analytic_grad.data[i];
    double rel = std::abs(an - cd) / std::max(1.0, std::abs(cd));
    GradCheckEntry e{"input", i, an, cd, rel};
    if (rel > report.worst.rel_err) report.worst = e;
    if (rel > tolerance) {
      report.passed = false;
      report.failures.push_back(e);
    }
    ++report.coords_checked;
  }
  return report;
}

}  // namespace dfd

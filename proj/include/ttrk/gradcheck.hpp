#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "ttrk/autodiff.hpp"
#include "ttrk/model.hpp"
#include "ttrk/rng.hpp"

namespace ttrk {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  int worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Central finite differences with h = 1e-5 * (1 + |theta|) against the
// analytic gradients accumulated by one backward pass. Large tensors are
// spot-checked on a deterministic sample of entries.
inline GradCheckReport gradient_check(
    ModelParams<double>& model,
    const std::function<double(ModelParams<double>&, bool)>& loss_fn,
    int max_entries_per_tensor = 64) {
  // loss_fn(model, with_grad): runs the forward pass; when with_grad, also
  // accumulates into model.grads (caller zeroes them).
  model.zero_grads();
  loss_fn(model, true);

  GradCheckReport report;
  Rng rng(12345);
  for (const auto& name : model.names) {
    auto& theta = model.tensors.at(name);
    const auto& grad = model.grads.at(name);
    std::vector<int> entries;
    const int n = static_cast<int>(theta.size());
    if (n <= max_entries_per_tensor) {
      for (int i = 0; i < n; ++i) entries.push_back(i);
    } else {
      for (int k = 0; k < max_entries_per_tensor; ++k)
        entries.push_back(rng.uniform_int(n));
    }
    for (int i : entries) {
      const double original = theta.data[i];
      const double h = 1e-5 * (1.0 + std::abs(original));
      theta.data[i] = original + h;
      const double plus = loss_fn(model, false);
      theta.data[i] = original - h;
      const double minus = loss_fn(model, false);
      theta.data[i] = original;
      const double numeric = (plus - minus) / (2.0 * h);
      const double analytic = grad.data[i];
      if (std::abs(analytic) < 1e-8 && std::abs(numeric) < 1e-8) continue;
      const double rel = std::abs(analytic - numeric) /
                         std::max(1e-6, std::abs(analytic) + std::abs(numeric));
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = name;
        report.worst_index = i;
        report.analytic = analytic;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace ttrk

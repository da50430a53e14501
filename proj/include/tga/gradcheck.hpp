#pragma once

#include <algorithm>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "tga/params.hpp"
#include "tga/rng.hpp"

namespace tga {

struct GradCheckReport {
  double max_rel_error = 0.0;
  int probes = 0;
  bool nondeterministic = false;
  /// Worst probe, for diagnostics.
  std::string worst_param;
  int worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;

  bool passed(double tol) const { return !nondeterministic && max_rel_error < tol; }
};

/// Compares analytic gradients against central finite differences at
/// n_probe randomly sampled parameter coordinates.
///
/// `loss` evaluates the model forward at the current parameters; `grad`
/// evaluates it once and accumulates d(loss)/d(theta) into ps.grads. Both
/// must be deterministic: the same parameters must give the same loss
/// bit-for-bit, which is verified before probing.
template <typename T>
GradCheckReport grad_check(const std::function<double()>& loss,
                           const std::function<double()>& grad, ParameterStore<T>& ps,
                           int n_probe, double eps, uint64_t probe_seed = 1234) {
  GradCheckReport rep;

  const double l0 = loss();
  const double l1 = loss();
  if (std::memcmp(&l0, &l1, sizeof(double)) != 0) {
    rep.nondeterministic = true;
    return rep;
  }

  ps.zero_grads();
  grad();

  // Snapshot analytic gradients; probing mutates parameters in place.
  std::vector<Mat<T>> analytic;
  analytic.reserve(ps.count());
  for (int i = 0; i < ps.count(); ++i) analytic.push_back(ps.grad(i));

  const int64_t total = ps.total_params();
  Rng rng(probe_seed);
  for (int p = 0; p < n_probe; ++p) {
    int64_t flat = static_cast<int64_t>(rng.uniform_index(static_cast<uint64_t>(total)));
    int pid = 0;
    while (flat >= static_cast<int64_t>(ps.value(pid).size())) {
      flat -= static_cast<int64_t>(ps.value(pid).size());
      ++pid;
    }
    T& coord = ps.value(pid).a[static_cast<size_t>(flat)];
    const T saved = coord;
    coord = saved + static_cast<T>(eps);
    const double lp = loss();
    coord = saved - static_cast<T>(eps);
    const double lm = loss();
    coord = saved;

    const double numeric = (lp - lm) / (2.0 * eps);
    const double an = static_cast<double>(analytic[pid].a[static_cast<size_t>(flat)]);
    const double denom = std::max({std::abs(an), std::abs(numeric), 1e-8});
    const double rel = std::abs(an - numeric) / denom;
    if (rel > rep.max_rel_error) {
      rep.max_rel_error = rel;
      rep.worst_param = ps.name(pid);
      rep.worst_index = static_cast<int>(flat);
      rep.worst_analytic = an;
      rep.worst_numeric = numeric;
    }
    ++rep.probes;
  }
  return rep;
}

}  // namespace tga

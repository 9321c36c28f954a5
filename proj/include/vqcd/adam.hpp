#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vqcd/param_store.hpp"

namespace vqcd {

template <class Real>
struct AdamState {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t t = 0;
  std::map<std::string, std::vector<Real>> m;
  std::map<std::string, std::vector<Real>> v;

  /// Zero the moments of selected rows of a 2-D parameter (used when a
  /// codebook entry is re-seeded).
  void reset_rows(const std::string& name, std::size_t row, std::size_t width) {
    for (auto* mom : {&m, &v}) {
      auto it = mom->find(name);
      if (it == mom->end()) continue;
      for (std::size_t c = 0; c < width; ++c) it->second[row * width + c] = Real(0);
    }
  }
};

/// Bias-corrected Adam update on every trainable tensor; clears grads after.
template <class Real>
void adam_step(ParameterStore<Real>& store, AdamState<Real>& st) {
  for (auto& [name, e] : store)
    if (e.trainable && !e.tensor.has_grad())
      throw InvariantError("adam_step: trainable parameter " + name + " has no gradient");
  ++st.t;
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));
  for (auto& [name, e] : store) {
    if (!e.trainable) continue;
    auto& p = e.tensor;
    auto& m = st.m[name];
    auto& v = st.v[name];
    if (m.size() != p.size()) m.assign(p.size(), Real(0));
    if (v.size() != p.size()) v.assign(p.size(), Real(0));
    // Folded bias correction: lr·√c2/c1 · m / (√v + eps·√c2).
    const Real b1 = static_cast<Real>(st.beta1), b2 = static_cast<Real>(st.beta2);
    const Real lr_t = static_cast<Real>(st.lr * std::sqrt(c2) / c1);
    const Real eps_t = static_cast<Real>(st.eps * std::sqrt(c2));
    Real* pd = p.data.data();
    const Real* gd = p.grad.data();
    Real* md = m.data();
    Real* vd = v.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const Real g = gd[i];
      md[i] = b1 * md[i] + (Real(1) - b1) * g;
      vd[i] = b2 * vd[i] + (Real(1) - b2) * g * g;
      pd[i] -= lr_t * md[i] / (std::sqrt(vd[i]) + eps_t);
    }
    p.grad.clear();
  }
}

}  // namespace vqcd

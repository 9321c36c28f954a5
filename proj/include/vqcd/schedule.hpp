#pragma once

// Diffusion noise schedule and the per-step forward / reverse maps.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vqcd/error.hpp"

namespace vqcd {

/// Arrays are indexed by diffusion step k = 0..K; index 0 is the clean end
/// (α₀ = ᾱ₀ = 1, β₀ = Σ⁰ = 0) so that ᾱ_{k−1} is always addressable.
struct NoiseSchedule {
  int K = 0;
  std::vector<double> alpha, beta, alpha_bar, posterior_var;

  void check_step(int k, const char* op) const {
    if (k < 1 || k > K)
      throw ConfigError(std::string(op) + ": diffusion step " + std::to_string(k) + " outside [1, " +
                        std::to_string(K) + "]");
  }
};

/// Cosine ᾱ with offset s = 0.008; β is clamped to 0.999 and ᾱ is then
/// recomputed as the running product so the product identity holds exactly.
inline NoiseSchedule make_schedule(int K, double s = 0.008, double beta_max = 0.999) {
  if (K < 1) throw ConfigError("make_schedule: K must be >= 1, got " + std::to_string(K));
  auto f = [&](double t) {
    const double c = std::cos((t / K + s) / (1.0 + s) * std::numbers::pi / 2.0);
    return c * c;
  };
  NoiseSchedule sc;
  sc.K = K;
  sc.alpha.assign(K + 1, 1.0);
  sc.beta.assign(K + 1, 0.0);
  sc.alpha_bar.assign(K + 1, 1.0);
  sc.posterior_var.assign(K + 1, 0.0);
  for (int k = 1; k <= K; ++k) {
    const double b = 1.0 - f(k) / f(k - 1);
    sc.beta[k] = std::clamp(b, 1e-8, beta_max);
    sc.alpha[k] = 1.0 - sc.beta[k];
    sc.alpha_bar[k] = sc.alpha_bar[k - 1] * sc.alpha[k];
    sc.posterior_var[k] = (1.0 - sc.alpha_bar[k - 1]) / (1.0 - sc.alpha_bar[k]) * sc.beta[k];
  }
  return sc;
}

/// τᵏ = √ᾱ_k τ⁰ + √(1−ᾱ_k) ε
template <class Real>
std::vector<Real> forward_diffuse(std::span<const Real> x0, int k, std::span<const Real> eps,
                                  const NoiseSchedule& sc) {
  sc.check_step(k, "forward_diffuse");
  if (x0.size() != eps.size()) throw DimensionError("forward_diffuse: noise size differs from sample");
  const double a = std::sqrt(sc.alpha_bar[k]), b = std::sqrt(1.0 - sc.alpha_bar[k]);
  std::vector<Real> out(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) out[i] = static_cast<Real>(a * x0[i] + b * eps[i]);
  return out;
}

/// Ancestral step: μ = (τᵏ − β_k/√(1−ᾱ_k) ε̃)/√α_k, plus √Σᵏ z for k > 1.
template <class Real, class Rng>
std::vector<Real> ddpm_step(std::span<const Real> xk, int k, std::span<const Real> eps_hat,
                            const NoiseSchedule& sc, Rng& rng) {
  sc.check_step(k, "ddpm_step");
  if (xk.size() != eps_hat.size()) throw DimensionError("ddpm_step: noise size differs from sample");
  const double coef = sc.beta[k] / std::sqrt(1.0 - sc.alpha_bar[k]);
  const double inv = 1.0 / std::sqrt(sc.alpha[k]);
  const double sd = std::sqrt(sc.posterior_var[k]);
  std::normal_distribution<double> n01;
  std::vector<Real> out(xk.size());
  for (std::size_t i = 0; i < xk.size(); ++i) {
    double mu = inv * (xk[i] - coef * eps_hat[i]);
    if (k > 1) mu += sd * n01(rng);
    out[i] = static_cast<Real>(mu);
  }
  return out;
}

/// Steps visited by strided DDIM: K, K − stride, ... while ≥ 1.
inline std::vector<int> ddim_steps(int K, int stride) {
  if (stride <= 0 || stride > K)
    throw ConfigError("stride " + std::to_string(stride) + " must lie in [1, K=" + std::to_string(K) + "]");
  std::vector<int> ks;
  for (int k = K; k >= 1; k -= stride) ks.push_back(k);
  return ks;
}

/// Deterministic (η = 0) DDIM update from step k to k_prev (0 = clean). The
/// clean estimate is clamped to [−clip, clip] when clip > 0.
template <class Real>
std::vector<Real> ddim_step(std::span<const Real> xk, int k, int k_prev, std::span<const Real> eps_hat,
                            const NoiseSchedule& sc, double clip = 1.0) {
  sc.check_step(k, "ddim_step");
  if (k_prev < 0 || k_prev >= k) throw ConfigError("ddim_step: previous step must lie in [0, k)");
  const double ab = sc.alpha_bar[k], ap = sc.alpha_bar[k_prev];
  std::vector<Real> out(xk.size());
  for (std::size_t i = 0; i < xk.size(); ++i) {
    double x0 = (xk[i] - std::sqrt(1.0 - ab) * eps_hat[i]) / std::sqrt(ab);
    if (clip > 0) x0 = std::clamp(x0, -clip, clip);
    // re-derive the noise consistent with the clamped clean estimate
    const double e = (xk[i] - std::sqrt(ab) * x0) / std::sqrt(1.0 - ab);
    out[i] = static_cast<Real>(std::sqrt(ap) * x0 + std::sqrt(1.0 - ap) * e);
  }
  return out;
}

}  // namespace vqcd

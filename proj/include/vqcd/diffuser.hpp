#pragma once

// Return-conditioned diffusion over aligned feature sequences, with
// per-task masked parameters, classifier-free guidance, strided DDIM
// sampling, state inpainting, and an inverse-dynamics action model.
//
// Sequence layout is [batch × channels × horizon] throughout: channel c of
// timestep t of sequence b lives at (b·C + c)·T + t. Channels are the
// aligned state feature followed (joint mode) by the aligned action feature,
// each entry in [−1, 1].

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vqcd/adam.hpp"
#include "vqcd/align.hpp"
#include "vqcd/dataset.hpp"
#include "vqcd/schedule.hpp"
#include "vqcd/unet.hpp"
#include "vqcd/vq.hpp"

namespace vqcd {

enum class DecodeMode { joint, idm };

inline std::string to_string(DecodeMode m) { return m == DecodeMode::joint ? "joint" : "idm"; }
inline DecodeMode parse_mode(const std::string& s) {
  if (s == "joint") return DecodeMode::joint;
  if (s == "idm") return DecodeMode::idm;
  throw ConfigError("mode must be joint or idm, got '" + s + "'");
}

struct DiffusionConfig {
  int K = 200;
  int stride = 20;
  double omega = 1.2;
  double target_return = 0.95;
  double cond_dropout = 0.25;
  double clip = 1.0;
  double lr = 3e-4;
  std::size_t batch = 32;
  std::size_t horizon = 8;

  void validate() const {
    if (K < 1) throw ConfigError("diffusion.K must be >= 1");
    if (stride < 1 || stride > K)
      throw ConfigError("diffusion.stride (" + std::to_string(stride) + ") must lie in [1, diffusion.K (" +
                        std::to_string(K) + ")]");
    if (omega < 0) throw ConfigError("diffusion.omega must be >= 0");
    if (cond_dropout < 0 || cond_dropout > 1) throw ConfigError("diffusion.cond_dropout must lie in [0, 1]");
    if (target_return < 0 || target_return > 1) throw ConfigError("diffusion.target_return must lie in [0, 1]");
    if (batch == 0 || horizon == 0) throw ConfigError("diffusion.batch and horizon must be >= 1");
  }
};

/// Training windows of one task: sequences plus their normalized return condition.
struct SequenceData {
  int task_id = 0;
  std::size_t channels = 0, horizon = 0;
  std::size_t observed = 0;  // leading channels known at timestep 0 when planning
  std::vector<real> seqs;  // n × channels × horizon
  std::vector<real> cond;  // n, in [0, 1]

  std::size_t size() const { return cond.size(); }
};

/// Normalized discounted return of a window, clamped to [0, 1].
inline double normalize_return(double r, const WindowStats& w) {
  const double span = w.return_max - w.return_min;
  if (!(span > 0)) return 0.5;
  return std::clamp((r - w.return_min) / span, 0.0, 1.0);
}

/// Maps every transition of the dataset into feature space and cuts it into
/// overlapping windows of length `horizon`.
inline SequenceData build_sequences(const Dataset& ds, const FeatureMap& fm, std::size_t horizon, DecodeMode mode) {
  if (fm.task_id() != ds.task.id)
    throw PipelineError("swa", "feature map of task " + std::to_string(fm.task_id()) + " used on dataset of task " +
                                   std::to_string(ds.task.id));
  const std::size_t ws = fm.state_width(), wa = fm.action_width();
  SequenceData out;
  out.task_id = ds.task.id;
  out.channels = ws + (mode == DecodeMode::joint ? wa : 0);
  out.horizon = horizon;
  out.observed = ws;
  for (const auto& ep : ds.episodes) {
    if (ep.length() < horizon) continue;
    const auto zs = fm.encode_states(ep.states);
    const auto za = fm.encode_actions(ep.actions);
    for (std::size_t t = 0; t + horizon <= ep.length(); ++t) {
      const std::size_t base = out.seqs.size();
      out.seqs.resize(base + out.channels * horizon);
      for (std::size_t u = 0; u < horizon; ++u) {
        for (std::size_t c = 0; c < ws; ++c) out.seqs[base + c * horizon + u] = zs[(t + u) * ws + c];
        if (mode == DecodeMode::joint)
          for (std::size_t c = 0; c < wa; ++c) out.seqs[base + (ws + c) * horizon + u] = za[(t + u) * wa + c];
      }
      const double r = discounted_return(ep, t, horizon, ds.window.gamma);
      out.cond.push_back(static_cast<real>(normalize_return(r, ds.window)));
    }
  }
  if (out.cond.empty()) throw ConfigError("dataset of task " + std::to_string(ds.task.id) + " has no full windows");
  return out;
}

/// ε̃ = (1 − ω)·ε(∅) + ω·ε(C), the guidance combination written so that
/// ω = 0 and ω = 1 reproduce the respective pass exactly.
inline std::vector<real> combine_guidance(const std::vector<real>& eps_null, const std::vector<real>& eps_cond,
                                          double omega) {
  if (eps_null.size() != eps_cond.size()) throw DimensionError("guidance: pass outputs differ in size");
  std::vector<real> out(eps_null.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<real>((1.0 - omega) * eps_null[i] + omega * eps_cond[i]);
  return out;
}

struct TrainLog {
  std::vector<std::size_t> steps;
  std::vector<double> loss;  // mean loss over each logging window
};

struct SampleStats {
  std::size_t rounds = 0;  // denoising rounds
  std::size_t passes = 0;  // network evaluations (two per round under guidance)
};

/// Shared noise predictor ε_θ with f_time and f_return. Tasks are registered
/// with their masks; with masking disabled every task sees all weights
/// (the naive-finetune baseline).
class Diffuser {
 public:
  Diffuser(const UnetConfig& ucfg, const DiffusionConfig& dcfg, std::uint64_t seed, bool masked = true)
      : ucfg_(ucfg), dcfg_(dcfg), masked_(masked) {
    dcfg.validate();
    ucfg.validate();
    if (ucfg.horizon != dcfg.horizon) throw ConfigError("unet.horizon must equal diffusion.horizon");
    unet_ = TemporalUnet<real>(store_, ucfg, seed);
    schedule_ = make_schedule(dcfg.K);
  }

  ParameterStore<real>& params() { return store_; }
  const ParameterStore<real>& params() const { return store_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  const DiffusionConfig& config() const { return dcfg_; }
  DiffusionConfig& config() { return dcfg_; }
  const UnetConfig& unet_config() const { return ucfg_; }
  bool masked() const { return masked_; }
  std::size_t channels() const { return ucfg_.features; }
  std::size_t horizon() const { return ucfg_.horizon; }

  void register_task(int task, MaskBits mask) {
    if (masked_)
      for (const auto& name : store_.names()) {
        auto it = mask.find(name);
        if (it == mask.end()) throw InvariantError("mask for task " + std::to_string(task) + " lacks " + name);
        if (it->second.size() != store_.at(name).size())
          throw InvariantError("mask/parameter shape mismatch for " + name);
      }
    masks_[task] = std::move(mask);
  }
  bool has_task(int task) const { return masks_.count(task) != 0; }
  const MaskBits& mask(int task) const {
    auto it = masks_.find(task);
    if (it == masks_.end()) throw PipelineError("swa", "task " + std::to_string(task) + " has no registered mask");
    return it->second;
  }

  /// ε̂ for x [n × C × T] under task's mask (graph-level: differentiable).
  Var predict_noise(Graph<real>& g, Var x, const std::vector<double>& steps, const std::vector<real>& cond,
                    const std::vector<std::uint8_t>& keep, int task) {
    const MaskBits& m = mask(task);
    Binder<real> p(g, store_, masked_ ? &m : nullptr);
    return unet_(p, x, steps, cond, keep);
  }

  /// Inference-only ε̂ values.
  std::vector<real> predict_noise(const std::vector<real>& x, const std::vector<double>& steps,
                                  const std::vector<real>& cond, const std::vector<std::uint8_t>& keep, int task) {
    Graph<real> g(false);
    Var xv = g.input({steps.size(), channels(), horizon()}, x);
    return g.value(predict_noise(g, xv, steps, cond, keep, task));
  }

  /// Simplified ε-matching loss on a batch of clean sequences: k uniform on
  /// 1..K, ε ~ N(0, I), condition dropped with the configured probability.
  /// The first `observed` channels at timestep 0 are given clean, as the
  /// sampler inpaints them, and left out of the loss.
  template <class Rng>
  Var diffusion_loss(Graph<real>& g, const std::vector<real>& x0, const std::vector<real>& cond, int task,
                     Rng& rng, std::size_t observed = 0) {
    const std::size_t n = cond.size(), per = channels() * horizon();
    if (x0.size() != n * per) throw DimensionError("diffusion_loss: batch shape mismatch");
    if (observed > channels()) throw DimensionError("diffusion_loss: more observed channels than channels");
    std::uniform_int_distribution<int> pick_k(1, dcfg_.K);
    std::bernoulli_distribution drop(dcfg_.cond_dropout);
    std::normal_distribution<double> n01;
    std::vector<double> steps(n);
    std::vector<std::uint8_t> keep(n);
    std::vector<real> eps(x0.size()), xk(x0.size());
    for (std::size_t b = 0; b < n; ++b) {
      const int k = pick_k(rng);
      steps[b] = k;
      keep[b] = !drop(rng);
      const double a = std::sqrt(schedule_.alpha_bar[k]), s = std::sqrt(1.0 - schedule_.alpha_bar[k]);
      for (std::size_t i = 0; i < per; ++i) {
        eps[b * per + i] = static_cast<real>(n01(rng));
        xk[b * per + i] = static_cast<real>(a * x0[b * per + i] + s * eps[b * per + i]);
      }
    }
    if (observed == 0) {
      Var xv = g.input({n, channels(), horizon()}, std::move(xk));
      Var pred = predict_noise(g, xv, steps, cond, keep, task);
      return g.mse(pred, g.input(g.shape(pred), std::move(eps)));
    }
    std::vector<real> weight(x0.size(), real(1));
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < observed; ++c) {
        const std::size_t q = b * per + c * horizon();
        xk[q] = x0[q];
        eps[q] = 0;
        weight[q] = 0;
      }
    const double scored = static_cast<double>(x0.size() - n * observed);
    Var xv = g.input({n, channels(), horizon()}, std::move(xk));
    Var pred = g.mul_const(predict_noise(g, xv, steps, cond, keep, task), std::move(weight));
    return g.scale(g.mse(pred, g.input(g.shape(pred), std::move(eps))),
                   static_cast<real>(static_cast<double>(x0.size()) / scored));
  }

  /// Ω Adam steps on one task's windows with a fresh optimizer state. Only
  /// weights owned by the task's mask receive gradient, and their moments
  /// start at zero, so all other weights are left bit-identical.
  TrainLog train_task(const SequenceData& data, std::size_t steps, std::uint64_t seed,
                      std::size_t log_every = 500,
                      const std::function<void(std::size_t, double)>& progress = {}) {
    if (!has_task(data.task_id)) throw PipelineError("swa", "task " + std::to_string(data.task_id) + " has no mask");
    if (data.channels != channels() || data.horizon != horizon())
      throw DimensionError("sequence data [" + std::to_string(data.channels) + "x" + std::to_string(data.horizon) +
                           "] does not match the diffuser");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
    AdamState<real> adam;
    adam.lr = dcfg_.lr;
    const std::size_t per = channels() * horizon(), B = dcfg_.batch;
    TrainLog log;
    double acc = 0;
    std::size_t acc_n = 0;
    std::vector<real> x0(B * per), cond(B);
    for (std::size_t step = 1; step <= steps; ++step) {
      for (std::size_t b = 0; b < B; ++b) {
        const std::size_t j = pick(rng);
        std::copy_n(data.seqs.begin() + j * per, per, x0.begin() + b * per);
        cond[b] = data.cond[j];
      }
      Graph<real> g;
      Var loss = diffusion_loss(g, x0, cond, data.task_id, rng, data.observed);
      acc += g.scalar(loss);
      ++acc_n;
      backward(g, loss, store_);
      adam_step(store_, adam);
      if (step % log_every == 0 || step == steps) {
        log.steps.push_back(step);
        log.loss.push_back(acc / static_cast<double>(acc_n));
        if (progress) progress(step, log.loss.back());
        acc = 0;
        acc_n = 0;
      }
    }
    return log;
  }

  /// Guided ε̃ for x [n × C × T] at a single diffusion step k. Both passes
  /// use the same task mask; ω = 0 or 1 skips the unused pass.
  std::vector<real> guided_noise(const std::vector<real>& x, int k, const std::vector<real>& cond, double omega,
                                 int task, SampleStats* stats = nullptr) {
    const std::size_t n = cond.size();
    if (stats) ++stats->rounds;
    if (omega == 0.0 || omega == 1.0) {
      if (stats) ++stats->passes;
      return predict_noise(x, std::vector<double>(n, k), cond,
                           std::vector<std::uint8_t>(n, omega == 1.0 ? 1 : 0), task);
    }
    if (stats) stats->passes += 2;
    std::vector<real> xx(x);
    xx.insert(xx.end(), x.begin(), x.end());
    std::vector<real> cc(cond);
    cc.insert(cc.end(), cond.begin(), cond.end());
    std::vector<std::uint8_t> keep(2 * n, 1);
    std::fill(keep.begin() + n, keep.end(), 0);
    const auto both = predict_noise(xx, std::vector<double>(2 * n, k), cc, keep, task);
    const std::size_t half = both.size() / 2;
    return combine_guidance(std::vector<real>(both.begin() + half, both.end()),
                            std::vector<real>(both.begin(), both.begin() + half), omega);
  }

  /// Strided deterministic DDIM from pure noise. `observed` (n × state
  /// width, already feature-scaled), when given, is written into the state
  /// channels of timestep 0 before the first round and after every round.
  template <class Rng>
  std::vector<real> ddim_sample(std::size_t n, const std::vector<real>& cond, int stride, int task, Rng& rng,
                                const std::vector<real>* observed = nullptr, std::size_t observed_width = 0,
                                SampleStats* stats = nullptr) {
    if (cond.size() != n) throw DimensionError("ddim_sample: one condition per sample required");
    const auto ks = ddim_steps(dcfg_.K, stride);
    const std::size_t per = channels() * horizon();
    std::normal_distribution<double> n01;
    std::vector<real> x(n * per);
    for (auto& v : x) v = static_cast<real>(n01(rng));
    if (observed) inpaint_condition(x, n, *observed, observed_width);
    for (std::size_t i = 0; i < ks.size(); ++i) {
      const int k = ks[i], k_prev = i + 1 < ks.size() ? ks[i + 1] : 0;
      const auto eps = guided_noise(x, k, cond, dcfg_.omega, task, stats);
      x = ddim_step<real>(x, k, k_prev, eps, schedule_, dcfg_.clip);
      if (observed) inpaint_condition(x, n, *observed, observed_width);
    }
    return x;
  }

  /// Overwrites the state channels at timestep 0 of every sequence.
  void inpaint_condition(std::vector<real>& x, std::size_t n, const std::vector<real>& observed,
                         std::size_t width) const {
    if (width == 0 || width > channels() || observed.size() != n * width)
      throw DimensionError("inpaint: observed block " + std::to_string(observed.size()) + " values of width " +
                           std::to_string(width) + " for " + std::to_string(n) + " sequences");
    const std::size_t T = horizon(), per = channels() * T;
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < width; ++c) x[b * per + c * T] = observed[b * width + c];
  }

 private:
  UnetConfig ucfg_;
  DiffusionConfig dcfg_;
  bool masked_;
  ParameterStore<real> store_;
  TemporalUnet<real> unet_;
  NoiseSchedule schedule_;
  std::map<int, MaskBits> masks_;
};

// --- inverse dynamics -------------------------------------------------------

/// Ψ(s_t, s_{t+1}) → a_t for one task, regressed in normalized coordinates.
/// A linear path runs beside the MLP so linear dynamics are fit exactly.
class InverseDynamics {
 public:
  InverseDynamics() = default;
  InverseDynamics(int task_id, std::size_t d_s, std::size_t d_a, std::size_t hidden, std::uint64_t seed)
      : task_id_(task_id), d_s_(d_s), d_a_(d_a) {
    std::mt19937_64 rng(seed);
    Dense<real>(store_, "idm.fc1", 2 * d_s, hidden, rng);
    Dense<real>(store_, "idm.fc2", hidden, hidden, rng);
    Dense<real>(store_, "idm.out", hidden, d_a, rng);
    Dense<real>(store_, "idm.linear", 2 * d_s, d_a, rng);
    auto& w = store_.at("idm.out.weight");
    std::fill(w.data.begin(), w.data.end(), real(0));
    state_norm_.lo.assign(d_s, -1.0);
    state_norm_.hi.assign(d_s, 1.0);
    action_norm_.lo.assign(d_a, -1.0);
    action_norm_.hi.assign(d_a, 1.0);
  }

  int task_id() const { return task_id_; }
  std::size_t state_dim() const { return d_s_; }
  std::size_t action_dim() const { return d_a_; }
  ParameterStore<real>& params() { return store_; }
  const ParameterStore<real>& params() const { return store_; }
  Normalizer& state_normalizer() { return state_norm_; }
  Normalizer& action_normalizer() { return action_norm_; }

  /// Squared-error regression over (s_t, s_{t+1}, a_t) triples.
  TrainLog train(const std::vector<Vec>& s, const std::vector<Vec>& s_next, const std::vector<Vec>& a,
                 std::size_t steps, std::size_t batch, double lr, std::uint64_t seed, std::size_t log_every = 500) {
    if (s.empty() || s.size() != s_next.size() || s.size() != a.size())
      throw ConfigError("idm_train: empty or inconsistent transition arrays");
    std::vector<real> X, Y;
    for (std::size_t i = 0; i < s.size(); ++i) {
      append_input(X, s[i], s_next[i]);
      if (a[i].size() != d_a_) throw DimensionError("idm_train: action dim mismatch");
      for (double v : action_norm_.normalize(a[i])) Y.push_back(static_cast<real>(v));
    }
    refit_linear(X, Y);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, s.size() - 1);
    AdamState<real> adam;
    TrainLog log;
    double acc = 0;
    std::size_t acc_n = 0;
    const std::size_t in = 2 * d_s_;
    for (std::size_t step = 1; step <= steps; ++step) {
      // cosine decay to 10% for a tight final fit
      adam.lr = lr * (0.55 + 0.45 * std::cos(std::numbers::pi * static_cast<double>(step - 1) / steps));
      std::vector<real> xb(batch * in), yb(batch * d_a_);
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t j = pick(rng);
        std::copy_n(X.begin() + j * in, in, xb.begin() + b * in);
        std::copy_n(Y.begin() + j * d_a_, d_a_, yb.begin() + b * d_a_);
      }
      Graph<real> g;
      Binder<real> p(g, store_);
      Var pred = forward(p, g.input({batch, in}, xb));
      Var loss = g.mse(pred, g.input({batch, d_a_}, yb));
      acc += g.scalar(loss);
      ++acc_n;
      backward(g, loss, store_);
      adam_step(store_, adam);
      if (step % log_every == 0 || step == steps) {
        log.steps.push_back(step);
        log.loss.push_back(acc / static_cast<double>(acc_n));
        acc = 0;
        acc_n = 0;
      }
    }
    refit_linear(X, Y);
    store_.freeze();
    return log;
  }

  std::vector<Vec> predict(const std::vector<Vec>& s, const std::vector<Vec>& s_next) const {
    if (s.size() != s_next.size()) throw DimensionError("idm_predict: state batches differ in size");
    std::vector<real> X;
    for (std::size_t i = 0; i < s.size(); ++i) append_input(X, s[i], s_next[i]);
    Graph<real> g(false);
    Binder<real> p(g, const_cast<ParameterStore<real>&>(store_));
    const auto& y = g.value(forward(p, g.input({s.size(), 2 * d_s_}, X)));
    std::vector<Vec> out;
    for (std::size_t i = 0; i < s.size(); ++i)
      out.push_back(action_norm_.denormalize(Vec(y.begin() + i * d_a_, y.begin() + (i + 1) * d_a_)));
    return out;
  }

  void export_to(ParameterStore<real>& out, const std::string& prefix) const {
    for (const auto& name : store_.names()) out.add(prefix + name, store_.at(name), false);
    auto vec = [](const Vec& v) {
      Tensor<real> t({v.size()});
      for (std::size_t i = 0; i < v.size(); ++i) t.data[i] = static_cast<real>(v[i]);
      return t;
    };
    out.add(prefix + "norm.state.lo", vec(state_norm_.lo), false);
    out.add(prefix + "norm.state.hi", vec(state_norm_.hi), false);
    out.add(prefix + "norm.action.lo", vec(action_norm_.lo), false);
    out.add(prefix + "norm.action.hi", vec(action_norm_.hi), false);
  }
  static InverseDynamics import_from(const ParameterStore<real>& in, const std::string& prefix, int task_id) {
    InverseDynamics m;
    m.task_id_ = task_id;
    for (const auto& name : in.names())
      if (name.rfind(prefix + "idm.", 0) == 0) m.store_.add(name.substr(prefix.size()), in.at(name), false);
    auto vec = [&](const std::string& n) {
      const auto& t = in.at(prefix + n);
      return Vec(t.data.begin(), t.data.end());
    };
    m.state_norm_ = {vec("norm.state.lo"), vec("norm.state.hi")};
    m.action_norm_ = {vec("norm.action.lo"), vec("norm.action.hi")};
    m.d_s_ = m.state_norm_.lo.size();
    m.d_a_ = m.action_norm_.lo.size();
    return m;
  }

 private:
  Var mlp(Binder<real>& p, Var x) const {
    auto& g = p.graph();
    Var h = g.mish(g.dense(x, p("idm.fc1.weight"), p("idm.fc1.bias")));
    h = g.mish(g.dense(h, p("idm.fc2.weight"), p("idm.fc2.bias")));
    return g.dense(h, p("idm.out.weight"), p("idm.out.bias"));
  }
  Var forward(Binder<real>& p, Var x) const {
    auto& g = p.graph();
    return g.add(mlp(p, x), g.dense(x, p("idm.linear.weight"), p("idm.linear.bias")));
  }

  // Closed-form least-squares fit of the skip path to what the MLP leaves
  // over, run before and after SGD. Without it Adam noise on the linear part
  // is the accuracy floor for near-linear inverses.
  void refit_linear(const std::vector<real>& X, const std::vector<real>& Y) {
    const std::size_t n = Y.size() / d_a_, in = 2 * d_s_;
    Graph<real> g(false);
    Binder<real> p(g, store_);
    const auto& h = g.value(mlp(p, g.input({n, in}, X)));
    Eigen::MatrixXd Z(n, in + 1), R(n, d_a_);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < in; ++c) Z(i, c) = X[i * in + c];
      Z(i, in) = 1.0;
      for (std::size_t c = 0; c < d_a_; ++c) R(i, c) = double(Y[i * d_a_ + c]) - double(h[i * d_a_ + c]);
    }
    const Eigen::MatrixXd sol = Z.colPivHouseholderQr().solve(R);
    if (!sol.allFinite()) return;
    auto& w = store_.at("idm.linear.weight");
    auto& b = store_.at("idm.linear.bias");
    for (std::size_t r = 0; r < in; ++r)
      for (std::size_t c = 0; c < d_a_; ++c) w.data[r * d_a_ + c] = static_cast<real>(sol(r, c));
    for (std::size_t c = 0; c < d_a_; ++c) b.data[c] = static_cast<real>(sol(in, c));
  }
  void append_input(std::vector<real>& X, const Vec& s, const Vec& s_next) const {
    if (s.size() != d_s_ || s_next.size() != d_s_)
      throw DimensionError("idm for task " + std::to_string(task_id_) + " expects state pairs of dim " +
                           std::to_string(d_s_) + ", got " + std::to_string(s.size()) + "/" +
                           std::to_string(s_next.size()));
    for (double v : state_norm_.normalize(s)) X.push_back(static_cast<real>(v));
    for (double v : state_norm_.normalize(s_next)) X.push_back(static_cast<real>(v));
  }

  int task_id_ = 0;
  std::size_t d_s_ = 0, d_a_ = 0;
  ParameterStore<real> store_;
  Normalizer state_norm_, action_norm_;
};

}  // namespace vqcd

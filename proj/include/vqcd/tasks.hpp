#pragma once

// Synthetic heterogeneous continual-control tasks: linear-Gaussian dynamics
// with task-specific state/action dimensions and quadratic state cost.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "vqcd/error.hpp"

namespace vqcd {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b + 0x51ed270b27ULL));
}

struct TaskSpec {
  int id = 0;
  int d_s = 3;
  int d_a = 1;
  int horizon = 50;
  std::uint64_t dynamics_seed = 1;
  double process_noise = 0.05;
  double init_scale = 1.0;
  double action_bound = 1.0;
  double expert_gain = 0.0;   // ≤ 0: tuned from the dynamics
  double medium_noise = 0.5;  // action noise std of the medium policy
  double goal_scale = 2.0;    // ‖g‖ / √(d_s/3); 0 regulates to the origin
  double r_random = 0.0;      // reference returns, filled from data
  double r_expert = 0.0;

  void validate() const {
    if (d_s < 1 || d_a < 1)
      throw ConfigError("task " + std::to_string(id) + ": d_s and d_a must be >= 1");
    if (horizon < 1) throw ConfigError("task " + std::to_string(id) + ": horizon must be >= 1");
    if (action_bound <= 0) throw ConfigError("task " + std::to_string(id) + ": action_bound must be > 0");
    if (goal_scale < 0) throw ConfigError("task " + std::to_string(id) + ": goal_scale must be >= 0");
  }
  bool has_references() const { return r_expert > r_random; }
};

/// The 3-task heterogeneous default suite and the 6-task variant.
inline std::vector<TaskSpec> default_suite(int n_tasks = 3) {
  static const int kDims[6][2] = {{3, 1}, {5, 2}, {7, 3}, {4, 2}, {6, 1}, {8, 3}};
  if (n_tasks < 1 || n_tasks > 6) throw ConfigError("default suite holds 1..6 tasks");
  std::vector<TaskSpec> out;
  for (int i = 0; i < n_tasks; ++i) {
    TaskSpec t;
    t.id = i;
    t.d_s = kDims[i][0];
    t.d_a = kDims[i][1];
    t.dynamics_seed = 1000 + 17 * static_cast<std::uint64_t>(i);
    out.push_back(t);
  }
  return out;
}

using Vec = std::vector<double>;

enum class Quality { expert, medium, random };

inline std::string to_string(Quality q) {
  switch (q) {
    case Quality::expert: return "expert";
    case Quality::medium: return "medium";
    case Quality::random: return "random";
  }
  return "?";
}
inline Quality parse_quality(const std::string& s) {
  if (s == "expert") return Quality::expert;
  if (s == "medium") return Quality::medium;
  if (s == "random") return Quality::random;
  throw ConfigError("unknown behavior quality: " + s);
}

/// s' = A s + B a + σ η, reward −‖s' − g‖². A is 0.95 times an orthogonal
/// matrix; g is the fixed point held by a constant in-bounds action a_g.
class LinearTask {
 public:
  static constexpr double kSpectralRadius = 0.95;

  explicit LinearTask(TaskSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    std::mt19937_64 rng(spec_.dynamics_seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    a_.resize(spec_.d_s, spec_.d_s);
    b_.resize(spec_.d_s, spec_.d_a);
    for (int r = 0; r < spec_.d_s; ++r)
      for (int c = 0; c < spec_.d_s; ++c) a_(r, c) = n01(rng);
    for (int r = 0; r < spec_.d_s; ++r)
      for (int c = 0; c < spec_.d_a; ++c) b_(r, c) = n01(rng) / std::sqrt(spec_.d_a);
    // Orthogonal factor of a Gaussian matrix: a normal matrix, so the
    // uncontrolled system decays without transient growth.
    a_ = Eigen::HouseholderQR<Eigen::MatrixXd>(a_).householderQ();
    a_ *= kSpectralRadius / spectral_radius(a_);
    place_goal();
    gain_ = spec_.expert_gain > 0 ? spec_.expert_gain : tune_gain();
  }

  const TaskSpec& spec() const { return spec_; }
  int state_dim() const { return spec_.d_s; }
  int action_dim() const { return spec_.d_a; }
  int horizon() const { return spec_.horizon; }
  const Eigen::MatrixXd& dynamics() const { return a_; }
  const Eigen::MatrixXd& control() const { return b_; }
  double expert_gain() const { return gain_; }
  const Eigen::VectorXd& goal() const { return goal_; }
  const Eigen::VectorXd& goal_action() const { return goal_action_; }

  static double spectral_radius(const Eigen::MatrixXd& m) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }

  /// An environment instance: cheap value object owning its noise stream.
  class Env {
   public:
    Env(const LinearTask& task, std::uint64_t episode_seed) : task_(&task) {
      std::mt19937_64 init(mix_seed(episode_seed, 0x1417));
      std::uniform_real_distribution<double> u(-task.spec_.init_scale, task.spec_.init_scale);
      state_.resize(task.spec_.d_s);
      for (auto& v : state_) v = u(init);
      noise_.seed(mix_seed(episode_seed, 0x2b4d));
    }
    Env(const LinearTask& task, Vec s0, std::uint64_t noise_seed) : task_(&task), state_(std::move(s0)) {
      if (static_cast<int>(state_.size()) != task.spec_.d_s)
        throw DimensionError("task " + std::to_string(task.spec_.id) + ": initial state of dim " +
                             std::to_string(state_.size()));
      noise_.seed(mix_seed(noise_seed, 0x2b4d));
    }

    const Vec& state() const { return state_; }

    double step(const Vec& action) {
      const auto& sp = task_->spec_;
      if (static_cast<int>(action.size()) != sp.d_a)
        throw DimensionError("task " + std::to_string(sp.id) + " expects action dim " +
                             std::to_string(sp.d_a) + ", got " + std::to_string(action.size()));
      Vec next(sp.d_s, 0.0);
      std::normal_distribution<double> n01(0.0, 1.0);
      double cost = 0;
      for (int r = 0; r < sp.d_s; ++r) {
        double v = 0;
        for (int c = 0; c < sp.d_s; ++c) v += task_->a_(r, c) * state_[c];
        for (int c = 0; c < sp.d_a; ++c) v += task_->b_(r, c) * action[c];
        if (sp.process_noise > 0) v += sp.process_noise * n01(noise_);
        next[r] = v;
        cost += (v - task_->goal_[r]) * (v - task_->goal_[r]);
      }
      state_ = std::move(next);
      return -cost;
    }

   private:
    const LinearTask* task_;
    Vec state_;
    std::mt19937_64 noise_;
  };

  Env make_env(std::uint64_t episode_seed) const { return Env(*this, episode_seed); }

  /// a = clip(a_g − k Bᵀ A (s − g)): the holding action plus proportional
  /// feedback on the drift-predicted goal error.
  Vec expert_action(const Vec& s) const {
    Eigen::Map<const Eigen::VectorXd> sv(s.data(), spec_.d_s);
    const Eigen::VectorXd u = goal_action_ - gain_ * (b_.transpose() * (a_ * (sv - goal_)));
    Vec a(spec_.d_a);
    for (int c = 0; c < spec_.d_a; ++c) a[c] = std::clamp(u[c], -spec_.action_bound, spec_.action_bound);
    return a;
  }

 private:
  double tune_gain() const {
    // Gain of the stabilising feedback picked by simulated cost on a fixed
    // set of noise-free episodes.
    double best_gain = 0.1, best_return = -1e300;
    for (int i = 1; i <= 40; ++i) {
      const double k = 0.05 * i;
      double total = 0;
      for (std::uint64_t ep = 0; ep < 16; ++ep) {
        std::mt19937_64 init(mix_seed(spec_.dynamics_seed, ep));
        std::uniform_real_distribution<double> u(-spec_.init_scale, spec_.init_scale);
        Eigen::VectorXd s(spec_.d_s);
        for (int r = 0; r < spec_.d_s; ++r) s[r] = u(init);
        for (int t = 0; t < spec_.horizon; ++t) {
          Eigen::VectorXd a = (goal_action_ - k * b_.transpose() * (a_ * (s - goal_)))
                                  .cwiseMax(-spec_.action_bound)
                                  .cwiseMin(spec_.action_bound);
          s = a_ * s + b_ * a;
          total -= (s - goal_).squaredNorm();
        }
      }
      if (total > best_return) {
        best_return = total;
        best_gain = k;
      }
    }
    return best_gain;
  }

  // Pushing toward a goal rather than resting at the origin makes the zero
  // action costly, so a wrong policy cannot score well by doing nothing.
  void place_goal() {
    goal_action_ = Eigen::VectorXd::Zero(spec_.d_a);
    goal_ = Eigen::VectorXd::Zero(spec_.d_s);
    if (spec_.goal_scale <= 0) return;
    std::mt19937_64 rng(mix_seed(spec_.dynamics_seed, 0x60a1));
    std::normal_distribution<double> n01(0.0, 1.0);
    for (int c = 0; c < spec_.d_a; ++c) goal_action_[c] = n01(rng);
    Eigen::VectorXd g = (Eigen::MatrixXd::Identity(spec_.d_s, spec_.d_s) - a_).partialPivLu().solve(b_ * goal_action_);
    if (!(g.norm() > 0)) return;
    double c = spec_.goal_scale * std::sqrt(spec_.d_s / 3.0) / g.norm();
    c = std::min(c, 0.7 * spec_.action_bound / goal_action_.cwiseAbs().maxCoeff());
    goal_action_ *= c;
    goal_ = g * c;
  }

  TaskSpec spec_;
  Eigen::MatrixXd a_, b_;
  Eigen::VectorXd goal_, goal_action_;
  double gain_ = 0.0;
};

/// Scripted behavior policy. Random actions are uniform in the action box;
/// medium adds Gaussian noise to the expert action.
class ScriptedPolicy {
 public:
  ScriptedPolicy(const LinearTask& task, Quality q, std::uint64_t seed)
      : task_(&task), quality_(q), rng_(seed) {}

  Vec act(const Vec& s) {
    const auto& sp = task_->spec();
    Vec a(sp.d_a);
    if (quality_ == Quality::random) {
      std::uniform_real_distribution<double> u(-sp.action_bound, sp.action_bound);
      for (auto& v : a) v = u(rng_);
      return a;
    }
    a = task_->expert_action(s);
    if (quality_ == Quality::medium) {
      std::normal_distribution<double> n(0.0, sp.medium_noise * sp.action_bound);
      for (auto& v : a) v = std::clamp(v + n(rng_), -sp.action_bound, sp.action_bound);
    }
    return a;
  }

 private:
  const LinearTask* task_;
  Quality quality_;
  std::mt19937_64 rng_;
};

// --- closed-loop evaluation ------------------------------------------------

using StateBatch = std::vector<Vec>;
/// Maps the live states of a chunk of episodes (and the time index) to actions.
using BatchPolicy = std::function<std::vector<Vec>(const StateBatch&, int t)>;
/// Builds a policy instance for a chunk of episodes identified by their seeds;
/// each chunk gets its own instance so workers share no mutable state.
using PolicyFactory = std::function<BatchPolicy(const std::vector<std::uint64_t>& episode_seeds)>;

struct RolloutOptions {
  std::size_t chunk = 20;    // episodes per policy instance (fixed: results do not depend on threads)
  std::size_t threads = 1;   // bounded worker pool size
};

struct RolloutResult {
  std::vector<double> returns;
  double mean = 0.0;
  double std = 0.0;
};

inline std::uint64_t episode_seed(std::uint64_t base, std::size_t episode) {
  return mix_seed(base, 0xe915 + episode);
}

inline RolloutResult summarize_returns(std::vector<double> returns) {
  RolloutResult r;
  r.returns = std::move(returns);
  if (r.returns.empty()) return r;
  double s = 0;
  for (double v : r.returns) s += v;
  r.mean = s / static_cast<double>(r.returns.size());
  double q = 0;
  for (double v : r.returns) q += (v - r.mean) * (v - r.mean);
  r.std = std::sqrt(q / static_cast<double>(r.returns.size()));
  return r;
}

/// Closed-loop episodes on the true environment; per-episode returns.
inline RolloutResult rollout_eval(const LinearTask& task, const PolicyFactory& factory,
                                  std::size_t n_episodes, std::uint64_t seed,
                                  RolloutOptions opts = {}) {
  if (opts.chunk == 0) opts.chunk = 1;
  std::vector<double> returns(n_episodes, 0.0);
  const std::size_t n_chunks = (n_episodes + opts.chunk - 1) / opts.chunk;
  std::vector<std::exception_ptr> errors(n_chunks);

  auto run_chunk = [&](std::size_t ci) {
    try {
      const std::size_t lo = ci * opts.chunk, hi = std::min(n_episodes, lo + opts.chunk);
      std::vector<std::uint64_t> seeds;
      std::vector<LinearTask::Env> envs;
      for (std::size_t e = lo; e < hi; ++e) {
        seeds.push_back(episode_seed(seed, e));
        envs.push_back(task.make_env(seeds.back()));
      }
      BatchPolicy policy = factory(seeds);
      for (int t = 0; t < task.horizon(); ++t) {
        StateBatch states;
        for (const auto& env : envs) states.push_back(env.state());
        const auto actions = policy(states, t);
        if (actions.size() != envs.size())
          throw DimensionError("agent returned " + std::to_string(actions.size()) + " actions for " +
                               std::to_string(envs.size()) + " episodes");
        for (std::size_t i = 0; i < envs.size(); ++i) {
          if (static_cast<int>(actions[i].size()) != task.action_dim())
            throw DimensionError("agent/task space mismatch on task " + std::to_string(task.spec().id) +
                                 ": action dim " + std::to_string(actions[i].size()) + " vs " +
                                 std::to_string(task.action_dim()));
          returns[lo + i] += envs[i].step(actions[i]);
        }
      }
    } catch (...) {
      errors[ci] = std::current_exception();
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(opts.threads, n_chunks));
  if (workers <= 1) {
    for (std::size_t ci = 0; ci < n_chunks; ++ci) run_chunk(ci);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t ci = w; ci < n_chunks; ci += workers) run_chunk(ci);
      });
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return summarize_returns(std::move(returns));
}

/// Factory for a scripted policy, one independent stream per episode.
inline PolicyFactory scripted_factory(const LinearTask& task, Quality q) {
  return [&task, q](const std::vector<std::uint64_t>& seeds) -> BatchPolicy {
    auto policies = std::make_shared<std::vector<ScriptedPolicy>>();
    for (auto s : seeds) policies->emplace_back(task, q, mix_seed(s, 0x70));
    return [policies](const StateBatch& states, int) {
      std::vector<Vec> out;
      for (std::size_t i = 0; i < states.size(); ++i) out.push_back((*policies)[i].act(states[i]));
      return out;
    };
  };
}

}  // namespace vqcd

#pragma once

// Offline datasets of scripted-policy trajectories.
//
// File format (text lines, UTF-8 JSON per line):
//   line 1: header {"kind":"header","format_version":1,"task":{...},
//           "r_random":..,"r_expert":..,"mix":{...},"seed":..,"n_episodes":..,
//           "state_min":[..],"state_max":[..],"action_min":[..],"action_max":[..],
//           "window":{"length":8,"gamma":0.99,"return_min":..,"return_max":..}}
//   lines 2..: one episode {"states":[[..]..],"actions":[[..]..],"rewards":[..],
//           "terminals":[..],"quality":"expert"|"medium"|"random","noise_seed":..}

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "vqcd/tasks.hpp"

namespace vqcd {

struct Trajectory {
  std::vector<Vec> states;   // horizon × d_s, s_t before acting
  std::vector<Vec> actions;  // horizon × d_a
  std::vector<double> rewards;
  std::vector<bool> terminals;
  Quality quality = Quality::random;
  std::uint64_t noise_seed = 0;

  std::size_t length() const { return rewards.size(); }
  double total_return() const {
    double s = 0;
    for (double r : rewards) s += r;
    return s;
  }
  bool operator==(const Trajectory&) const = default;
};

/// Fractions of expert/medium/random episodes.
struct QualityMix {
  double expert = 1.0 / 3;
  double medium = 1.0 / 3;
  double random = 1.0 / 3;

  void validate() const {
    if (expert < 0 || medium < 0 || random < 0)
      throw ConfigError("mix fractions must be non-negative");
    if (std::abs(expert + medium + random - 1.0) > 1e-9)
      throw ConfigError("mix fractions must sum to 1");
  }
  bool operator==(const QualityMix&) const = default;
};

struct WindowStats {
  int length = 8;
  double gamma = 0.99;
  double return_min = 0.0;
  double return_max = 0.0;
};

struct Dataset {
  int format_version = 1;
  TaskSpec task;
  QualityMix mix;
  std::uint64_t seed = 0;
  Vec state_min, state_max, action_min, action_max;
  WindowStats window;
  std::vector<Trajectory> episodes;

  std::size_t transitions() const {
    std::size_t n = 0;
    for (const auto& e : episodes) n += e.length();
    return n;
  }
};

/// Σ_{u<T_e} γ^u r_{t+u}
inline double discounted_return(const Trajectory& traj, std::size_t t, std::size_t window, double gamma) {
  if (t + window > traj.length())
    throw DimensionError("return window [" + std::to_string(t) + ", " + std::to_string(t + window) +
                         ") exceeds trajectory length " + std::to_string(traj.length()));
  double acc = 0, disc = 1;
  for (std::size_t u = 0; u < window; ++u) {
    acc += disc * traj.rewards[t + u];
    disc *= gamma;
  }
  return acc;
}

inline Trajectory collect_episode(const LinearTask& task, Quality q, std::uint64_t episode_seed) {
  auto env = task.make_env(episode_seed);
  ScriptedPolicy policy(task, q, mix_seed(episode_seed, 0x70));
  Trajectory tr;
  tr.quality = q;
  tr.noise_seed = episode_seed;
  for (int t = 0; t < task.horizon(); ++t) {
    tr.states.push_back(env.state());
    tr.actions.push_back(policy.act(env.state()));
    tr.rewards.push_back(env.step(tr.actions.back()));
    tr.terminals.push_back(t + 1 == task.horizon());
  }
  return tr;
}

/// Mean return of a pure scripted policy over a fixed reference seed set,
/// large enough that the normalization constants carry under 2% noise.
inline double reference_return(const LinearTask& task, Quality q, std::size_t episodes = 1000) {
  const std::uint64_t base = mix_seed(task.spec().dynamics_seed, 0x4ef);
  double s = 0;
  for (std::size_t e = 0; e < episodes; ++e) s += collect_episode(task, q, episode_seed(base, e)).total_return();
  return s / static_cast<double>(episodes);
}

inline void compute_statistics(Dataset& ds) {
  const auto& sp = ds.task;
  ds.state_min.assign(sp.d_s, std::numeric_limits<double>::infinity());
  ds.state_max.assign(sp.d_s, -std::numeric_limits<double>::infinity());
  ds.action_min.assign(sp.d_a, std::numeric_limits<double>::infinity());
  ds.action_max.assign(sp.d_a, -std::numeric_limits<double>::infinity());
  double rmin = std::numeric_limits<double>::infinity(), rmax = -rmin;
  for (const auto& e : ds.episodes) {
    for (std::size_t t = 0; t < e.length(); ++t) {
      for (int i = 0; i < sp.d_s; ++i) {
        ds.state_min[i] = std::min(ds.state_min[i], e.states[t][i]);
        ds.state_max[i] = std::max(ds.state_max[i], e.states[t][i]);
      }
      for (int i = 0; i < sp.d_a; ++i) {
        ds.action_min[i] = std::min(ds.action_min[i], e.actions[t][i]);
        ds.action_max[i] = std::max(ds.action_max[i], e.actions[t][i]);
      }
    }
    const auto w = static_cast<std::size_t>(ds.window.length);
    for (std::size_t t = 0; t + w <= e.length(); ++t) {
      const double r = discounted_return(e, t, w, ds.window.gamma);
      rmin = std::min(rmin, r);
      rmax = std::max(rmax, r);
    }
  }
  ds.window.return_min = rmin;
  ds.window.return_max = rmax;
}

/// Episodes of mixed behavior quality; order of qualities is shuffled.
inline Dataset generate_dataset(const TaskSpec& spec, const QualityMix& mix, std::size_t n_episodes,
                                std::uint64_t seed, WindowStats window = {}) {
  mix.validate();
  if (n_episodes == 0) throw ConfigError("generate_dataset: n_episodes must be > 0");
  LinearTask task(spec);
  Dataset ds;
  ds.task = spec;
  ds.mix = mix;
  ds.seed = seed;
  ds.window = window;
  ds.task.r_random = reference_return(task, Quality::random);
  ds.task.r_expert = reference_return(task, Quality::expert);

  const auto n_expert = static_cast<std::size_t>(std::llround(mix.expert * n_episodes));
  const auto n_medium = std::min(n_episodes - n_expert,
                                 static_cast<std::size_t>(std::llround(mix.medium * n_episodes)));
  std::vector<Quality> tags(n_episodes, Quality::random);
  std::fill_n(tags.begin(), n_expert, Quality::expert);
  std::fill_n(tags.begin() + n_expert, n_medium, Quality::medium);
  std::mt19937_64 rng(seed);
  std::shuffle(tags.begin(), tags.end(), rng);
  for (std::size_t e = 0; e < n_episodes; ++e)
    ds.episodes.push_back(collect_episode(task, tags[e], episode_seed(mix_seed(seed, 0xda7a), e)));
  compute_statistics(ds);
  return ds;
}

// --- serialization ----------------------------------------------------------

inline nlohmann::json task_to_json(const TaskSpec& t) {
  return {{"id", t.id},
          {"d_s", t.d_s},
          {"d_a", t.d_a},
          {"horizon", t.horizon},
          {"dynamics_seed", t.dynamics_seed},
          {"process_noise", t.process_noise},
          {"init_scale", t.init_scale},
          {"action_bound", t.action_bound},
          {"expert_gain", t.expert_gain},
          {"medium_noise", t.medium_noise},
          {"goal_scale", t.goal_scale},
          {"r_random", t.r_random},
          {"r_expert", t.r_expert}};
}

inline TaskSpec task_from_json(const nlohmann::json& j) {
  TaskSpec t;
  t.id = j.at("id").get<int>();
  t.d_s = j.at("d_s").get<int>();
  t.d_a = j.at("d_a").get<int>();
  t.horizon = j.at("horizon").get<int>();
  t.dynamics_seed = j.at("dynamics_seed").get<std::uint64_t>();
  t.process_noise = j.at("process_noise").get<double>();
  t.init_scale = j.at("init_scale").get<double>();
  t.action_bound = j.at("action_bound").get<double>();
  t.expert_gain = j.at("expert_gain").get<double>();
  t.medium_noise = j.at("medium_noise").get<double>();
  t.goal_scale = j.at("goal_scale").get<double>();
  t.r_random = j.at("r_random").get<double>();
  t.r_expert = j.at("r_expert").get<double>();
  return t;
}

inline void write_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write dataset: " + path);
  nlohmann::json header = {
      {"kind", "header"},
      {"format_version", ds.format_version},
      {"task", task_to_json(ds.task)},
      {"r_random", ds.task.r_random},
      {"r_expert", ds.task.r_expert},
      {"mix", {{"expert", ds.mix.expert}, {"medium", ds.mix.medium}, {"random", ds.mix.random}}},
      {"seed", ds.seed},
      {"n_episodes", ds.episodes.size()},
      {"state_min", ds.state_min},
      {"state_max", ds.state_max},
      {"action_min", ds.action_min},
      {"action_max", ds.action_max},
      {"window",
       {{"length", ds.window.length},
        {"gamma", ds.window.gamma},
        {"return_min", ds.window.return_min},
        {"return_max", ds.window.return_max}}}};
  os << header.dump() << '\n';
  for (const auto& e : ds.episodes) {
    nlohmann::json j = {{"states", e.states},
                        {"actions", e.actions},
                        {"rewards", e.rewards},
                        {"terminals", e.terminals},
                        {"quality", to_string(e.quality)},
                        {"noise_seed", e.noise_seed}};
    os << j.dump() << '\n';
  }
  if (!os) throw IoError("write failed: " + path);
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open dataset: " + path);
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty dataset file: " + path);
  Dataset ds;
  try {
    const auto h = nlohmann::json::parse(line);
    if (h.at("kind") != "header") throw IoError("missing header record in " + path);
    ds.format_version = h.at("format_version").get<int>();
    if (ds.format_version != 1) throw IoError("unsupported dataset version in " + path);
    ds.task = task_from_json(h.at("task"));
    ds.mix = {h.at("mix").at("expert").get<double>(), h.at("mix").at("medium").get<double>(),
              h.at("mix").at("random").get<double>()};
    ds.seed = h.at("seed").get<std::uint64_t>();
    ds.state_min = h.at("state_min").get<Vec>();
    ds.state_max = h.at("state_max").get<Vec>();
    ds.action_min = h.at("action_min").get<Vec>();
    ds.action_max = h.at("action_max").get<Vec>();
    const auto& w = h.at("window");
    ds.window = {w.at("length").get<int>(), w.at("gamma").get<double>(), w.at("return_min").get<double>(),
                 w.at("return_max").get<double>()};
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      Trajectory tr;
      tr.states = j.at("states").get<std::vector<Vec>>();
      tr.actions = j.at("actions").get<std::vector<Vec>>();
      tr.rewards = j.at("rewards").get<std::vector<double>>();
      tr.terminals = j.at("terminals").get<std::vector<bool>>();
      tr.quality = parse_quality(j.at("quality").get<std::string>());
      tr.noise_seed = j.at("noise_seed").get<std::uint64_t>();
      if (tr.states.size() != tr.length() || tr.actions.size() != tr.length() ||
          tr.terminals.size() != tr.length())
        throw IoError("inconsistent episode lengths in " + path);
      ds.episodes.push_back(std::move(tr));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed dataset " + path + ": " + e.what());
  }
  return ds;
}

}  // namespace vqcd

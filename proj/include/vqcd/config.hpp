#pragma once

// Pipeline configuration: JSON with an explicit schema version. Missing
// fields take their defaults; unknown keys and cross-field violations are
// reported with the offending field path.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "vqcd/align.hpp"
#include "vqcd/dataset.hpp"
#include "vqcd/diffuser.hpp"

namespace vqcd {

inline constexpr int kConfigSchemaVersion = 1;

enum class Method { vqcd, finetune };
inline std::string to_string(Method m) { return m == Method::vqcd ? "vqcd" : "finetune"; }
inline Method parse_method(const std::string& s) {
  if (s == "vqcd") return Method::vqcd;
  if (s == "finetune") return Method::finetune;
  throw ConfigError("method must be vqcd or finetune, got '" + s + "'");
}

struct TaskEntry {
  TaskSpec spec;
  std::string dataset;  // empty: generated into the run directory
};

struct PipelineConfig {
  int schema_version = kConfigSchemaVersion;
  std::vector<TaskEntry> tasks;
  std::size_t steps_per_task = 20000;  // Ω
  VQConfig vq;
  QsaTrainOptions qsa;
  DiffusionConfig diffusion;
  double gamma = 0.99;
  UnetConfig unet;
  double mask_rate = 0.0;  // 0: 1/I
  double prune_threshold = 0.0;
  std::size_t idm_hidden = 256;
  std::size_t idm_steps = 20000;
  double idm_lr = 1e-3;
  std::size_t data_episodes = 100;
  QualityMix data_mix;
  std::uint64_t data_seed = 7;
  std::size_t eval_rollouts = 20;
  std::uint64_t eval_seed = 2024;
  std::size_t eval_threads = 1;
  double success_threshold = 80.0;  // normalized score counted as a success
  std::uint64_t seed = 0;
  std::string output_dir = "runs/default";
  DecodeMode mode = DecodeMode::joint;
  Alignment alignment = Alignment::vq;
  Method method = Method::vqcd;
  std::size_t log_every = 500;

  std::size_t n_tasks() const { return tasks.size(); }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError((path.empty() ? "config" : path) + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("unknown key " + (path.empty() ? "" : path + ".") + it.key());
}

template <class T>
void read(const nlohmann::json& obj, const std::string& key, const std::string& path, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError((path.empty() ? "" : path + ".") + key + ": wrong type");
  }
}


}  // namespace detail

/// Checks cross-field constraints on a filled config.
inline void check_config(const PipelineConfig& c) {
  using std::to_string;
  if (c.schema_version != kConfigSchemaVersion)
    throw ConfigError("schema_version: expected " + to_string(kConfigSchemaVersion) + ", got " +
                      to_string(c.schema_version));
  if (c.tasks.empty()) throw ConfigError("tasks: at least one task required");
  std::set<int> ids;
  for (std::size_t i = 0; i < c.tasks.size(); ++i) {
    const auto& t = c.tasks[i].spec;
    if (!ids.insert(t.id).second) throw ConfigError("tasks[" + to_string(i) + "].id: duplicate task id");
    if (t.d_s < 1 || t.d_a < 1) throw ConfigError("tasks[" + to_string(i) + "]: d_s and d_a must be >= 1");
    if (t.horizon < static_cast<int>(c.diffusion.horizon))
      throw ConfigError("tasks[" + to_string(i) + "].horizon shorter than diffusion.horizon");
  }
  if (c.steps_per_task == 0) throw ConfigError("steps_per_task must be >= 1");
  if (c.diffusion.stride > c.diffusion.K || c.diffusion.stride < 1)
    throw ConfigError("diffusion.stride (" + to_string(c.diffusion.stride) + ") must lie in [1, diffusion.K (" +
                      to_string(c.diffusion.K) + ")]");
  c.diffusion.validate();
  c.vq.validate();
  if (c.qsa.steps == 0 || c.qsa.batch == 0) throw ConfigError("qsa.steps and qsa.batch must be >= 1");
  if (c.gamma <= 0 || c.gamma > 1) throw ConfigError("diffusion.gamma must lie in (0, 1]");
  if (c.unet.horizon != c.diffusion.horizon) throw ConfigError("unet.horizon must equal diffusion.horizon");
  c.unet.validate();
  if (c.mask_rate < 0 || c.mask_rate > 1) throw ConfigError("mask.rate must lie in [0, 1]");
  if (c.mask_rate > 0 && c.mask_rate * static_cast<double>(c.n_tasks()) > 1.0 + 1e-12)
    throw ConfigError("mask.rate (" + to_string(c.mask_rate) + ") times the task count (" + to_string(c.n_tasks()) +
                      ") exceeds 1: capacity would run out before the last task");
  if (c.prune_threshold < 0) throw ConfigError("mask.prune_threshold must be >= 0");
  try {
    c.data_mix.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("data.mix: ") + e.what());
  }
  if (c.data_episodes == 0) throw ConfigError("data.episodes must be >= 1");
  if (c.eval_rollouts == 0) throw ConfigError("eval.rollouts must be >= 1");
  if (c.eval_threads == 0) throw ConfigError("eval.threads must be >= 1");
  if (c.mode == DecodeMode::idm && c.diffusion.horizon < 2) throw ConfigError("mode idm needs diffusion.horizon >= 2");
}

/// Raw JSON → validated config with defaults filled. Environment variables
/// VQCD_OUTPUT_DIR and VQCD_THREADS override output_dir and eval.threads.
inline PipelineConfig validate_config(const nlohmann::json& raw) {
  using namespace detail;
  PipelineConfig c;
  const nlohmann::json j = raw.is_null() ? nlohmann::json::object() : raw;
  // config_hash is what run directories record beside the settings; it is
  // accepted so a written config.json can be fed back, and recomputed.
  reject_unknown(j, "", {"schema_version", "tasks", "n_tasks", "steps_per_task", "qsa", "diffusion", "unet", "mask",
                         "idm", "data", "eval", "seed", "output_dir", "mode", "alignment", "method", "log_every",
                         "config_hash"});
  read(j, "schema_version", "", c.schema_version);
  read(j, "steps_per_task", "", c.steps_per_task);
  read(j, "seed", "", c.seed);
  read(j, "output_dir", "", c.output_dir);
  read(j, "log_every", "", c.log_every);
  if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
  if (j.contains("alignment")) c.alignment = parse_alignment(j.at("alignment").get<std::string>());
  if (j.contains("method")) c.method = parse_method(j.at("method").get<std::string>());

  if (j.contains("qsa")) {
    const auto& v = j.at("qsa");
    reject_unknown(v, "qsa", {"n_codes", "n_latents_state", "n_latents_action", "d_latent", "commitment_cost", "rho",
                             "hidden", "steps", "batch", "lr_start", "lr_end", "dead_code_steps"});
    read(v, "n_codes", "qsa", c.vq.n_codes);
    read(v, "n_latents_state", "qsa", c.vq.n_latents_state);
    read(v, "n_latents_action", "qsa", c.vq.n_latents_action);
    read(v, "d_latent", "qsa", c.vq.d_latent);
    read(v, "commitment_cost", "qsa", c.vq.commitment_cost);
    read(v, "rho", "qsa", c.vq.rho);
    read(v, "hidden", "qsa", c.vq.hidden);
    read(v, "steps", "qsa", c.qsa.steps);
    read(v, "batch", "qsa", c.qsa.batch);
    read(v, "lr_start", "qsa", c.qsa.lr_start);
    read(v, "lr_end", "qsa", c.qsa.lr_end);
    read(v, "dead_code_steps", "qsa", c.qsa.dead_code_steps);
  }
  if (j.contains("diffusion")) {
    const auto& d = j.at("diffusion");
    reject_unknown(d, "diffusion", {"K", "stride", "omega", "target_return", "cond_dropout", "clip", "lr", "batch",
                                    "horizon", "gamma"});
    read(d, "K", "diffusion", c.diffusion.K);
    read(d, "stride", "diffusion", c.diffusion.stride);
    read(d, "omega", "diffusion", c.diffusion.omega);
    read(d, "target_return", "diffusion", c.diffusion.target_return);
    read(d, "cond_dropout", "diffusion", c.diffusion.cond_dropout);
    read(d, "clip", "diffusion", c.diffusion.clip);
    read(d, "lr", "diffusion", c.diffusion.lr);
    read(d, "batch", "diffusion", c.diffusion.batch);
    read(d, "horizon", "diffusion", c.diffusion.horizon);
    read(d, "gamma", "diffusion", c.gamma);
  }
  c.unet.horizon = c.diffusion.horizon;
  if (j.contains("unet")) {
    const auto& u = j.at("unet");
    reject_unknown(u, "unet", {"hidden", "emb_dim", "kernel", "groups"});
    read(u, "hidden", "unet", c.unet.hidden);
    read(u, "emb_dim", "unet", c.unet.emb_dim);
    read(u, "kernel", "unet", c.unet.kernel);
    read(u, "groups", "unet", c.unet.groups);
  }
  if (j.contains("mask")) {
    const auto& m = j.at("mask");
    reject_unknown(m, "mask", {"rate", "prune_threshold"});
    read(m, "rate", "mask", c.mask_rate);
    read(m, "prune_threshold", "mask", c.prune_threshold);
  }
  if (j.contains("idm")) {
    const auto& m = j.at("idm");
    reject_unknown(m, "idm", {"hidden", "steps", "lr"});
    read(m, "hidden", "idm", c.idm_hidden);
    read(m, "steps", "idm", c.idm_steps);
    read(m, "lr", "idm", c.idm_lr);
  }
  if (j.contains("data")) {
    const auto& d = j.at("data");
    reject_unknown(d, "data", {"episodes", "mix", "seed"});
    read(d, "episodes", "data", c.data_episodes);
    read(d, "seed", "data", c.data_seed);
    if (d.contains("mix")) {
      const auto& m = d.at("mix");
      reject_unknown(m, "data.mix", {"expert", "medium", "random"});
      c.data_mix = {0, 0, 0};
      read(m, "expert", "data.mix", c.data_mix.expert);
      read(m, "medium", "data.mix", c.data_mix.medium);
      read(m, "random", "data.mix", c.data_mix.random);
    }
  }
  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    reject_unknown(e, "eval", {"rollouts", "seed", "threads", "success_threshold"});
    read(e, "rollouts", "eval", c.eval_rollouts);
    read(e, "seed", "eval", c.eval_seed);
    read(e, "threads", "eval", c.eval_threads);
    read(e, "success_threshold", "eval", c.success_threshold);
  }

  std::size_t n_tasks = 3;
  read(j, "n_tasks", "", n_tasks);
  if (j.contains("tasks")) {
    const auto& ts = j.at("tasks");
    if (!ts.is_array()) throw ConfigError("tasks: expected an array");
    const auto suite = default_suite(std::max<std::size_t>(ts.size(), 1));
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const std::string p = "tasks[" + std::to_string(i) + "]";
      const auto& t = ts[i];
      reject_unknown(t, p, {"id", "d_s", "d_a", "horizon", "dynamics_seed", "process_noise", "init_scale",
                            "action_bound", "goal_scale", "dataset"});
      TaskEntry e;
      e.spec = suite[i];
      read(t, "id", p, e.spec.id);
      read(t, "d_s", p, e.spec.d_s);
      read(t, "d_a", p, e.spec.d_a);
      read(t, "horizon", p, e.spec.horizon);
      read(t, "dynamics_seed", p, e.spec.dynamics_seed);
      read(t, "process_noise", p, e.spec.process_noise);
      read(t, "init_scale", p, e.spec.init_scale);
      read(t, "action_bound", p, e.spec.action_bound);
      read(t, "goal_scale", p, e.spec.goal_scale);
      read(t, "dataset", p, e.dataset);
      c.tasks.push_back(e);
    }
  } else {
    if (n_tasks == 0) throw ConfigError("n_tasks must be >= 1");
    for (const auto& sp : default_suite(n_tasks)) c.tasks.push_back({sp, ""});
  }
  if (const char* out = std::getenv("VQCD_OUTPUT_DIR"); out && *out) c.output_dir = out;
  if (const char* th = std::getenv("VQCD_THREADS"); th && *th) c.eval_threads = std::strtoull(th, nullptr, 10);

  c.diffusion.horizon = c.unet.horizon;
  check_config(c);
  return c;
}

/// Canonical JSON of a config (every field explicit).
inline nlohmann::json config_to_json(const PipelineConfig& c) {
  nlohmann::json tasks = nlohmann::json::array();
  for (const auto& t : c.tasks)
    tasks.push_back({{"id", t.spec.id},
                     {"d_s", t.spec.d_s},
                     {"d_a", t.spec.d_a},
                     {"horizon", t.spec.horizon},
                     {"dynamics_seed", t.spec.dynamics_seed},
                     {"process_noise", t.spec.process_noise},
                     {"init_scale", t.spec.init_scale},
                     {"goal_scale", t.spec.goal_scale},
                     {"action_bound", t.spec.action_bound},
                     {"dataset", t.dataset}});
  return {{"schema_version", c.schema_version},
          {"tasks", tasks},
          {"steps_per_task", c.steps_per_task},
          {"qsa",
           {{"n_codes", c.vq.n_codes},
            {"n_latents_state", c.vq.n_latents_state},
            {"n_latents_action", c.vq.n_latents_action},
            {"d_latent", c.vq.d_latent},
            {"commitment_cost", c.vq.commitment_cost},
            {"rho", c.vq.rho},
            {"hidden", c.vq.hidden},
            {"steps", c.qsa.steps},
            {"batch", c.qsa.batch},
            {"lr_start", c.qsa.lr_start},
            {"lr_end", c.qsa.lr_end},
            {"dead_code_steps", c.qsa.dead_code_steps}}},
          {"diffusion",
           {{"K", c.diffusion.K},
            {"stride", c.diffusion.stride},
            {"omega", c.diffusion.omega},
            {"target_return", c.diffusion.target_return},
            {"cond_dropout", c.diffusion.cond_dropout},
            {"clip", c.diffusion.clip},
            {"lr", c.diffusion.lr},
            {"batch", c.diffusion.batch},
            {"horizon", c.diffusion.horizon},
            {"gamma", c.gamma}}},
          {"unet",
           {{"hidden", c.unet.hidden}, {"emb_dim", c.unet.emb_dim}, {"kernel", c.unet.kernel}, {"groups", c.unet.groups}}},
          {"mask", {{"rate", c.mask_rate}, {"prune_threshold", c.prune_threshold}}},
          {"idm", {{"hidden", c.idm_hidden}, {"steps", c.idm_steps}, {"lr", c.idm_lr}}},
          {"data",
           {{"episodes", c.data_episodes},
            {"seed", c.data_seed},
            {"mix", {{"expert", c.data_mix.expert}, {"medium", c.data_mix.medium}, {"random", c.data_mix.random}}}}},
          {"eval",
           {{"rollouts", c.eval_rollouts},
            {"seed", c.eval_seed},
            {"threads", c.eval_threads},
            {"success_threshold", c.success_threshold}}},
          {"seed", c.seed},
          {"output_dir", c.output_dir},
          {"mode", to_string(c.mode)},
          {"alignment", to_string(c.alignment)},
          {"method", to_string(c.method)},
          {"log_every", c.log_every}};
}

/// FNV-1a over the canonical JSON, excluding fields that do not change
/// results (output location, thread count).
inline std::string config_hash(const PipelineConfig& c) {
  auto j = config_to_json(c);
  j.erase("output_dir");
  j["eval"].erase("threads");
  const std::string text = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace vqcd

// vqcd: command-line driver for continual runs.
//
//   vqcd gen-data  --task 1 --mix 0.5,0,0.5 --episodes 100 --seed 3 --out d.jsonl
//   vqcd run-all   --config run.json --out runs/a
//   vqcd train-qsa | train-swa | assemble | eval   (resumable stages)
//   vqcd prune     --prune-threshold 1e-3
//
// Flags override the matching config fields; the merged config is validated
// before anything runs.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "vqcd/pipeline.hpp"

using namespace vqcd;

namespace {

struct Overrides {
  std::string config_path, out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> steps_per_task, qsa_steps, unet_hidden, rollouts, threads, n_tasks, episodes;
  std::optional<int> diffusion_steps, stride;
  std::optional<double> omega, target_return, mask_rate, prune_threshold;
  std::optional<std::string> mode, alignment, method;
};

void add_run_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "run directory (overrides output_dir)");
  cmd->add_option("--seed", o.seed, "run seed");
  cmd->add_option("--steps-per-task", o.steps_per_task, "diffusion training steps per task (Omega)");
  cmd->add_option("--qsa-steps", o.qsa_steps, "codec training steps");
  cmd->add_option("--diffusion-steps", o.diffusion_steps, "max diffusion step K");
  cmd->add_option("--stride", o.stride, "DDIM stride");
  cmd->add_option("--omega", o.omega, "guidance weight");
  cmd->add_option("--target-return", o.target_return, "normalized return to condition on at evaluation");
  cmd->add_option("--mode", o.mode, "action decoding")->check(CLI::IsMember({"joint", "idm"}));
  cmd->add_option("--alignment", o.alignment, "space alignment")->check(CLI::IsMember({"vq", "padding"}));
  cmd->add_option("--method", o.method, "vqcd or the naive finetune baseline")
      ->check(CLI::IsMember({"vqcd", "finetune"}));
  cmd->add_option("--mask-rate", o.mask_rate, "per-task mask rate (default 1/I)");
  cmd->add_option("--prune-threshold", o.prune_threshold, "magnitude threshold for prune");
  cmd->add_option("--unet-hidden", o.unet_hidden, "widest U-net channel count");
  cmd->add_option("--rollouts", o.rollouts, "evaluation episodes per task");
  cmd->add_option("--threads", o.threads, "rollout worker threads");
  cmd->add_option("--n-tasks", o.n_tasks, "size of the default task suite");
  cmd->add_option("--episodes", o.episodes, "episodes per generated dataset");
}

nlohmann::json merged_config(const Overrides& o) {
  nlohmann::json j = nlohmann::json::object();
  if (!o.config_path.empty()) {
    std::ifstream is(o.config_path);
    try {
      is >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("cannot parse " + o.config_path + ": " + e.what());
    }
  }
  if (!o.out.empty()) j["output_dir"] = o.out;
  if (o.seed) j["seed"] = *o.seed;
  if (o.steps_per_task) j["steps_per_task"] = *o.steps_per_task;
  if (o.qsa_steps) j["qsa"]["steps"] = *o.qsa_steps;
  if (o.diffusion_steps) j["diffusion"]["K"] = *o.diffusion_steps;
  if (o.stride) j["diffusion"]["stride"] = *o.stride;
  if (o.omega) j["diffusion"]["omega"] = *o.omega;
  if (o.target_return) j["diffusion"]["target_return"] = *o.target_return;
  if (o.mode) j["mode"] = *o.mode;
  if (o.alignment) j["alignment"] = *o.alignment;
  if (o.method) j["method"] = *o.method;
  if (o.mask_rate) j["mask"]["rate"] = *o.mask_rate;
  if (o.prune_threshold) j["mask"]["prune_threshold"] = *o.prune_threshold;
  if (o.unet_hidden) j["unet"]["hidden"] = *o.unet_hidden;
  if (o.rollouts) j["eval"]["rollouts"] = *o.rollouts;
  if (o.threads) j["eval"]["threads"] = *o.threads;
  if (o.n_tasks) j["n_tasks"] = *o.n_tasks;
  if (o.episodes) j["data"]["episodes"] = *o.episodes;
  return j;
}

QualityMix parse_mix(const std::string& s) {
  QualityMix m{0, 0, 0};
  char c1 = 0, c2 = 0;
  std::istringstream is(s);
  if (!(is >> m.expert >> c1 >> m.medium >> c2 >> m.random) || c1 != ',' || c2 != ',')
    throw ConfigError("--mix expects expert,medium,random fractions, got '" + s + "'");
  m.validate();
  return m;
}

void print_summary(const Pipeline& p) {
  const auto& m = p.matrix();
  const std::size_t n = m.size();
  if (!m.row_complete(n - 1)) return;
  std::printf("P = %.4f\n", m.final_performance());
  for (std::size_t j = 0; j < n; ++j)
    std::printf("task %d: final %.3f (score %.2f)  forgetting %.3f\n", p.task_id(j), m.mean(n - 1, j),
                p.normalized(j, m.mean(n - 1, j)), m.has(j, j) ? m.forgetting(j) : 0.0);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"continual offline RL with quantized space alignment and masked diffusion"};
  app.require_subcommand(1);
  Overrides o;
  std::string stage = "cli";

  struct Verb {
    const char* name;
    const char* help;
  };
  const Verb verbs[] = {{"train-qsa", "train per-task state/action codecs"},
                        {"train-swa", "train the masked diffuser task by task (evaluates each row)"},
                        {"assemble", "assemble the masked checkpoints and evaluate the final row"},
                        {"eval", "re-evaluate the assembled model and write the report"},
                        {"prune", "magnitude-prune the task masks and report retained performance"},
                        {"run-all", "every stage in order, then the report"}};
  std::map<std::string, CLI::App*> cmds;
  for (const auto& v : verbs) {
    cmds[v.name] = app.add_subcommand(v.name, v.help);
    add_run_flags(cmds[v.name], o);
  }
  bool keep_pruned = false;
  cmds["prune"]->add_flag("--keep", keep_pruned, "write the pruned masks beside the originals");

  auto* gen = app.add_subcommand("gen-data", "generate an offline dataset for one task");
  int task_id = 0;
  std::string mix = "0.3333333333333333,0.3333333333333333,0.3333333333333334", out_file;
  std::size_t episodes = 100;
  std::uint64_t data_seed = 7;
  std::optional<int> d_s, d_a;
  gen->add_option("--task", task_id, "task id in the default suite")->required();
  gen->add_option("--mix", mix, "expert,medium,random fractions");
  gen->add_option("--episodes", episodes, "number of episodes")->check(CLI::PositiveNumber);
  gen->add_option("--seed", data_seed, "generation seed");
  gen->add_option("--d-s", d_s, "override state dimension");
  gen->add_option("--d-a", d_a, "override action dimension");
  gen->add_option("--out", out_file, "output file (default task_<id>.jsonl)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      stage = "gen-data";
      if (task_id < 0) throw ConfigError("--task must be >= 0");
      auto spec = default_suite(task_id + 1).at(task_id);
      if (d_s) spec.d_s = *d_s;
      if (d_a) spec.d_a = *d_a;
      if (out_file.empty()) out_file = "task_" + std::to_string(task_id) + ".jsonl";
      const auto ds = generate_dataset(spec, parse_mix(mix), episodes, data_seed);
      write_dataset(out_file, ds);
      std::printf("wrote %zu episodes (%zu transitions) to %s; R_random %.4f R_expert %.4f\n", ds.episodes.size(),
                  ds.transitions(), out_file.c_str(), ds.task.r_random, ds.task.r_expert);
      return 0;
    }
    std::string verb;
    for (const auto& [name, cmd] : cmds)
      if (cmd->parsed()) verb = name;
    stage = "config";
    auto cfg = validate_config(merged_config(o));
    stage = verb;
    Pipeline p(std::move(cfg), [](const std::string& s) { std::fprintf(stderr, "%s\n", s.c_str()); });
    if (verb == "train-qsa") {
      p.train_qsa();
      std::printf("codecs ready in %s/codecs\n", p.dir().c_str());
    } else if (verb == "train-swa") {
      p.train_swa();
      std::printf("checkpoints ready in %s/checkpoints\n", p.dir().c_str());
    } else if (verb == "assemble") {
      p.assemble();
      p.report();
      print_summary(p);
    } else if (verb == "eval") {
      p.evaluate_continual();
      print_summary(p);
    } else if (verb == "prune") {
      const auto r = p.prune(p.config().prune_threshold, keep_pruned);
      std::printf("threshold %g released %zu positions (prune rate %.6f)\n", r.threshold, r.released, r.prune_rate);
      std::printf("mean return %.3f -> %.3f (retained %.1f%%), normalized score %.2f -> %.2f\n", r.mean_before,
                  r.mean_after, 100.0 * r.retained(), r.score_before, r.score_after);
    } else if (verb == "run-all") {
      p.run_all();
      print_summary(p);
      std::printf("report in %s/report\n", p.dir().c_str());
    }
  } catch (const PipelineError& e) {
    std::fprintf(stderr, "vqcd: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "vqcd: [%s] %s\n", stage.c_str(), e.what());
    return 1;
  }
  return 0;
}

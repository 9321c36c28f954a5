#pragma once

// End-to-end continual run: datasets → per-task codecs → per-task masked
// diffusion training with an evaluation row after every task → assembling
// of the masked checkpoints → final evaluation and report.
//
// Run directory layout (every artifact carries the config hash and seed):
//   config.json                resolved config
//   data/task_<id>.jsonl       generated datasets (unless paths were given)
//   codecs/task_<id>.ckpt      state + action codec of a task
//   idm/task_<id>.ckpt         inverse dynamics model (idm mode)
//   masks/task_<id>.mask       task masks (vqcd method)
//   checkpoints/stage_<i>.ckpt W[(i+1)·Ω], full snapshot after task i
//   assembled.ckpt             Σ M_i ∘ W[i·Ω]
//   metrics.json               metrics matrix, rewritten after every row
//   report/                    metrics.csv, summary.json, curves.csv

#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vqcd/agent.hpp"
#include "vqcd/config.hpp"
#include "vqcd/mask.hpp"
#include "vqcd/metrics.hpp"
#include "vqcd/report.hpp"

namespace vqcd {

struct PruneOutcome {
  double threshold = 0;
  double prune_rate = 0;
  std::size_t released = 0;
  std::vector<double> before, after;  // per-task mean returns
  double mean_before = 0, mean_after = 0;
  double score_before = 0, score_after = 0;  // mean normalized scores
  std::map<std::string, double> capacity;

  /// Fraction of the pre-prune mean return kept. Returns here are negative
  /// costs, so the drop is measured against |mean_before|: 1 means no loss,
  /// 0.9 means the mean got worse by 10% of its magnitude.
  double retained() const {
    if (mean_before == 0) return mean_after >= 0 ? 1.0 : 0.0;
    return 1.0 - (mean_before - mean_after) / std::abs(mean_before);
  }
};

class Pipeline {
 public:
  using Logger = std::function<void(const std::string&)>;

  explicit Pipeline(PipelineConfig cfg, Logger log = {}) : cfg_(std::move(cfg)), log_(std::move(log)) {
    check_config(cfg_);
    hash_ = config_hash(cfg_);
    matrix_ = MetricsMatrix(cfg_.n_tasks());
  }

  const PipelineConfig& config() const { return cfg_; }
  const std::string& hash() const { return hash_; }
  std::string dir() const { return cfg_.output_dir; }
  std::string path(const std::string& rel) const { return cfg_.output_dir + "/" + rel; }
  std::string codec_path(int id) const { return path("codecs/task_" + std::to_string(id) + ".ckpt"); }
  std::string idm_path(int id) const { return path("idm/task_" + std::to_string(id) + ".ckpt"); }
  std::string mask_path(int id) const { return path("masks/task_" + std::to_string(id) + ".mask"); }
  std::string stage_path(std::size_t i) const { return path("checkpoints/stage_" + std::to_string(i) + ".ckpt"); }
  std::string assembled_path() const { return path("assembled.ckpt"); }
  std::string metrics_path() const { return path("metrics.json"); }

  std::size_t n_tasks() const { return cfg_.n_tasks(); }
  int task_id(std::size_t i) const { return cfg_.tasks.at(i).spec.id; }
  const Dataset& dataset(std::size_t i) const { return datasets_.at(i); }
  const LinearTask& task(std::size_t i) const { return *envs_.at(i); }
  const CodecRegistry& codecs() const { return codecs_; }
  const std::vector<TaskMask>& masks() const { return masks_; }
  const std::vector<ParameterStore<real>>& checkpoints() const { return checkpoints_; }
  const MetricsMatrix& matrix() const { return matrix_; }
  Diffuser& model() { return require_model("eval"); }
  const FeatureMap& feature_map(std::size_t i) const { return fmaps_.at(i); }
  const std::vector<TrainLog>& swa_logs() const { return swa_logs_; }

  // --- stage 0: datasets ----------------------------------------------------

  void prepare_data() {
    if (!datasets_.empty()) return;
    fs_mkdir("data");
    write_config();
    for (std::size_t i = 0; i < n_tasks(); ++i) {
      const auto& e = cfg_.tasks[i];
      std::string p = e.dataset;
      if (p.empty()) {
        p = path("data/task_" + std::to_string(e.spec.id) + ".jsonl");
        if (!std::filesystem::exists(p)) {
          say("generating dataset for task " + std::to_string(e.spec.id));
          WindowStats w;
          w.length = static_cast<int>(cfg_.diffusion.horizon);
          w.gamma = cfg_.gamma;
          write_dataset(p, generate_dataset(e.spec, cfg_.data_mix, cfg_.data_episodes,
                                            mix_seed(cfg_.data_seed, static_cast<std::uint64_t>(e.spec.id)), w));
        }
      } else if (!std::filesystem::exists(p)) {
        throw ConfigError("tasks[" + std::to_string(i) + "].dataset: file not found: " + p);
      }
      auto ds = load_dataset(p);
      if (ds.task.id != e.spec.id)
        throw ConfigError("tasks[" + std::to_string(i) + "].dataset holds task " + std::to_string(ds.task.id));
      if (ds.window.length != static_cast<int>(cfg_.diffusion.horizon))
        throw ConfigError("tasks[" + std::to_string(i) + "].dataset: return window " +
                          std::to_string(ds.window.length) + " differs from diffusion.horizon");
      envs_.push_back(std::make_unique<LinearTask>(ds.task));
      datasets_.push_back(std::move(ds));
    }
  }

  // --- stage 1: QSA ---------------------------------------------------------

  void train_qsa() { load_qsa(""); }

  /// Loads codecs (and inverse dynamics models) from the run directory,
  /// training whatever is missing. With a non-empty `stage` nothing is
  /// trained: a missing artifact is an error tagged with that stage.
  void load_qsa(const std::string& stage) {
    prepare_data();
    if (!fmaps_.empty()) return;
    fs_mkdir("codecs");
    if (cfg_.alignment == Alignment::vq) {
      for (std::size_t i = 0; i < n_tasks(); ++i) {
        const int id = task_id(i);
        if (codecs_.contains(id)) continue;
        if (std::filesystem::exists(codec_path(id))) {
          codecs_.add(load_codec(codec_path(id)));
          continue;
        }
        if (!stage.empty())
          throw PipelineError(stage, "missing codec for task " + std::to_string(id) + ": " + codec_path(id) +
                                         " (run train-qsa first)");
        say("training codecs for task " + std::to_string(id));
        codecs_.add(train_task_codec(i));
      }
    }
    build_feature_maps();
    if (cfg_.mode == DecodeMode::idm) train_idms(stage);
  }

  /// Trains (without saving) both codecs of task i on its dataset.
  TaskCodec train_task_codec(std::size_t i) {
    const auto& ds = datasets_.at(i);
    const int id = task_id(i);
    const auto seed = mix_seed(cfg_.seed, 0x95a0 + static_cast<std::uint64_t>(id));
    TaskCodec c;
    c.task_id = id;
    c.state = ModalityCodec(ds.task.d_s, cfg_.vq.n_latents_state, cfg_.vq, mix_seed(seed, 1));
    c.action = ModalityCodec(ds.task.d_a, cfg_.vq.n_latents_action, cfg_.vq, mix_seed(seed, 2));
    c.state.normalizer() = {ds.state_min, ds.state_max};
    c.action.normalizer() = {ds.action_min, ds.action_max};
    std::vector<Vec> s, a;
    for (const auto& ep : ds.episodes) {
      for (const auto& x : ep.states) s.push_back(c.state.normalizer().normalize(x));
      for (const auto& x : ep.actions) a.push_back(c.action.normalizer().normalize(x));
    }
    auto opt = cfg_.qsa;
    opt.log_every = cfg_.log_every;
    opt.seed = mix_seed(seed, 3);
    const auto ls = vqcd::train_qsa(c.state, s, cfg_.vq, opt);
    opt.seed = mix_seed(seed, 4);
    const auto la = vqcd::train_qsa(c.action, a, cfg_.vq, opt);
    for (std::size_t k = 0; k < ls.steps.size(); ++k) curves_.push_back({"qsa_state_loss", id, double(ls.steps[k]), ls.loss[k]});
    for (std::size_t k = 0; k < la.steps.size(); ++k) curves_.push_back({"qsa_action_loss", id, double(la.steps[k]), la.loss[k]});
    for (std::size_t k = 0; k < ls.steps.size(); ++k)
      curves_.push_back({"qsa_max_norm_sq", id, double(ls.steps[k]), std::max(ls.max_norm_sq[k], la.max_norm_sq[k])});
    save_codec(codec_path(id), c, meta(id, cfg_.qsa.steps, "qsa"));
    return c;
  }

  // --- stage 2: SWA ---------------------------------------------------------

  void train_swa() {
    train_qsa();
    ensure_model();
    load_metrics();
    fs_mkdir("masks");
    fs_mkdir("checkpoints");
    for (std::size_t i = 0; i < n_tasks(); ++i) {
      const int id = task_id(i);
      if (cfg_.method == Method::vqcd) {
        if (masks_.size() <= i) masks_.push_back(load_or_make_mask(i));
        model_->register_task(id, masks_[i].bits);
      } else {
        model_->register_task(id, {});
      }
      if (checkpoints_.size() <= i) {
        if (std::filesystem::exists(stage_path(i))) {
          checkpoints_.push_back(load_checkpoint<real>(stage_path(i)));
          load_store(checkpoints_.back());
        } else {
          say("training diffuser on task " + std::to_string(id));
          const auto sd = build_sequences(datasets_[i], fmaps_[i], cfg_.diffusion.horizon, cfg_.mode);
          auto log = model_->train_task(sd, cfg_.steps_per_task, mix_seed(cfg_.seed, 0x5a0 + i), cfg_.log_every);
          for (std::size_t k = 0; k < log.steps.size(); ++k)
            curves_.push_back({"swa_loss", id, double(log.steps[k]), log.loss[k]});
          swa_logs_.push_back(std::move(log));
          save_checkpoint(stage_path(i), model_->params(), meta(id, (i + 1) * cfg_.steps_per_task, "swa"));
          checkpoints_.push_back(snapshot(model_->params()));
        }
      } else {
        load_store(checkpoints_[i]);
      }
      if (!matrix_.row_complete(i)) {
        for (std::size_t j = 0; j <= i; ++j)
          if (!matrix_.has(i, j)) matrix_.set(i, j, evaluate_task(j));
        save_metrics();
      }
    }
  }

  // --- stage 3: assembling --------------------------------------------------

  /// Builds W = Σ M_i ∘ W[i·Ω] (or keeps the final weights in finetune mode),
  /// loads it into the model, and evaluates every task on it (final row).
  void assemble() {
    load_qsa("assemble");
    ensure_model();
    load_metrics();
    load_stage_artifacts("assemble");
    ParameterStore<real> w;
    if (cfg_.method == Method::vqcd) {
      w = vqcd::assemble(checkpoints_, masks_);
      for (std::size_t i = 0; i < n_tasks(); ++i)
        for (const auto& [name, e] : w) {
          const auto& b = masks_[i].bits.at(name);
          const auto& src = checkpoints_[i].at(name).data;
          for (std::size_t k = 0; k < b.size(); ++k)
            if (b[k] && !same_bits(e.tensor.data[k], src[k]))
              throw InvariantError("assembled weights differ from checkpoint of task " + std::to_string(task_id(i)) +
                                   " at " + name);
        }
    } else {
      w = snapshot(checkpoints_.back());
    }
    save_checkpoint(assembled_path(), w, meta(-1, n_tasks() * cfg_.steps_per_task, "assembled"));
    load_store(w);
    assembled_ = true;
    evaluate_final_row();
  }

  /// Evaluates every task on the assembled model into the final row.
  void evaluate_final_row() {
    const std::size_t last = n_tasks() - 1;
    MetricsMatrix m = matrix_;
    MetricsMatrix fresh(n_tasks());
    for (std::size_t i = 0; i + 1 < n_tasks(); ++i)
      for (std::size_t j = 0; j <= i; ++j)
        if (m.has(i, j)) fresh.set(i, j, *m.at(i, j));
    for (std::size_t j = 0; j < n_tasks(); ++j) fresh.set(last, j, evaluate_task(j));
    matrix_ = fresh;
    save_metrics();
  }

  /// `eval` verb: load the assembled model and all masks, re-evaluate the
  /// final row, and emit the report.
  void evaluate_continual() {
    if (!std::filesystem::exists(assembled_path()))
      throw PipelineError("eval", "missing assembled model " + assembled_path() + " (run assemble first)");
    load_qsa("eval");
    ensure_model();
    load_metrics();
    register_masks("eval");
    load_store(load_checkpoint<real>(assembled_path()));
    assembled_ = true;
    evaluate_final_row();
    report();
  }

  void run_all() {
    train_swa();
    assemble();
    report();
  }

  // --- pruning --------------------------------------------------------------

  /// Prunes the assembled model's masks at `threshold`, evaluates every task
  /// before and after, and restores the unpruned masks afterwards unless
  /// `keep` is set (then the pruned masks are written beside the originals).
  PruneOutcome prune(double threshold, bool keep = false) {
    if (cfg_.method != Method::vqcd) throw PipelineError("prune", "pruning needs task masks (method vqcd)");
    if (!assembled_) {
      if (!std::filesystem::exists(assembled_path()))
        throw PipelineError("prune", "missing assembled model " + assembled_path() + " (run assemble first)");
      load_qsa("prune");
      ensure_model();
      register_masks("prune");
      load_store(load_checkpoint<real>(assembled_path()));
      assembled_ = true;
    }
    PruneOutcome out;
    out.threshold = threshold;
    for (std::size_t j = 0; j < n_tasks(); ++j) out.before.push_back(evaluate_task(j).mean);
    auto ledger = CapacityLedger::from_masks(parameter_shapes(model_->params()), n_tasks(), cfg_.mask_rate, masks_);
    const auto pr = prune_masks(model_->params(), masks_, threshold, &ledger);
    out.prune_rate = pr.prune_rate;
    out.released = pr.released;
    out.capacity = capacity_report(ledger);
    for (std::size_t j = 0; j < n_tasks(); ++j) model_->register_task(task_id(j), pr.masks[j].bits);
    for (std::size_t j = 0; j < n_tasks(); ++j) out.after.push_back(evaluate_task(j).mean);
    const double n = static_cast<double>(n_tasks());
    for (std::size_t j = 0; j < n_tasks(); ++j) {
      out.mean_before += out.before[j] / n;
      out.mean_after += out.after[j] / n;
      out.score_before += normalized(j, out.before[j]) / n;
      out.score_after += normalized(j, out.after[j]) / n;
    }
    if (keep) {
      for (const auto& m : pr.masks) save_mask(path("masks/pruned_task_" + std::to_string(m.task_id) + ".mask"), m);
    } else {
      for (std::size_t j = 0; j < n_tasks(); ++j) model_->register_task(task_id(j), masks_[j].bits);
    }
    return out;
  }

  // --- evaluation -----------------------------------------------------------

  /// Closed-loop evaluation of task column j on the current weights.
  MetricsCell evaluate_task(std::size_t j, std::optional<double> target = std::nullopt) {
    auto& m = require_model("eval");
    const int id = task_id(j);
    if (!m.has_task(id)) throw PipelineError("eval", "task " + std::to_string(id) + " has no mask");
    AgentOptions ao;
    ao.mode = cfg_.mode;
    ao.target_return = target.value_or(cfg_.diffusion.target_return);
    ao.stride = cfg_.diffusion.stride;
    ao.seed = mix_seed(cfg_.eval_seed, 0xa6e7);
    const InverseDynamics* idm = cfg_.mode == DecodeMode::idm ? &idms_.at(id) : nullptr;
    RolloutOptions ro;
    ro.threads = cfg_.eval_threads;
    const auto r = rollout_eval(task(j), diffusion_factory(m, fmaps_.at(j), id, ao, idm), cfg_.eval_rollouts,
                                mix_seed(cfg_.eval_seed, static_cast<std::uint64_t>(id)), ro);
    MetricsCell c{r.mean, r.std, 0.0};
    for (double ret : r.returns)
      if (normalized(j, ret) >= cfg_.success_threshold) c.success_rate += 1.0 / static_cast<double>(r.returns.size());
    return c;
  }

  double normalized(std::size_t j, double r) const {
    return normalized_score(r, datasets_.at(j).task.r_random, datasets_.at(j).task.r_expert);
  }

  ReportContext report_context() const {
    ReportContext ctx;
    for (std::size_t i = 0; i < n_tasks(); ++i) {
      ctx.task_ids.push_back(task_id(i));
      ctx.r_random.push_back(datasets_.at(i).task.r_random);
      ctx.r_expert.push_back(datasets_.at(i).task.r_expert);
    }
    ctx.config_hash = hash_;
    ctx.seed = cfg_.seed;
    ctx.method = to_string(cfg_.method);
    ctx.curves = curves_;
    for (std::size_t i = 0; i < matrix_.size(); ++i)
      for (std::size_t j = 0; j < matrix_.size(); ++j)
        if (matrix_.has(i, j)) ctx.curves.push_back({"eval_return", task_id(j), double(i), matrix_.mean(i, j)});
    return ctx;
  }

  ReportFiles report() const { return emit_report(matrix_, report_context(), path("report")); }

 private:
  void say(const std::string& s) const {
    if (log_) log_(s);
  }

  void fs_mkdir(const std::string& rel) const {
    std::error_code ec;
    std::filesystem::create_directories(path(rel), ec);
    if (ec) throw IoError("cannot create directory " + path(rel) + ": " + ec.message());
  }

  void write_config() const {
    std::error_code ec;
    std::filesystem::create_directories(cfg_.output_dir, ec);
    std::ofstream os(path("config.json"), std::ios::trunc);
    if (!os) throw IoError("cannot write " + path("config.json"));
    auto j = config_to_json(cfg_);
    j["config_hash"] = hash_;
    os << j.dump(2) << '\n';
  }

  CheckpointMeta meta(std::int64_t task, std::uint64_t step, const std::string& kind) const {
    CheckpointMeta m;
    m.task_id = task;
    m.step = step;
    m.seed = cfg_.seed;
    m.extra = nlohmann::json{{"config_hash", hash_}, {"kind", kind}}.dump();
    return m;
  }

  void build_feature_maps() {
    std::size_t ws = 0, wa = 0;
    for (const auto& ds : datasets_) {
      ws = std::max<std::size_t>(ws, ds.task.d_s);
      wa = std::max<std::size_t>(wa, ds.task.d_a);
    }
    for (std::size_t i = 0; i < n_tasks(); ++i) {
      const auto& ds = datasets_[i];
      if (cfg_.alignment == Alignment::vq)
        fmaps_.emplace_back(codecs_.at(task_id(i)), cfg_.vq);
      else
        fmaps_.emplace_back(task_id(i), Normalizer{ds.state_min, ds.state_max},
                            Normalizer{ds.action_min, ds.action_max}, ws, wa);
    }
  }

  void train_idms(const std::string& stage) {
    fs_mkdir("idm");
    for (std::size_t i = 0; i < n_tasks(); ++i) {
      const int id = task_id(i);
      if (idms_.count(id)) continue;
      if (std::filesystem::exists(idm_path(id))) {
        idms_[id] = InverseDynamics::import_from(load_checkpoint<real>(idm_path(id)), "", id);
        continue;
      }
      if (!stage.empty())
        throw PipelineError(stage, "missing inverse dynamics model for task " + std::to_string(id) + ": " +
                                       idm_path(id) + " (run train-qsa first)");
      say("training inverse dynamics for task " + std::to_string(id));
      const auto& ds = datasets_[i];
      InverseDynamics m(id, ds.task.d_s, ds.task.d_a, cfg_.idm_hidden, mix_seed(cfg_.seed, 0x1d0 + i));
      m.state_normalizer() = {ds.state_min, ds.state_max};
      m.action_normalizer() = {ds.action_min, ds.action_max};
      std::vector<Vec> s, sn, a;
      for (const auto& ep : ds.episodes)
        for (std::size_t t = 0; t + 1 < ep.length(); ++t) {
          s.push_back(ep.states[t]);
          sn.push_back(ep.states[t + 1]);
          a.push_back(ep.actions[t]);
        }
      const auto log = m.train(s, sn, a, cfg_.idm_steps, 32, cfg_.idm_lr, mix_seed(cfg_.seed, 0x1d1 + i), cfg_.log_every);
      for (std::size_t k = 0; k < log.steps.size(); ++k) curves_.push_back({"idm_loss", id, double(log.steps[k]), log.loss[k]});
      ParameterStore<real> store;
      m.export_to(store, "");
      save_checkpoint(idm_path(id), store, meta(id, cfg_.idm_steps, "idm"));
      idms_[id] = std::move(m);
    }
  }

  std::size_t channels() const {
    const auto& f = fmaps_.front();
    return f.state_width() + (cfg_.mode == DecodeMode::joint ? f.action_width() : 0);
  }

  void ensure_model() {
    if (model_) return;
    auto u = cfg_.unet;
    u.features = channels();
    u.horizon = cfg_.diffusion.horizon;
    model_ = std::make_unique<Diffuser>(u, cfg_.diffusion, mix_seed(cfg_.seed, 0xd1f), cfg_.method == Method::vqcd);
  }

  Diffuser& require_model(const std::string& stage) {
    if (!model_) throw PipelineError(stage, "diffusion model not initialized");
    return *model_;
  }

  TaskMask load_or_make_mask(std::size_t i) {
    const int id = task_id(i);
    if (std::filesystem::exists(mask_path(id))) {
      auto m = load_mask(mask_path(id));
      if (m.task_id != id) throw PipelineError("swa", "mask file " + mask_path(id) + " belongs to another task");
      return m;
    }
    auto ledger = CapacityLedger::from_masks(parameter_shapes(model_->params()), n_tasks(), cfg_.mask_rate, masks_);
    auto m = generate_mask(id, i, ledger, mix_seed(cfg_.seed, 0x3a5c + static_cast<std::uint64_t>(id)));
    m.extra = nlohmann::json{{"config_hash", hash_}, {"order", i}}.dump();
    save_mask(mask_path(id), m);
    return m;
  }

  void register_masks(const std::string& stage) {
    for (std::size_t i = 0; i < n_tasks(); ++i) {
      const int id = task_id(i);
      if (cfg_.method == Method::vqcd) {
        if (masks_.size() <= i) {
          if (!std::filesystem::exists(mask_path(id)))
            throw PipelineError(stage, "missing mask for task " + std::to_string(id) + ": " + mask_path(id));
          masks_.push_back(load_mask(mask_path(id)));
        }
        model_->register_task(id, masks_[i].bits);
      } else {
        model_->register_task(id, {});
      }
    }
  }

  void load_stage_artifacts(const std::string& stage) {
    register_masks(stage);
    for (std::size_t i = checkpoints_.size(); i < n_tasks(); ++i) {
      if (!std::filesystem::exists(stage_path(i)))
        throw PipelineError(stage, "missing checkpoint for task " + std::to_string(task_id(i)) + ": " +
                                       stage_path(i) + " (run train-swa first)");
      checkpoints_.push_back(load_checkpoint<real>(stage_path(i)));
    }
  }

  void load_store(const ParameterStore<real>& src) {
    auto& dst = model_->params();
    for (const auto& [name, e] : src) {
      if (!dst.contains(name)) throw PipelineError("swa", "checkpoint has unknown parameter " + name);
      auto& t = dst.at(name);
      if (t.shape != e.tensor.shape) throw PipelineError("swa", "checkpoint shape mismatch for " + name);
      t.data = e.tensor.data;
    }
  }

  static ParameterStore<real> snapshot(const ParameterStore<real>& s) {
    ParameterStore<real> out;
    for (const auto& [name, e] : s) {
      Tensor<real> t(e.tensor.shape, e.tensor.data);
      out.add(name, std::move(t), e.trainable);
    }
    return out;
  }

  static bool same_bits(real a, real b) { return std::memcmp(&a, &b, sizeof(real)) == 0; }

  void load_metrics() {
    if (metrics_loaded_) return;
    metrics_loaded_ = true;
    if (!std::filesystem::exists(metrics_path())) return;
    std::ifstream is(metrics_path());
    nlohmann::json j;
    try {
      is >> j;
    } catch (const nlohmann::json::exception& e) {
      throw IoError("malformed " + metrics_path() + ": " + e.what());
    }
    if (j.value("config_hash", std::string()) != hash_) return;  // stale run directory
    auto m = MetricsMatrix::from_json(j.at("matrix"));
    if (m.size() == n_tasks()) matrix_ = m;
  }

  void save_metrics() const {
    std::ofstream os(metrics_path(), std::ios::trunc);
    if (!os) throw IoError("cannot write " + metrics_path());
    os << nlohmann::json{{"config_hash", hash_}, {"seed", cfg_.seed}, {"matrix", matrix_.to_json()}}.dump(2) << '\n';
  }

  PipelineConfig cfg_;
  Logger log_;
  std::string hash_;
  std::vector<Dataset> datasets_;
  std::vector<std::unique_ptr<LinearTask>> envs_;
  CodecRegistry codecs_;
  std::map<int, InverseDynamics> idms_;
  std::vector<FeatureMap> fmaps_;
  std::unique_ptr<Diffuser> model_;
  std::vector<TaskMask> masks_;
  std::vector<ParameterStore<real>> checkpoints_;
  std::vector<TrainLog> swa_logs_;
  std::vector<CurvePoint> curves_;
  MetricsMatrix matrix_;
  bool metrics_loaded_ = false;
  bool assembled_ = false;
};

}  // namespace vqcd

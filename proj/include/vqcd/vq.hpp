#pragma once

// Per-task vector-quantized codecs that map a task's native state or action
// space into a fixed number of fixed-length code vectors.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "vqcd/adam.hpp"
#include "vqcd/checkpoint.hpp"
#include "vqcd/layers.hpp"
#include "vqcd/tasks.hpp"

namespace vqcd {

struct VQConfig {
  std::size_t n_codes = 512;
  std::size_t n_latents_state = 10;
  std::size_t n_latents_action = 5;
  std::size_t d_latent = 2;
  double commitment_cost = 0.25;
  double rho = 3.0;  // bound on ‖e‖² for every code
  std::size_t hidden = 256;

  void validate() const {
    if (n_codes < 1) throw ConfigError("qsa.n_codes must be >= 1");
    if (d_latent < 1) throw ConfigError("qsa.d_latent must be >= 1");
    if (n_latents_state < 1 || n_latents_action < 1) throw ConfigError("qsa latent counts must be >= 1");
    if (!(rho > 0)) throw ConfigError("qsa.rho must be > 0");
    if (hidden < 1) throw ConfigError("qsa.hidden must be >= 1");
  }
  std::size_t state_feature_dim() const { return n_latents_state * d_latent; }
  std::size_t action_feature_dim() const { return n_latents_action * d_latent; }
};

enum class Modality { state, action };
inline std::string to_string(Modality m) { return m == Modality::state ? "state" : "action"; }

struct QuantizeResult {
  std::vector<real> codes;  // rows replaced by their nearest code
  std::vector<std::size_t> indices;
};

/// Nearest code (Euclidean) for each d-wide row of z; ties go to the lowest index.
inline QuantizeResult quantize(std::span<const real> z, std::size_t d, const Tensor<real>& codebook) {
  if (codebook.shape.size() != 2 || codebook.shape[0] == 0 || codebook.shape[1] != d)
    throw DimensionError("quantize: codebook " + shape_str(codebook.shape) + " for latent width " +
                         std::to_string(d));
  if (z.size() % d) throw DimensionError("quantize: input not a multiple of latent width");
  const std::size_t rows = z.size() / d, n = codebook.shape[0];
  QuantizeResult out;
  out.codes.resize(z.size());
  out.indices.resize(rows);
  const real* cb = codebook.data.data();
  for (std::size_t r = 0; r < rows; ++r) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    if (d == 2) {
      const double z0 = z[r * 2], z1 = z[r * 2 + 1];
      for (std::size_t k = 0; k < n; ++k) {
        const double a = z0 - cb[2 * k], b = z1 - cb[2 * k + 1];
        const double dist = a * a + b * b;
        if (dist < best) {
          best = dist;
          arg = k;
        }
      }
      out.indices[r] = arg;
      out.codes[r * 2] = cb[2 * arg];
      out.codes[r * 2 + 1] = cb[2 * arg + 1];
      continue;
    }
    for (std::size_t k = 0; k < n; ++k) {
      double dist = 0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = static_cast<double>(z[r * d + c]) - codebook.data[k * d + c];
        dist += diff * diff;
      }
      if (dist < best) {
        best = dist;
        arg = k;
      }
    }
    out.indices[r] = arg;
    std::copy_n(codebook.data.begin() + arg * d, d, out.codes.begin() + r * d);
  }
  return out;
}

/// Rescale every code with ‖e‖² > ρ onto the sphere ‖e‖² = ρ; direction kept.
template <class Real>
void clip_codebook(Tensor<Real>& codebook, double rho) {
  if (!(rho > 0)) throw ConfigError("clip_codebook: rho must be > 0");
  const std::size_t d = codebook.shape.at(1);
  for (std::size_t k = 0; k < codebook.shape[0]; ++k) {
    Real* e = codebook.data.data() + k * d;
    double sq = 0;
    for (std::size_t c = 0; c < d; ++c) sq += static_cast<double>(e[c]) * e[c];
    if (sq > rho) {
      const double s = std::sqrt(rho / sq);
      for (std::size_t c = 0; c < d; ++c) e[c] = static_cast<Real>(e[c] * s);
    }
  }
}

inline double max_code_norm_sq(const Tensor<real>& codebook) {
  const std::size_t d = codebook.shape.at(1);
  double worst = 0;
  for (std::size_t k = 0; k < codebook.shape[0]; ++k) {
    double sq = 0;
    for (std::size_t c = 0; c < d; ++c) sq += static_cast<double>(codebook.data[k * d + c]) * codebook.data[k * d + c];
    worst = std::max(worst, sq);
  }
  return worst;
}

/// x followed by zeros up to d_max.
inline Vec pad_align(const Vec& x, std::size_t d_max) {
  if (x.size() > d_max)
    throw DimensionError("pad_align: input dim " + std::to_string(x.size()) + " exceeds " + std::to_string(d_max));
  Vec out(d_max, 0.0);
  std::copy(x.begin(), x.end(), out.begin());
  return out;
}

/// Per-dimension affine map of [min, max] to [−1, 1].
struct Normalizer {
  Vec lo, hi;

  Vec normalize(const Vec& x) const {
    Vec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double span = hi[i] - lo[i];
      y[i] = span > 0 ? 2.0 * (x[i] - lo[i]) / span - 1.0 : 0.0;
    }
    return y;
  }
  Vec denormalize(const Vec& y) const {
    Vec x(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) x[i] = lo[i] + (y[i] + 1.0) * 0.5 * (hi[i] - lo[i]);
    return x;
  }
};

struct QsaLoss {
  Var total, reconstruction, commitment, codebook;
};

/// Reconstruction + commitment·‖sg(z_q) − z_e‖² + ‖sg(z_e) − z_q‖² (all as
/// per-element means). z_q must be the gathered code rows (gradient reaches
/// the codebook); x_hat must be decoded from the straight-through value so
/// the reconstruction gradient reaches the encoder but not the codes.
inline QsaLoss qsa_loss(Graph<real>& g, Var x, Var z_e, Var z_q, Var x_hat, double commitment_cost) {
  QsaLoss l;
  l.reconstruction = g.mse(x_hat, x);
  l.commitment = g.scale(g.mse(z_e, g.detach(z_q)), static_cast<real>(commitment_cost));
  l.codebook = g.mse(g.detach(z_e), z_q);
  l.total = g.add(g.add(l.reconstruction, l.commitment), l.codebook);
  return l;
}

/// Encoder, decoder and codebook for one modality of one task.
class ModalityCodec {
 public:
  ModalityCodec() = default;
  ModalityCodec(std::size_t input_dim, std::size_t n_latents, const VQConfig& cfg, std::uint64_t seed)
      : input_dim_(input_dim), n_latents_(n_latents), d_latent_(cfg.d_latent) {
    cfg.validate();
    if (input_dim == 0) throw ConfigError("codec input dim must be >= 1");
    std::mt19937_64 rng(seed);
    const std::size_t z = n_latents * cfg.d_latent;
    build_layers(cfg.hidden);
    Dense<real>(params_, "encoder.fc1", input_dim, cfg.hidden, rng);
    Dense<real>(params_, "encoder.fc2", cfg.hidden, cfg.hidden, rng);
    Dense<real>(params_, "encoder.out", cfg.hidden, z, rng);
    Dense<real>(params_, "decoder.fc1", z, cfg.hidden, rng);
    Dense<real>(params_, "decoder.fc2", cfg.hidden, cfg.hidden, rng);
    Dense<real>(params_, "decoder.out", cfg.hidden, input_dim, rng);
    Tensor<real> cb({cfg.n_codes, cfg.d_latent});
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& v : cb.data) v = static_cast<real>(u(rng));
    clip_codebook(cb, cfg.rho);
    params_.add("codebook", std::move(cb));
    norm_.lo.assign(input_dim, -1.0);
    norm_.hi.assign(input_dim, 1.0);
  }

  std::size_t input_dim() const { return input_dim_; }
  std::size_t n_latents() const { return n_latents_; }
  std::size_t d_latent() const { return d_latent_; }
  std::size_t feature_dim() const { return n_latents_ * d_latent_; }
  std::size_t hidden() const { return params_.at("encoder.fc1.weight").shape[1]; }
  std::size_t n_codes() const { return params_.at("codebook").shape[0]; }

  ParameterStore<real>& params() { return params_; }
  const ParameterStore<real>& params() const { return params_; }
  Tensor<real>& codebook() { return params_.at("codebook"); }
  const Tensor<real>& codebook() const { return params_.at("codebook"); }
  Normalizer& normalizer() { return norm_; }
  const Normalizer& normalizer() const { return norm_; }

  Var encode(Binder<real>& p, Var x_norm) const {
    auto& g = p.graph();
    auto h = g.mish(enc1_(p, x_norm));
    h = g.mish(enc2_(p, h));
    return enc_out_(p, h);
  }
  Var decode(Binder<real>& p, Var z) const {
    auto& g = p.graph();
    auto h = g.mish(dec1_(p, z));
    h = g.mish(dec2_(p, h));
    return dec_out_(p, h);
  }

  /// z_e for normalized input rows (no quantization).
  std::vector<real> encode_normalized(const std::vector<Vec>& rows) const {
    check_rows(rows, input_dim_, "encode");
    Graph<real> g(false);
    auto& self = const_cast<ParameterStore<real>&>(params_);
    Binder<real> p(g, self);
    return g.value(encode(p, g.input({rows.size(), input_dim_}, flatten(rows))));
  }
  /// Raw-space rows to z_e.
  std::vector<real> encode_raw(const std::vector<Vec>& raw) const {
    std::vector<Vec> rows;
    for (const auto& r : raw) {
      if (r.size() != input_dim_) throw DimensionError("encode: input dim " + std::to_string(r.size()) +
                                                      " vs codec dim " + std::to_string(input_dim_));
      rows.push_back(norm_.normalize(r));
    }
    return encode_normalized(rows);
  }
  QuantizeResult quantize(std::span<const real> z) const { return vqcd::quantize(z, d_latent_, codebook()); }

  /// Decode flattened latent rows (batch × feature_dim) to normalized space.
  std::vector<Vec> decode_normalized(const std::vector<real>& z, std::size_t batch) const {
    if (z.size() != batch * feature_dim())
      throw DimensionError("decode: expected " + std::to_string(batch) + "x" + std::to_string(feature_dim()) +
                           " latents, got " + std::to_string(z.size()) + " values");
    Graph<real> g(false);
    auto& self = const_cast<ParameterStore<real>&>(params_);
    Binder<real> p(g, self);
    const auto& y = g.value(decode(p, g.input({batch, feature_dim()}, z)));
    std::vector<Vec> out(batch, Vec(input_dim_));
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < input_dim_; ++i) out[b][i] = y[b * input_dim_ + i];
    return out;
  }
  std::vector<Vec> decode_raw(const std::vector<real>& z, std::size_t batch) const {
    auto rows = decode_normalized(z, batch);
    for (auto& r : rows) r = norm_.denormalize(r);
    return rows;
  }

  /// Save/load through a store with a name prefix ("state." / "action.").
  void export_to(ParameterStore<real>& out, const std::string& prefix) const {
    for (const auto& [name, e] : params_) out.add(prefix + name, e.tensor, e.trainable);
    out.add(prefix + "norm.lo", to_tensor(norm_.lo), false);
    out.add(prefix + "norm.hi", to_tensor(norm_.hi), false);
  }
  static ModalityCodec import_from(const ParameterStore<real>& in, const std::string& prefix) {
    ModalityCodec c;
    for (const auto& [name, e] : in) {
      if (name.rfind(prefix, 0) != 0) continue;
      const std::string local = name.substr(prefix.size());
      if (local == "norm.lo") c.norm_.lo.assign(e.tensor.data.begin(), e.tensor.data.end());
      else if (local == "norm.hi") c.norm_.hi.assign(e.tensor.data.begin(), e.tensor.data.end());
      else c.params_.add(local, e.tensor, e.trainable);
    }
    if (!c.params_.contains("codebook") || !c.params_.contains("encoder.out.weight"))
      throw IoError("codec block '" + prefix + "' missing from file");
    c.input_dim_ = c.params_.at("encoder.fc1.weight").shape[0];
    c.d_latent_ = c.params_.at("codebook").shape[1];
    c.n_latents_ = c.params_.at("encoder.out.weight").shape[1] / c.d_latent_;
    c.build_layers(c.params_.at("encoder.fc1.weight").shape[1]);
    return c;
  }

 private:
  static Tensor<real> to_tensor(const Vec& v) {
    Tensor<real> t({v.size()});
    for (std::size_t i = 0; i < v.size(); ++i) t.data[i] = static_cast<real>(v[i]);
    return t;
  }
  static std::vector<real> flatten(const std::vector<Vec>& rows) {
    std::vector<real> out;
    for (const auto& r : rows)
      for (double v : r) out.push_back(static_cast<real>(v));
    return out;
  }
  static void check_rows(const std::vector<Vec>& rows, std::size_t d, const char* op) {
    for (const auto& r : rows)
      if (r.size() != d)
        throw DimensionError(std::string(op) + ": row dim " + std::to_string(r.size()) + " vs " + std::to_string(d));
  }
  void build_layers(std::size_t hidden) {
    const std::size_t z = n_latents_ * d_latent_;
    auto mk = [](const char* n, std::size_t in, std::size_t out) {
      Dense<real> d;
      d.name = n;
      d.in = in;
      d.out = out;
      return d;
    };
    enc1_ = mk("encoder.fc1", input_dim_, hidden);
    enc2_ = mk("encoder.fc2", hidden, hidden);
    enc_out_ = mk("encoder.out", hidden, z);
    dec1_ = mk("decoder.fc1", z, hidden);
    dec2_ = mk("decoder.fc2", hidden, hidden);
    dec_out_ = mk("decoder.out", hidden, input_dim_);
  }

  std::size_t input_dim_ = 0, n_latents_ = 0, d_latent_ = 0;
  ParameterStore<real> params_;
  Normalizer norm_;
  Dense<real> enc1_, enc2_, enc_out_, dec1_, dec2_, dec_out_;
};

struct QsaTrainOptions {
  std::size_t steps = 50000;
  std::size_t batch = 32;
  double lr_start = 1e-3;
  double lr_end = 1e-4;
  std::size_t dead_code_steps = 5000;  // re-seed codes unused this long
  std::size_t log_every = 500;
  std::uint64_t seed = 0;
};

struct QsaTrainLog {
  std::vector<std::size_t> steps;
  std::vector<double> loss;          // mean total loss over each logging window
  std::vector<double> max_norm_sq;   // largest ‖e‖² at each log point
  std::size_t reseeded = 0;
};

/// Trains one modality codec on normalized rows: Adam on the three-term
/// loss, codebook clipped after every update, linear learning-rate decay.
inline QsaTrainLog train_qsa(ModalityCodec& codec, const std::vector<Vec>& normalized_rows,
                             const VQConfig& cfg, const QsaTrainOptions& opt) {
  if (normalized_rows.empty()) throw ConfigError("train_qsa: empty dataset");
  for (const auto& r : normalized_rows)
    if (r.size() != codec.input_dim()) throw DimensionError("train_qsa: row dim mismatch");
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<std::size_t> pick(0, normalized_rows.size() - 1);
  AdamState<real> adam;
  const std::size_t n_codes = codec.n_codes(), d = codec.d_latent(), in = codec.input_dim();
  std::vector<std::size_t> last_used(n_codes, 0);
  QsaTrainLog log;
  double window_loss = 0;
  std::size_t window_n = 0;

  for (std::size_t step = 1; step <= opt.steps; ++step) {
    const double frac = opt.steps > 1 ? static_cast<double>(step - 1) / static_cast<double>(opt.steps - 1) : 1.0;
    adam.lr = opt.lr_start + (opt.lr_end - opt.lr_start) * frac;

    std::vector<real> x(opt.batch * in);
    for (std::size_t b = 0; b < opt.batch; ++b) {
      const auto& row = normalized_rows[pick(rng)];
      for (std::size_t i = 0; i < in; ++i) x[b * in + i] = static_cast<real>(row[i]);
    }
    Graph<real> g;
    Binder<real> p(g, codec.params());
    Var xv = g.input({opt.batch, in}, x);
    Var z_e = codec.encode(p, xv);
    const auto q = codec.quantize(g.value(z_e));
    Var z_q = g.reshape(g.gather_rows(p("codebook"), q.indices), g.shape(z_e));
    Var z_st = g.straight_through(z_e, q.codes);
    Var x_hat = codec.decode(p, z_st);
    auto loss = qsa_loss(g, xv, z_e, z_q, x_hat, cfg.commitment_cost);
    backward(g, loss.total, codec.params());
    adam_step(codec.params(), adam);
    clip_codebook(codec.codebook(), cfg.rho);

    for (auto idx : q.indices) last_used[idx] = step;
    if (opt.dead_code_steps > 0 && step % 100 == 0) {
      const auto& ze = g.value(z_e);
      std::uniform_int_distribution<std::size_t> pick_row(0, ze.size() / d - 1);
      auto& cb = codec.codebook();
      for (std::size_t k = 0; k < n_codes; ++k) {
        if (step - last_used[k] < opt.dead_code_steps) continue;
        const std::size_t r = pick_row(rng);
        std::copy_n(ze.begin() + r * d, d, cb.data.begin() + k * d);
        adam.reset_rows("codebook", k, d);
        last_used[k] = step;
        ++log.reseeded;
      }
      clip_codebook(cb, cfg.rho);
    }

    window_loss += g.scalar(loss.total);
    ++window_n;
    if (step % opt.log_every == 0 || step == opt.steps) {
      log.steps.push_back(step);
      log.loss.push_back(window_loss / static_cast<double>(window_n));
      log.max_norm_sq.push_back(max_code_norm_sq(codec.codebook()));
      window_loss = 0;
      window_n = 0;
    }
  }
  codec.params().freeze();
  return log;
}

/// Reconstruction MSE of encode → quantize → decode on normalized rows.
inline double reconstruction_mse(const ModalityCodec& codec, const std::vector<Vec>& normalized_rows) {
  const auto z = codec.encode_normalized(normalized_rows);
  const auto q = codec.quantize(z);
  const auto xh = codec.decode_normalized(q.codes, normalized_rows.size());
  double acc = 0;
  std::size_t n = 0;
  for (std::size_t r = 0; r < normalized_rows.size(); ++r)
    for (std::size_t i = 0; i < codec.input_dim(); ++i, ++n) {
      const double diff = xh[r][i] - normalized_rows[r][i];
      acc += diff * diff;
    }
  return acc / static_cast<double>(n);
}

/// State and action codecs of one task.
struct TaskCodec {
  int task_id = 0;
  ModalityCodec state;
  ModalityCodec action;

  const ModalityCodec& of(Modality m) const { return m == Modality::state ? state : action; }
  ModalityCodec& of(Modality m) { return m == Modality::state ? state : action; }

  /// Raw states → aligned (quantized) features, n × state_feature_dim.
  std::vector<real> align(Modality m, const std::vector<Vec>& raw) const {
    const auto& c = of(m);
    return c.quantize(c.encode_raw(raw)).codes;
  }
};

inline void save_codec(const std::string& path, const TaskCodec& codec, const CheckpointMeta& meta) {
  ParameterStore<real> store;
  codec.state.export_to(store, "state.");
  codec.action.export_to(store, "action.");
  save_checkpoint(path, store, meta);
}

inline TaskCodec load_codec(const std::string& path, CheckpointMeta* meta = nullptr) {
  CheckpointMeta m;
  auto store = load_checkpoint<real>(path, &m);
  TaskCodec c;
  c.task_id = static_cast<int>(m.task_id);
  c.state = ModalityCodec::import_from(store, "state.");
  c.action = ModalityCodec::import_from(store, "action.");
  if (meta) *meta = m;
  return c;
}

/// Per-task codecs; adding a task never touches existing entries.
class CodecRegistry {
 public:
  void add(TaskCodec codec) {
    const int id = codec.task_id;
    if (!codecs_.emplace(id, std::move(codec)).second)
      throw InvariantError("codec for task " + std::to_string(id) + " already registered");
  }
  bool contains(int task) const { return codecs_.count(task) != 0; }
  const TaskCodec& at(int task) const {
    auto it = codecs_.find(task);
    if (it == codecs_.end()) throw PipelineError("qsa", "no codec for task " + std::to_string(task));
    return it->second;
  }
  std::size_t size() const { return codecs_.size(); }

 private:
  std::map<int, TaskCodec> codecs_;
};

}  // namespace vqcd

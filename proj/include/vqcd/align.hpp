#pragma once

// Maps one task's raw states/actions to the shared diffusion feature space
// and back. Two backends: the task's VQ codecs (features are code vectors
// scaled by 1/√ρ) or the zero-padding baseline (normalized raw values padded
// to the widest task).

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "vqcd/vq.hpp"

namespace vqcd {

enum class Alignment { vq, padding };

inline std::string to_string(Alignment a) { return a == Alignment::vq ? "vq" : "padding"; }
inline Alignment parse_alignment(const std::string& s) {
  if (s == "vq") return Alignment::vq;
  if (s == "padding") return Alignment::padding;
  throw ConfigError("alignment must be vq or padding, got '" + s + "'");
}

class FeatureMap {
 public:
  /// VQ backend; the codec must outlive the map.
  FeatureMap(const TaskCodec& codec, const VQConfig& cfg)
      : kind_(Alignment::vq), task_id_(codec.task_id), codec_(&codec), scale_(1.0 / std::sqrt(cfg.rho)),
        d_s_(codec.state.input_dim()), d_a_(codec.action.input_dim()),
        ws_(codec.state.feature_dim()), wa_(codec.action.feature_dim()) {}

  /// Padding backend from the dataset's per-dimension bounds.
  FeatureMap(int task_id, Normalizer state_norm, Normalizer action_norm, std::size_t state_width,
             std::size_t action_width)
      : kind_(Alignment::padding), task_id_(task_id), state_norm_(std::move(state_norm)),
        action_norm_(std::move(action_norm)), d_s_(state_norm_.lo.size()), d_a_(action_norm_.lo.size()),
        ws_(state_width), wa_(action_width) {
    if (d_s_ > ws_ || d_a_ > wa_) throw ConfigError("padding width smaller than task dimension");
  }

  Alignment kind() const { return kind_; }
  int task_id() const { return task_id_; }
  std::size_t state_dim() const { return d_s_; }
  std::size_t action_dim() const { return d_a_; }
  std::size_t state_width() const { return ws_; }
  std::size_t action_width() const { return wa_; }

  std::vector<real> encode_states(const std::vector<Vec>& raw) const { return encode(raw, Modality::state); }
  std::vector<real> encode_actions(const std::vector<Vec>& raw) const { return encode(raw, Modality::action); }
  std::vector<Vec> decode_states(const std::vector<real>& f, std::size_t n) const {
    return decode(f, n, Modality::state);
  }
  std::vector<Vec> decode_actions(const std::vector<real>& f, std::size_t n) const {
    return decode(f, n, Modality::action);
  }

 private:
  std::vector<real> encode(const std::vector<Vec>& raw, Modality m) const {
    const std::size_t d = m == Modality::state ? d_s_ : d_a_, w = m == Modality::state ? ws_ : wa_;
    for (const auto& r : raw)
      if (r.size() != d)
        throw DimensionError("task " + std::to_string(task_id_) + " " + to_string(m) + " dim is " +
                             std::to_string(d) + ", got " + std::to_string(r.size()));
    if (kind_ == Alignment::vq) {
      auto z = codec_->align(m, raw);
      for (auto& v : z) v = static_cast<real>(v * scale_);
      return z;
    }
    const auto& nz = m == Modality::state ? state_norm_ : action_norm_;
    std::vector<real> out;
    out.reserve(raw.size() * w);
    for (const auto& r : raw) {
      const auto y = pad_align(nz.normalize(r), w);
      for (double v : y) out.push_back(static_cast<real>(std::clamp(v, -1.0, 1.0)));
    }
    return out;
  }

  std::vector<Vec> decode(const std::vector<real>& f, std::size_t n, Modality m) const {
    const std::size_t d = m == Modality::state ? d_s_ : d_a_, w = m == Modality::state ? ws_ : wa_;
    if (f.size() != n * w) throw DimensionError("decode: feature block has wrong size");
    if (kind_ == Alignment::vq) {
      // unscale and snap to the nearest code before decoding
      std::vector<real> z(f.size());
      for (std::size_t i = 0; i < f.size(); ++i) z[i] = static_cast<real>(f[i] / scale_);
      const auto& c = codec_->of(m);
      return c.decode_raw(c.quantize(z).codes, n);
    }
    const auto& nz = m == Modality::state ? state_norm_ : action_norm_;
    std::vector<Vec> out;
    for (std::size_t b = 0; b < n; ++b) {
      Vec y(d);
      for (std::size_t i = 0; i < d; ++i) y[i] = f[b * w + i];
      out.push_back(nz.denormalize(y));
    }
    return out;
  }

  Alignment kind_;
  int task_id_;
  const TaskCodec* codec_ = nullptr;
  double scale_ = 1.0;
  Normalizer state_norm_, action_norm_;
  std::size_t d_s_, d_a_, ws_, wa_;
};

}  // namespace vqcd

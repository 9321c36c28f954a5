#pragma once

// Temporal U-net noise predictor over [batch × features × horizon] sequences.
// Two resolution levels of residual conv blocks with skip concatenation; the
// temporal axis is never down-sampled (horizon 8 is already short). A
// diffusion-step embedding (f_time) and a return embedding (f_return) are
// summed and injected into every block.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "vqcd/layers.hpp"

namespace vqcd {

struct UnetConfig {
  std::size_t features = 30;  // aligned state + action width
  std::size_t horizon = 8;
  std::size_t hidden = 256;   // widest channel count; the outer level uses hidden / 2
  std::size_t emb_dim = 64;
  std::size_t kernel = 5;
  std::size_t groups = 8;

  void validate() const {
    if (features == 0 || horizon == 0) throw ConfigError("unet: empty sequence shape");
    if (kernel % 2 == 0) throw ConfigError("unet.kernel must be odd");
    if (hidden % 2 || (hidden / 2) % groups)
      throw ConfigError("unet.hidden / 2 must be divisible by unet.groups");
    if (emb_dim < 2 || emb_dim % 2) throw ConfigError("unet.emb_dim must be even and >= 2");
  }
};

template <class Real>
struct ResBlock {
  Conv1d<Real> conv1, conv2, skip;
  GroupNorm<Real> norm1, norm2;
  Dense<Real> emb;
  bool has_skip = false;

  ResBlock() = default;
  ResBlock(ParameterStore<Real>& s, const std::string& n, std::size_t in, std::size_t out,
           const UnetConfig& c, std::mt19937_64& rng)
      : conv1(s, n + ".conv1", in, out, c.kernel, rng),
        conv2(s, n + ".conv2", out, out, c.kernel, rng),
        norm1(s, n + ".norm1", out, c.groups),
        norm2(s, n + ".norm2", out, c.groups),
        emb(s, n + ".emb", c.emb_dim, out, rng),
        has_skip(in != out) {
    if (has_skip) skip = Conv1d<Real>(s, n + ".skip", in, out, 1, rng);
  }

  Var operator()(Binder<Real>& p, Var x, Var e) const {
    auto& g = p.graph();
    Var h = g.mish(norm1(p, conv1(p, x)));
    h = g.add_channel(h, emb(p, e));
    h = g.mish(norm2(p, conv2(p, h)));
    return g.add(h, has_skip ? skip(p, x) : x);
  }
};

template <class Real>
class TemporalUnet {
 public:
  TemporalUnet() = default;
  TemporalUnet(ParameterStore<Real>& store, const UnetConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    const std::size_t c1 = cfg.hidden / 2, c2 = cfg.hidden, e = cfg.emb_dim;
    time1_ = Dense<Real>(store, "f_time.fc1", e, 2 * e, rng);
    time2_ = Dense<Real>(store, "f_time.fc2", 2 * e, e, rng);
    ret1_ = Dense<Real>(store, "f_return.fc1", 1, e, rng);
    ret2_ = Dense<Real>(store, "f_return.fc2", e, e, rng);
    down1_ = ResBlock<Real>(store, "unet.down1", cfg.features, c1, cfg, rng);
    down2_ = ResBlock<Real>(store, "unet.down2", c1, c2, cfg, rng);
    mid_ = ResBlock<Real>(store, "unet.mid", c2, c2, cfg, rng);
    up2_ = ResBlock<Real>(store, "unet.up2", 2 * c2, c1, cfg, rng);
    up1_ = ResBlock<Real>(store, "unet.up1", 2 * c1, c1, cfg, rng);
    out_ = Conv1d<Real>(store, "unet.out", c1, cfg.features, 1, rng);
  }

  const UnetConfig& config() const { return cfg_; }

  /// x: [batch × features × horizon]; steps: diffusion step per row;
  /// cond: return condition per row; keep: 0 replaces the row's return
  /// embedding by the null token (zero vector).
  Var operator()(Binder<Real>& p, Var x, const std::vector<double>& steps, const std::vector<Real>& cond,
                 const std::vector<std::uint8_t>& keep) const {
    auto& g = p.graph();
    const Shape xs = g.shape(x);
    const std::size_t batch = steps.size(), e = cfg_.emb_dim;
    if (xs.size() != 3 || xs[0] != batch || xs[1] != cfg_.features || xs[2] != cfg_.horizon)
      throw DimensionError("unet input " + shape_str(xs) + ", expected [" + std::to_string(batch) + "x" +
                           std::to_string(cfg_.features) + "x" + std::to_string(cfg_.horizon) + "]");
    if (cond.size() != batch || keep.size() != batch)
      throw DimensionError("unet: condition batch differs from input batch");

    Var te = g.input({batch, e}, sinusoidal_embedding<Real>(steps, e));
    te = time2_(p, g.mish(time1_(p, te)));
    Var re = ret2_(p, g.mish(ret1_(p, g.input({batch, 1}, cond))));
    std::vector<Real> null_mask(batch * e);
    for (std::size_t b = 0; b < batch; ++b)
      std::fill_n(null_mask.begin() + b * e, e, keep[b] ? Real(1) : Real(0));
    re = g.mul_const(re, std::move(null_mask));
    Var emb = g.mish(g.add(te, re));

    Var h1 = down1_(p, x, emb);
    Var h2 = down2_(p, h1, emb);
    Var m = mid_(p, h2, emb);
    Var u2 = up2_(p, g.concat_channels(m, h2), emb);
    Var u1 = up1_(p, g.concat_channels(u2, h1), emb);
    return out_(p, u1);
  }

 private:
  UnetConfig cfg_;
  Dense<Real> time1_, time2_, ret1_, ret2_;
  ResBlock<Real> down1_, down2_, mid_, up2_, up1_;
  Conv1d<Real> out_;
};

}  // namespace vqcd

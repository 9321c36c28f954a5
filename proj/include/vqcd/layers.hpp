#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "vqcd/graph.hpp"

namespace vqcd {

/// Per-parameter binary masks keyed by parameter name (unpacked, one byte
/// per entry).
using MaskBits = std::map<std::string, std::vector<std::uint8_t>>;

/// Resolves parameter names to graph leaves, applying a mask when given.
template <class Real>
class Binder {
 public:
  Binder(Graph<Real>& g, ParameterStore<Real>& store, const MaskBits* masks = nullptr)
      : g_(g), store_(store), masks_(masks) {}

  Graph<Real>& graph() { return g_; }

  Var operator()(const std::string& name) {
    auto& t = store_.at(name);
    const std::vector<std::uint8_t>* m = nullptr;
    if (masks_) {
      auto it = masks_->find(name);
      if (it == masks_->end()) throw InvariantError("mask has no entry for parameter " + name);
      if (it->second.size() != t.size())
        throw InvariantError("mask/parameter shape mismatch for " + name);
      m = &it->second;
    }
    return g_.param(t, m, store_.trainable(name));
  }

 private:
  Graph<Real>& g_;
  ParameterStore<Real>& store_;
  const MaskBits* masks_;
};

namespace detail {
template <class Real>
Tensor<Real> uniform_tensor(Shape shape, double bound, std::mt19937_64& rng) {
  Tensor<Real> t(std::move(shape));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (auto& v : t.data) v = static_cast<Real>(u(rng));
  return t;
}
}  // namespace detail

/// Fully connected layer: name.weight [in×out], name.bias [out].
template <class Real>
struct Dense {
  std::string name;
  std::size_t in = 0, out = 0;

  Dense() = default;
  Dense(ParameterStore<Real>& store, std::string n, std::size_t in_dim, std::size_t out_dim,
        std::mt19937_64& rng)
      : name(std::move(n)), in(in_dim), out(out_dim) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
    store.add(name + ".weight", detail::uniform_tensor<Real>({in, out}, bound, rng));
    store.add(name + ".bias", detail::uniform_tensor<Real>({out}, bound, rng));
  }

  Var operator()(Binder<Real>& p, Var x) const {
    return p.graph().dense(x, p(name + ".weight"), p(name + ".bias"));
  }
};

/// Same-padded temporal convolution: name.weight [out×in×k], name.bias [out].
template <class Real>
struct Conv1d {
  std::string name;
  std::size_t in = 0, out = 0, kernel = 0;

  Conv1d() = default;
  Conv1d(ParameterStore<Real>& store, std::string n, std::size_t in_ch, std::size_t out_ch,
         std::size_t k, std::mt19937_64& rng)
      : name(std::move(n)), in(in_ch), out(out_ch), kernel(k) {
    if (k % 2 == 0) throw ConfigError("conv1d " + name + ": kernel size must be odd");
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_ch * k));
    store.add(name + ".weight", detail::uniform_tensor<Real>({out, in, k}, bound, rng));
    store.add(name + ".bias", detail::uniform_tensor<Real>({out}, bound, rng));
  }

  Var operator()(Binder<Real>& p, Var x) const {
    return p.graph().conv1d(x, p(name + ".weight"), p(name + ".bias"));
  }
};

/// Group norm whose learned scale is stored as an offset from 1
/// (name.gain, zero-initialized): a zeroed gain entry then leaves the channel
/// at unit scale instead of silencing it, which keeps channels alive under
/// sparse per-task masks.
template <class Real>
struct GroupNorm {
  std::string name;
  std::size_t channels = 0, groups = 1;

  GroupNorm() = default;
  GroupNorm(ParameterStore<Real>& store, std::string n, std::size_t ch, std::size_t g)
      : name(std::move(n)), channels(ch), groups(g) {
    if (g == 0 || ch % g != 0)
      throw ConfigError("group norm " + name + ": " + std::to_string(ch) +
                        " channels not divisible by " + std::to_string(g) + " groups");
    store.add(name + ".gain", Tensor<Real>({ch}, Real(0)));
    store.add(name + ".shift", Tensor<Real>({ch}, Real(0)));
  }

  Var operator()(Binder<Real>& p, Var x) const {
    auto& g = p.graph();
    Var scale = g.add(p(name + ".gain"), g.input({channels}, std::vector<Real>(channels, Real(1))));
    return g.group_norm(x, groups, scale, p(name + ".shift"));
  }
};

/// Sinusoidal features of a scalar (diffusion step) per batch row: [batch×dim].
template <class Real>
std::vector<Real> sinusoidal_embedding(const std::vector<double>& values, std::size_t dim) {
  const std::size_t half = dim / 2;
  std::vector<Real> out(values.size() * dim, Real(0));
  const double scale = half > 1 ? std::log(10000.0) / static_cast<double>(half - 1) : 0.0;
  for (std::size_t r = 0; r < values.size(); ++r)
    for (std::size_t i = 0; i < half; ++i) {
      const double f = std::exp(-scale * static_cast<double>(i));
      out[r * dim + i] = static_cast<Real>(std::sin(values[r] * f));
      out[r * dim + half + i] = static_cast<Real>(std::cos(values[r] * f));
    }
  return out;
}

}  // namespace vqcd

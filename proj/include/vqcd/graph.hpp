#pragma once

// Define-by-run reverse-mode differentiation over dense row-major arrays.
// A Graph is rebuilt for every forward pass; nodes are appended in
// evaluation order, so reverse iteration is a valid topological order and
// cycles cannot be expressed.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "vqcd/param_store.hpp"
#include "vqcd/tensor.hpp"

namespace vqcd {

struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

enum class Activation { mish, silu };

template <class Real>
class Graph {
  using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MapC = Eigen::Map<const Mat>;
  using MapM = Eigen::Map<Mat>;

  struct Node {
    Shape shape;
    std::vector<Real> value;
    std::vector<Real> grad;
    bool requires_grad = false;
    std::function<void()> back;
    Tensor<Real>* sink = nullptr;
    const std::vector<std::uint8_t>* mask = nullptr;
  };

 public:
  /// With recording disabled, ops compute values only (inference passes).
  explicit Graph(bool record = true) : record_(record) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const { return record_; }
  std::size_t node_count() const { return nodes_.size(); }

  const Shape& shape(Var v) const { return nodes_.at(v.id).shape; }
  const std::vector<Real>& value(Var v) const { return nodes_.at(v.id).value; }
  /// Gradient of the last backward() target with respect to v (zeros if v
  /// did not reach it).
  std::vector<Real> grad(Var v) const {
    const auto& n = nodes_.at(v.id);
    if (n.grad.empty()) return std::vector<Real>(n.value.size(), Real(0));
    return n.grad;
  }
  Real scalar(Var v) const {
    const auto& n = nodes_.at(v.id);
    if (n.value.size() != 1) throw DimensionError("scalar() on " + shape_str(n.shape));
    return n.value[0];
  }

  Var input(Shape s, std::vector<Real> data, bool requires_grad = false) {
    if (numel(s) != data.size())
      throw DimensionError("input shape " + shape_str(s) + " vs " +
                           std::to_string(data.size()) + " values");
    return make(std::move(s), std::move(data), requires_grad && record_);
  }

  /// Leaf bound to a stored parameter. With a mask, the node holds the
  /// elementwise product mask ∘ W and the gradient written back to the
  /// parameter is masked the same way, so masked entries receive exactly 0.
  Var param(Tensor<Real>& t, const std::vector<std::uint8_t>* mask = nullptr,
            bool trainable = true) {
    std::vector<Real> v = t.data;
    if (mask) {
      if (mask->size() != v.size())
        throw InvariantError("mask of " + std::to_string(mask->size()) +
                             " entries for parameter " + shape_str(t.shape));
      for (std::size_t i = 0; i < v.size(); ++i)
        if (!(*mask)[i]) v[i] = Real(0);
    }
    Var out = make(t.shape, std::move(v), record_ && trainable);
    if (record_ && trainable) {
      nodes_[out.id].sink = &t;
      nodes_[out.id].mask = mask;
    }
    return out;
  }

  // y = x·w + b for x [batch×in], w [in×out], b [out]
  Var dense(Var x, Var w, Var b) {
    const Shape xs = shape(x), ws = shape(w), bs = shape(b);
    if (xs.size() != 2 || ws.size() != 2 || xs[1] != ws[0] || bs.size() != 1 ||
        bs[0] != ws[1])
      throw DimensionError("dense: x " + shape_str(xs) + " w " + shape_str(ws) +
                           " b " + shape_str(bs));
    const std::size_t batch = xs[0], in = xs[1], out_dim = ws[1];
    std::vector<Real> y(batch * out_dim);
    {
      MapC X(value(x).data(), batch, in);
      MapC W(value(w).data(), in, out_dim);
      MapM Y(y.data(), batch, out_dim);
      Y.noalias() = X * W;
      const auto& bv = value(b);
      for (std::size_t r = 0; r < batch; ++r)
        for (std::size_t c = 0; c < out_dim; ++c) Y(r, c) += bv[c];
    }
    Var out = make({batch, out_dim}, std::move(y), any_grad({x, w, b}));
    if (needs(out)) {
      set_back(out, [this, x, w, b, out, batch, in, out_dim] {
        MapC G(nodes_[out.id].grad.data(), batch, out_dim);
        if (needs(x)) {
          MapM GX(grad_buf(x).data(), batch, in);
          GX.noalias() += G * MapC(value(w).data(), in, out_dim).transpose();
        }
        if (needs(w)) {
          MapM GW(grad_buf(w).data(), in, out_dim);
          GW.noalias() += MapC(value(x).data(), batch, in).transpose() * G;
        }
        if (needs(b)) {
          auto& gb = grad_buf(b);
          for (std::size_t c = 0; c < out_dim; ++c) {
            double acc = 0;
            for (std::size_t r = 0; r < batch; ++r) acc += G(r, c);
            gb[c] += static_cast<Real>(acc);
          }
        }
      });
    }
    return out;
  }

  // Same-padded cross-correlation: y[b,o,t] = bias[o] + Σ_{c,j} w[o,c,j]·x[b,c,t+j−k/2]
  Var conv1d(Var x, Var w, Var b) {
    const Shape xs = shape(x), ws = shape(w), bs = shape(b);
    if (ws.size() != 3) throw DimensionError("conv1d: kernel " + shape_str(ws));
    if (ws[2] % 2 == 0)
      throw ConfigError("conv1d: kernel size must be odd, got " + std::to_string(ws[2]));
    if (xs.size() != 3 || xs[1] != ws[1] || bs.size() != 1 || bs[0] != ws[0])
      throw DimensionError("conv1d: x " + shape_str(xs) + " kernel " + shape_str(ws) +
                           " bias " + shape_str(bs));
    const std::size_t batch = xs[0], cin = xs[1], len = xs[2];
    const std::size_t cout = ws[0], k = ws[2];
    const std::size_t rows = cin * k, cols_n = batch * len;
    const long pad = static_cast<long>(k / 2);

    auto cols = std::make_shared<std::vector<Real>>(rows * cols_n, Real(0));
    {
      const auto& xv = value(x);
      for (std::size_t c = 0; c < cin; ++c)
        for (std::size_t j = 0; j < k; ++j) {
          Real* row = cols->data() + (c * k + j) * cols_n;
          const long shift = static_cast<long>(j) - pad;
          for (std::size_t bi = 0; bi < batch; ++bi) {
            const Real* xr = xv.data() + (bi * cin + c) * len;
            for (std::size_t t = 0; t < len; ++t) {
              const long src = static_cast<long>(t) + shift;
              if (src >= 0 && src < static_cast<long>(len)) row[bi * len + t] = xr[src];
            }
          }
        }
    }
    std::vector<Real> prod(cout * cols_n);
    MapM(prod.data(), cout, cols_n).noalias() =
        MapC(value(w).data(), cout, rows) * MapC(cols->data(), rows, cols_n);
    std::vector<Real> y(batch * cout * len);
    const auto& bv = value(b);
    for (std::size_t bi = 0; bi < batch; ++bi)
      for (std::size_t o = 0; o < cout; ++o)
        for (std::size_t t = 0; t < len; ++t)
          y[(bi * cout + o) * len + t] = prod[o * cols_n + bi * len + t] + bv[o];

    Var out = make({batch, cout, len}, std::move(y), any_grad({x, w, b}));
    if (needs(out)) {
      set_back(out, [this, x, w, b, out, cols, batch, cin, len, cout, k, rows, cols_n, pad] {
        const auto& gy = nodes_[out.id].grad;
        std::vector<Real> g(cout * cols_n);
        for (std::size_t bi = 0; bi < batch; ++bi)
          for (std::size_t o = 0; o < cout; ++o)
            for (std::size_t t = 0; t < len; ++t)
              g[o * cols_n + bi * len + t] = gy[(bi * cout + o) * len + t];
        MapC G(g.data(), cout, cols_n);
        if (needs(w)) {
          MapM GW(grad_buf(w).data(), cout, rows);
          GW.noalias() += G * MapC(cols->data(), rows, cols_n).transpose();
        }
        if (needs(b)) {
          auto& gb = grad_buf(b);
          for (std::size_t o = 0; o < cout; ++o) {
            double acc = 0;
            for (std::size_t i = 0; i < cols_n; ++i) acc += g[o * cols_n + i];
            gb[o] += static_cast<Real>(acc);
          }
        }
        if (needs(x)) {
          std::vector<Real> gcols(rows * cols_n);
          MapM(gcols.data(), rows, cols_n).noalias() =
              MapC(value(w).data(), cout, rows).transpose() * G;
          auto& gx = grad_buf(x);
          for (std::size_t c = 0; c < cin; ++c)
            for (std::size_t j = 0; j < k; ++j) {
              const Real* row = gcols.data() + (c * k + j) * cols_n;
              const long shift = static_cast<long>(j) - pad;
              for (std::size_t bi = 0; bi < batch; ++bi) {
                Real* gxr = gx.data() + (bi * cin + c) * len;
                for (std::size_t t = 0; t < len; ++t) {
                  const long src = static_cast<long>(t) + shift;
                  if (src >= 0 && src < static_cast<long>(len)) gxr[src] += row[bi * len + t];
                }
              }
            }
        }
      });
    }
    return out;
  }

  Var activation(Var x, Activation kind) {
    const auto& xv = value(x);
    std::vector<Real> y(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) y[i] = act_value(kind, xv[i]);
    Var out = make(shape(x), std::move(y), any_grad({x}));
    if (needs(out)) {
      set_back(out, [this, x, out, kind] {
        const auto& xv = value(x);
        const auto& gy = nodes_[out.id].grad;
        auto& gx = grad_buf(x);
        for (std::size_t i = 0; i < xv.size(); ++i) gx[i] += gy[i] * act_grad(kind, xv[i]);
      });
    }
    return out;
  }
  Var mish(Var x) { return activation(x, Activation::mish); }
  Var silu(Var x) { return activation(x, Activation::silu); }

  /// Group normalization over [batch×channels×len] (or [batch×channels]) with
  /// per-channel scale and shift.
  Var group_norm(Var x, std::size_t groups, Var gamma, Var beta, double eps = 1e-5) {
    const Shape xs = shape(x);
    if (xs.size() != 2 && xs.size() != 3)
      throw DimensionError("group_norm: input " + shape_str(xs));
    const std::size_t batch = xs[0], ch = xs[1], len = xs.size() == 3 ? xs[2] : 1;
    if (groups == 0 || ch % groups != 0)
      throw ConfigError("group_norm: " + std::to_string(ch) + " channels not divisible into " +
                        std::to_string(groups) + " groups");
    if (shape(gamma) != Shape{ch} || shape(beta) != Shape{ch})
      throw DimensionError("group_norm: scale " + shape_str(shape(gamma)) + " shift " +
                           shape_str(shape(beta)) + " for " + std::to_string(ch) + " channels");
    const std::size_t per = ch / groups, group_n = per * len;
    auto xhat = std::make_shared<std::vector<Real>>(batch * ch * len);
    auto inv_std = std::make_shared<std::vector<double>>(batch * groups);
    const auto& xv = value(x);
    const auto& gv = value(gamma);
    const auto& bv = value(beta);
    std::vector<Real> y(xv.size());
    for (std::size_t bi = 0; bi < batch; ++bi)
      for (std::size_t g = 0; g < groups; ++g) {
        const std::size_t base = (bi * ch + g * per) * len;
        double mean = 0;
        for (std::size_t i = 0; i < group_n; ++i) mean += xv[base + i];
        mean /= static_cast<double>(group_n);
        double var = 0;
        for (std::size_t i = 0; i < group_n; ++i) {
          const double d = xv[base + i] - mean;
          var += d * d;
        }
        var /= static_cast<double>(group_n);
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[bi * groups + g] = is;
        for (std::size_t i = 0; i < group_n; ++i) {
          const std::size_t c = g * per + i / len;
          const double h = (xv[base + i] - mean) * is;
          (*xhat)[base + i] = static_cast<Real>(h);
          y[base + i] = static_cast<Real>(h * gv[c] + bv[c]);
        }
      }
    Var out = make(xs, std::move(y), any_grad({x, gamma, beta}));
    if (needs(out)) {
      set_back(out, [this, x, gamma, beta, out, xhat, inv_std, batch, ch, len, groups, per,
                     group_n] {
        const auto& gy = nodes_[out.id].grad;
        const auto& gv = value(gamma);
        if (needs(gamma) || needs(beta)) {
          std::vector<double> dg(ch, 0.0), db(ch, 0.0);
          for (std::size_t bi = 0; bi < batch; ++bi)
            for (std::size_t c = 0; c < ch; ++c)
              for (std::size_t t = 0; t < len; ++t) {
                const std::size_t i = (bi * ch + c) * len + t;
                dg[c] += static_cast<double>(gy[i]) * (*xhat)[i];
                db[c] += gy[i];
              }
          if (needs(gamma)) {
            auto& gg = grad_buf(gamma);
            for (std::size_t c = 0; c < ch; ++c) gg[c] += static_cast<Real>(dg[c]);
          }
          if (needs(beta)) {
            auto& gb = grad_buf(beta);
            for (std::size_t c = 0; c < ch; ++c) gb[c] += static_cast<Real>(db[c]);
          }
        }
        if (needs(x)) {
          auto& gx = grad_buf(x);
          std::vector<double> dh(group_n);
          for (std::size_t bi = 0; bi < batch; ++bi)
            for (std::size_t g = 0; g < groups; ++g) {
              const std::size_t base = (bi * ch + g * per) * len;
              double s1 = 0, s2 = 0;
              for (std::size_t i = 0; i < group_n; ++i) {
                const std::size_t c = g * per + i / len;
                dh[i] = static_cast<double>(gy[base + i]) * gv[c];
                s1 += dh[i];
                s2 += dh[i] * (*xhat)[base + i];
              }
              const double is = (*inv_std)[bi * groups + g];
              const double n = static_cast<double>(group_n);
              for (std::size_t i = 0; i < group_n; ++i)
                gx[base + i] += static_cast<Real>(is * (dh[i] - s1 / n - (*xhat)[base + i] * s2 / n));
            }
        }
      });
    }
    return out;
  }

  Var add(Var a, Var b) {
    require_same(a, b, "add");
    std::vector<Real> y = value(a);
    const auto& bv = value(b);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
    Var out = make(shape(a), std::move(y), any_grad({a, b}));
    if (needs(out)) {
      set_back(out, [this, a, b, out] {
        const auto& gy = nodes_[out.id].grad;
        for (Var v : {a, b})
          if (needs(v)) {
            auto& g = grad_buf(v);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += gy[i];
          }
      });
    }
    return out;
  }

  Var sub(Var a, Var b) { return add(a, scale(b, Real(-1))); }

  Var scale(Var x, Real s) {
    std::vector<Real> y = value(x);
    for (auto& v : y) v *= s;
    Var out = make(shape(x), std::move(y), any_grad({x}));
    if (needs(out)) {
      set_back(out, [this, x, out, s] {
        const auto& gy = nodes_[out.id].grad;
        auto& g = grad_buf(x);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * gy[i];
      });
    }
    return out;
  }

  /// Elementwise product with a constant array of the same size.
  Var mul_const(Var x, std::vector<Real> c) {
    if (c.size() != value(x).size())
      throw DimensionError("mul_const: " + shape_str(shape(x)) + " vs " +
                           std::to_string(c.size()) + " constants");
    std::vector<Real> y = value(x);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] *= c[i];
    Var out = make(shape(x), std::move(y), any_grad({x}));
    if (needs(out)) {
      set_back(out, [this, x, out, c = std::move(c)] {
        const auto& gy = nodes_[out.id].grad;
        auto& g = grad_buf(x);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += c[i] * gy[i];
      });
    }
    return out;
  }

  /// x [batch×ch×len] plus e [batch×ch] broadcast along len.
  Var add_channel(Var x, Var e) {
    const Shape xs = shape(x), es = shape(e);
    if (xs.size() != 3 || es.size() != 2 || es[0] != xs[0] || es[1] != xs[1])
      throw DimensionError("add_channel: x " + shape_str(xs) + " e " + shape_str(es));
    const std::size_t rows = xs[0] * xs[1], len = xs[2];
    std::vector<Real> y = value(x);
    const auto& ev = value(e);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t t = 0; t < len; ++t) y[r * len + t] += ev[r];
    Var out = make(xs, std::move(y), any_grad({x, e}));
    if (needs(out)) {
      set_back(out, [this, x, e, out, rows, len] {
        const auto& gy = nodes_[out.id].grad;
        if (needs(x)) {
          auto& g = grad_buf(x);
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += gy[i];
        }
        if (needs(e)) {
          auto& g = grad_buf(e);
          for (std::size_t r = 0; r < rows; ++r) {
            double acc = 0;
            for (std::size_t t = 0; t < len; ++t) acc += gy[r * len + t];
            g[r] += static_cast<Real>(acc);
          }
        }
      });
    }
    return out;
  }

  /// Concatenate [batch×c1×len] and [batch×c2×len] along channels.
  Var concat_channels(Var a, Var b) {
    const Shape as = shape(a), bs = shape(b);
    if (as.size() != 3 || bs.size() != 3 || as[0] != bs[0] || as[2] != bs[2])
      throw DimensionError("concat_channels: " + shape_str(as) + " and " + shape_str(bs));
    const std::size_t batch = as[0], ca = as[1] * as[2], cb = bs[1] * bs[2];
    std::vector<Real> y(batch * (ca + cb));
    const auto& av = value(a);
    const auto& bv = value(b);
    for (std::size_t bi = 0; bi < batch; ++bi) {
      std::copy_n(av.data() + bi * ca, ca, y.data() + bi * (ca + cb));
      std::copy_n(bv.data() + bi * cb, cb, y.data() + bi * (ca + cb) + ca);
    }
    Var out = make({batch, as[1] + bs[1], as[2]}, std::move(y), any_grad({a, b}));
    if (needs(out)) {
      set_back(out, [this, a, b, out, batch, ca, cb] {
        const auto& gy = nodes_[out.id].grad;
        if (needs(a)) {
          auto& g = grad_buf(a);
          for (std::size_t bi = 0; bi < batch; ++bi)
            for (std::size_t i = 0; i < ca; ++i) g[bi * ca + i] += gy[bi * (ca + cb) + i];
        }
        if (needs(b)) {
          auto& g = grad_buf(b);
          for (std::size_t bi = 0; bi < batch; ++bi)
            for (std::size_t i = 0; i < cb; ++i) g[bi * cb + i] += gy[bi * (ca + cb) + ca + i];
        }
      });
    }
    return out;
  }

  Var reshape(Var x, Shape s) {
    if (numel(s) != value(x).size())
      throw DimensionError("reshape: " + shape_str(shape(x)) + " to " + shape_str(s));
    Var out = make(std::move(s), value(x), any_grad({x}));
    if (needs(out)) {
      set_back(out, [this, x, out] {
        const auto& gy = nodes_[out.id].grad;
        auto& g = grad_buf(x);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += gy[i];
      });
    }
    return out;
  }

  /// Rows of table [n×d] selected by index; gradient scatters back.
  Var gather_rows(Var table, std::vector<std::size_t> idx) {
    const Shape ts = shape(table);
    if (ts.size() != 2) throw DimensionError("gather_rows: table " + shape_str(ts));
    const std::size_t d = ts[1];
    std::vector<Real> y(idx.size() * d);
    const auto& tv = value(table);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      if (idx[r] >= ts[0]) throw DimensionError("gather_rows: index out of range");
      std::copy_n(tv.data() + idx[r] * d, d, y.data() + r * d);
    }
    Var out = make({idx.size(), d}, std::move(y), any_grad({table}));
    if (needs(out)) {
      set_back(out, [this, table, out, d, idx = std::move(idx)] {
        const auto& gy = nodes_[out.id].grad;
        auto& g = grad_buf(table);
        for (std::size_t r = 0; r < idx.size(); ++r)
          for (std::size_t c = 0; c < d; ++c) g[idx[r] * d + c] += gy[r * d + c];
      });
    }
    return out;
  }

  /// Stop-gradient copy.
  Var detach(Var x) { return make(shape(x), value(x), false); }

  /// Forward value is `replacement`; gradient flows to x as identity
  /// (straight-through estimator).
  Var straight_through(Var x, std::vector<Real> replacement) {
    if (replacement.size() != value(x).size())
      throw DimensionError("straight_through: size mismatch");
    Var out = make(shape(x), std::move(replacement), any_grad({x}));
    if (needs(out)) {
      set_back(out, [this, x, out] {
        const auto& gy = nodes_[out.id].grad;
        auto& g = grad_buf(x);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += gy[i];
      });
    }
    return out;
  }

  /// mean((a − b)²) as a scalar.
  Var mse(Var a, Var b) {
    require_same(a, b, "mse");
    const auto& av = value(a);
    const auto& bv = value(b);
    double acc = 0;
    for (std::size_t i = 0; i < av.size(); ++i) {
      const double d = static_cast<double>(av[i]) - bv[i];
      acc += d * d;
    }
    const double n = static_cast<double>(av.size());
    Var out = make({1}, {static_cast<Real>(acc / n)}, any_grad({a, b}));
    if (needs(out)) {
      set_back(out, [this, a, b, out, n] {
        const Real gy = nodes_[out.id].grad[0];
        const auto& av = value(a);
        const auto& bv = value(b);
        const Real s = static_cast<Real>(2.0 / n) * gy;
        if (needs(a)) {
          auto& g = grad_buf(a);
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * (av[i] - bv[i]);
        }
        if (needs(b)) {
          auto& g = grad_buf(b);
          for (std::size_t i = 0; i < g.size(); ++i) g[i] -= s * (av[i] - bv[i]);
        }
      });
    }
    return out;
  }

  Var sum(Var x) {
    double acc = 0;
    for (Real v : value(x)) acc += v;
    Var out = make({1}, {static_cast<Real>(acc)}, any_grad({x}));
    if (needs(out)) {
      set_back(out, [this, x, out] {
        const Real gy = nodes_[out.id].grad[0];
        auto& g = grad_buf(x);
        for (auto& v : g) v += gy;
      });
    }
    return out;
  }

  Var mean(Var x) { return scale(sum(x), Real(1) / static_cast<Real>(value(x).size())); }

  /// Reverse-mode accumulation from a scalar. Gradients of bound parameters
  /// are added into their tensors' grad buffers.
  void backward(Var loss) {
    if (!record_) throw InvariantError("backward on a non-recording graph");
    auto& root = nodes_.at(loss.id);
    if (root.value.size() != 1)
      throw DimensionError("backward: loss must be scalar, got " + shape_str(root.shape));
    for (auto& n : nodes_) n.grad.clear();
    if (!root.requires_grad) return;
    root.grad.assign(1, Real(1));
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      Node& n = nodes_[i];
      if (n.grad.empty()) continue;
      if (n.back) n.back();
      if (n.sink) {
        auto& g = n.sink->grad;
        if (g.empty()) g.assign(n.value.size(), Real(0));
        if (n.mask) {
          for (std::size_t j = 0; j < g.size(); ++j)
            if ((*n.mask)[j]) g[j] += n.grad[j];
        } else {
          for (std::size_t j = 0; j < g.size(); ++j) g[j] += n.grad[j];
        }
      }
    }
  }

  static Real act_value(Activation kind, Real x) {
    using std::exp;
    if (kind == Activation::silu) return x / (Real(1) + exp(-x));
    if (x > Real(20)) return x;
    // tanh(softplus(x)) = n / (n + 2) with n = eˣ(eˣ + 2)
    const Real e = exp(x);
    const Real n = e * (e + Real(2));
    return x * n / (n + Real(2));
  }
  static Real act_grad(Activation kind, Real x) {
    using std::exp;
    if (kind == Activation::silu) {
      const Real sig = Real(1) / (Real(1) + exp(-x));
      return sig * (Real(1) + x * (Real(1) - sig));
    }
    if (x > Real(20)) return Real(1);
    const Real e = exp(x);
    const Real n = e * (e + Real(2));
    const Real th = n / (n + Real(2));
    const Real sig = e / (Real(1) + e);
    return th + x * (Real(1) - th * th) * sig;
  }

 private:
  Var make(Shape s, std::vector<Real> v, bool requires_grad) {
    Node n;
    n.shape = std::move(s);
    n.value = std::move(v);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
  }

  bool needs(Var v) const { return nodes_[v.id].requires_grad; }
  bool any_grad(std::initializer_list<Var> vs) const {
    if (!record_) return false;
    for (Var v : vs)
      if (needs(v)) return true;
    return false;
  }
  void set_back(Var v, std::function<void()> fn) { nodes_[v.id].back = std::move(fn); }

  std::vector<Real>& grad_buf(Var v) {
    auto& n = nodes_[v.id];
    if (n.grad.empty()) n.grad.assign(n.value.size(), Real(0));
    return n.grad;
  }

  void require_same(Var a, Var b, const char* op) const {
    if (shape(a) != shape(b))
      throw DimensionError(std::string(op) + ": " + shape_str(shape(a)) + " vs " +
                           shape_str(shape(b)));
  }

  bool record_;
  std::vector<Node> nodes_;
};

/// Zero-fills every trainable gradient in `store`, then backpropagates, so
/// parameters that do not reach `loss` end with an exact zero gradient.
template <class Real>
void backward(Graph<Real>& g, Var loss, ParameterStore<Real>& store) {
  store.zero_grad();
  g.backward(loss);
}

}  // namespace vqcd

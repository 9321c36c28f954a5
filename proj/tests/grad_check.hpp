#pragma once

#include <functional>
#include <random>
#include <vector>

#include "fd_oracle.hpp"
#include "vqcd/graph.hpp"

namespace vqcd::testing {

using OpBuilder = std::function<Var(Graph<double>&, const std::vector<Var>&)>;

/// Reverse-mode vs central-difference comparison of a multi-input op on a
/// random instance. The scalar objective is a fixed random projection of the
/// op output. Returns the worst relative error over all inputs.
inline double grad_check(const OpBuilder& op, const std::vector<Shape>& shapes,
                         std::uint64_t seed, double eps = 1e-5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<std::vector<double>> inputs;
  for (const auto& s : shapes) {
    std::vector<double> v(numel(s));
    for (auto& x : v) x = n01(rng);
    inputs.push_back(std::move(v));
  }
  std::vector<double> proj;
  auto evaluate = [&](const std::vector<std::vector<double>>& in, Graph<double>& g,
                      std::vector<Var>& vars) {
    vars.clear();
    for (std::size_t i = 0; i < in.size(); ++i) vars.push_back(g.input(shapes[i], in[i], true));
    Var out = op(g, vars);
    if (proj.empty()) {
      proj.resize(g.value(out).size());
      for (auto& p : proj) p = n01(rng);
    }
    return g.sum(g.mul_const(out, proj));
  };

  Graph<double> g;
  std::vector<Var> vars;
  Var loss = evaluate(inputs, g, vars);
  g.backward(loss);

  double worst = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto f = [&](const std::vector<double>& xi) {
      auto in = inputs;
      in[i] = xi;
      Graph<double> h(false);
      std::vector<Var> hv;
      return h.scalar(evaluate(in, h, hv));
    };
    const auto numeric = central_difference(f, inputs[i], eps);
    worst = std::max(worst, max_relative_error(g.grad(vars[i]), numeric));
  }
  return worst;
}

}  // namespace vqcd::testing

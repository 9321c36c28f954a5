#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "vqcd/error.hpp"

namespace vqcd {

/// Storage precision used by the training pipeline. Gradient checks
/// instantiate the tensor core with double instead.
using real = float;

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

/// Dense row-major array with an optional gradient buffer of the same shape.
template <class Real>
struct Tensor {
  Shape shape;
  std::vector<Real> data;
  std::vector<Real> grad;  // empty when no gradient has been populated

  Tensor() = default;
  explicit Tensor(Shape s, Real fill = Real(0))
      : shape(std::move(s)), data(numel(shape), fill) {}
  Tensor(Shape s, std::vector<Real> values)
      : shape(std::move(s)), data(std::move(values)) {
    if (numel(shape) != data.size())
      throw DimensionError("tensor shape " + shape_str(shape) + " holds " +
                           std::to_string(numel(shape)) + " values, got " +
                           std::to_string(data.size()));
  }

  std::size_t size() const { return data.size(); }
  bool has_grad() const { return !grad.empty(); }
  void zero_grad() { grad.assign(data.size(), Real(0)); }
};

}  // namespace vqcd

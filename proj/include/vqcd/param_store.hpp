#pragma once

#include <map>
#include <string>
#include <vector>

#include "vqcd/tensor.hpp"

namespace vqcd {

/// Named parameter tensors. Iteration is sorted by name, which fixes the
/// order in which optimizers and serializers visit entries.
template <class Real>
class ParameterStore {
 public:
  struct Entry {
    Tensor<Real> tensor;
    bool trainable = true;
  };
  using Map = std::map<std::string, Entry>;

  Tensor<Real>& add(const std::string& name, Tensor<Real> t,
                    bool trainable = true) {
    auto [it, inserted] = entries_.emplace(name, Entry{std::move(t), trainable});
    if (!inserted) throw InvariantError("duplicate parameter name: " + name);
    return it->second.tensor;
  }

  bool contains(const std::string& name) const {
    return entries_.count(name) != 0;
  }

  Tensor<Real>& at(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw InvariantError("unknown parameter: " + name);
    return it->second.tensor;
  }
  const Tensor<Real>& at(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw InvariantError("unknown parameter: " + name);
    return it->second.tensor;
  }

  bool trainable(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw InvariantError("unknown parameter: " + name);
    return it->second.trainable;
  }
  void set_trainable(const std::string& name, bool flag) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw InvariantError("unknown parameter: " + name);
    it->second.trainable = flag;
  }
  void freeze() {
    for (auto& [_, e] : entries_) e.trainable = false;
  }

  void zero_grad() {
    for (auto& [_, e] : entries_)
      if (e.trainable) e.tensor.zero_grad();
  }
  void clear_grad() {
    for (auto& [_, e] : entries_) e.tensor.grad.clear();
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [n, _] : entries_) out.push_back(n);
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& [_, e] : entries_) n += e.tensor.size();
    return n;
  }

  std::size_t size() const { return entries_.size(); }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  /// Value equality of every tensor (shape, data, trainable flag).
  bool same_values(const ParameterStore& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    auto a = entries_.begin();
    auto b = other.entries_.begin();
    for (; a != entries_.end(); ++a, ++b) {
      if (a->first != b->first || a->second.trainable != b->second.trainable ||
          a->second.tensor.shape != b->second.tensor.shape ||
          a->second.tensor.data != b->second.tensor.data)
        return false;
    }
    return true;
  }

 private:
  Map entries_;
};

}  // namespace vqcd

#pragma once

// Per-task binary parameter masks: generation from a shared capacity pool,
// application, assembling of masked checkpoints, and magnitude pruning.
//
// Mask file, version 1 (little-endian):
//   magic    8 bytes "VQCDMASK"
//   version  u32     1
//   task_id  i64
//   seed     u64     generation seed
//   extra    u32 length + UTF-8 JSON (provenance)
//   count    u32     entries, sorted by parameter name
//   entry:
//     name_len u32, name bytes
//     rank     u32, dims u64[rank]
//     nbits    u64     = prod(dims)
//     bits     ceil(nbits / 8) bytes; entry j is bit (j % 8) of byte j / 8

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "vqcd/checkpoint.hpp"
#include "vqcd/layers.hpp"

namespace vqcd {

struct TaskMask {
  int task_id = 0;
  std::uint64_t seed = 0;
  std::string extra;  // provenance JSON
  std::map<std::string, Shape> shapes;
  MaskBits bits;

  std::size_t active(const std::string& name) const {
    const auto& b = bits.at(name);
    return static_cast<std::size_t>(std::count(b.begin(), b.end(), std::uint8_t(1)));
  }
  std::size_t active() const {
    std::size_t n = 0;
    for (const auto& [name, b] : bits) n += active(name);
    return n;
  }
  bool operator==(const TaskMask&) const = default;
};

/// Free positions per parameter tensor, shared by all tasks of a run.
class CapacityLedger {
 public:
  CapacityLedger() = default;
  /// rate ≤ 0 selects the default 1/n_tasks.
  CapacityLedger(const std::map<std::string, Shape>& shapes, std::size_t n_tasks, double rate = 0)
      : n_tasks_(n_tasks), rate_(rate > 0 ? rate : 1.0 / static_cast<double>(n_tasks)) {
    if (n_tasks == 0) throw ConfigError("ledger: task count must be >= 1");
    if (rate_ > 1.0) throw ConfigError("ledger: mask rate must be <= 1");
    if (rate_ * static_cast<double>(n_tasks) > 1.0 + 1e-12)
      throw ConfigError("mask rate " + std::to_string(rate_) + " with " + std::to_string(n_tasks) +
                        " tasks exceeds capacity");
    for (const auto& [name, s] : shapes) {
      shapes_[name] = s;
      free_[name].assign(numel(s), 1);
    }
  }

  std::size_t n_tasks() const { return n_tasks_; }
  double rate() const { return rate_; }
  bool default_rate() const { return std::abs(rate_ * static_cast<double>(n_tasks_) - 1.0) < 1e-12; }
  const std::map<std::string, Shape>& shapes() const { return shapes_; }
  std::size_t total(const std::string& name) const { return free_.at(name).size(); }
  std::size_t remaining(const std::string& name) const {
    const auto& f = free_.at(name);
    return static_cast<std::size_t>(std::count(f.begin(), f.end(), std::uint8_t(1)));
  }
  const std::vector<std::uint8_t>& free_positions(const std::string& name) const { return free_.at(name); }

  /// Positions for task number `order` (0-based) of tensor `name`.
  std::size_t quota(const std::string& name, std::size_t order) const {
    const std::size_t n = total(name);
    if (default_rate()) return n / n_tasks_ + (order < n % n_tasks_ ? 1 : 0);
    return static_cast<std::size_t>(std::floor(rate_ * static_cast<double>(n)));
  }

  void take(const std::string& name, std::size_t pos) {
    auto& f = free_.at(name);
    if (!f.at(pos)) throw InvariantError("position " + std::to_string(pos) + " of " + name + " already owned");
    f[pos] = 0;
  }
  void release(const std::string& name, std::size_t pos) { free_.at(name).at(pos) = 1; }

  /// Rebuilds the pool from existing masks (used on resume).
  static CapacityLedger from_masks(const std::map<std::string, Shape>& shapes, std::size_t n_tasks, double rate,
                                   const std::vector<TaskMask>& masks) {
    CapacityLedger l(shapes, n_tasks, rate);
    for (const auto& m : masks)
      for (const auto& [name, b] : m.bits)
        for (std::size_t j = 0; j < b.size(); ++j)
          if (b[j]) l.take(name, j);
    return l;
  }

 private:
  std::size_t n_tasks_ = 1;
  double rate_ = 1.0;
  std::map<std::string, Shape> shapes_;
  std::map<std::string, std::vector<std::uint8_t>> free_;
};

template <class Real>
std::map<std::string, Shape> parameter_shapes(const ParameterStore<Real>& store) {
  std::map<std::string, Shape> out;
  for (const auto& [name, e] : store) out[name] = e.tensor.shape;
  return out;
}

/// Samples each tensor's quota uniformly without replacement from the free
/// pool. Deterministic in (seed, shapes, ledger state); tensors are visited
/// in name order from one generator.
inline TaskMask generate_mask(int task_id, std::size_t order, CapacityLedger& ledger, std::uint64_t seed) {
  TaskMask m;
  m.task_id = task_id;
  m.seed = seed;
  m.shapes = ledger.shapes();
  std::mt19937_64 rng(seed);
  // check every tensor before touching the ledger
  for (const auto& [name, s] : ledger.shapes())
    if (ledger.quota(name, order) > ledger.remaining(name))
      throw CapacityError("mask capacity exhausted for " + name + ": need " +
                          std::to_string(ledger.quota(name, order)) + ", " +
                          std::to_string(ledger.remaining(name)) + " free");
  for (const auto& [name, s] : ledger.shapes()) {
    const std::size_t q = ledger.quota(name, order);
    std::vector<std::size_t> pool;
    const auto& f = ledger.free_positions(name);
    for (std::size_t j = 0; j < f.size(); ++j)
      if (f[j]) pool.push_back(j);
    for (std::size_t i = 0; i < q; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    auto& b = m.bits[name];
    b.assign(f.size(), 0);
    for (std::size_t i = 0; i < q; ++i) {
      b[pool[i]] = 1;
      ledger.take(name, pool[i]);
    }
  }
  return m;
}

/// Every entry set (single-task or unmasked runs).
template <class Real>
TaskMask full_mask(int task_id, const ParameterStore<Real>& store) {
  TaskMask m;
  m.task_id = task_id;
  for (const auto& [name, e] : store) {
    m.shapes[name] = e.tensor.shape;
    m.bits[name].assign(e.tensor.size(), 1);
  }
  return m;
}

template <class Real>
Tensor<Real> apply_mask(const Tensor<Real>& w, const std::vector<std::uint8_t>& m) {
  if (m.size() != w.size())
    throw DimensionError("apply_mask: mask of " + std::to_string(m.size()) + " entries for " + shape_str(w.shape));
  Tensor<Real> out(w.shape);
  for (std::size_t i = 0; i < w.size(); ++i) out.data[i] = m[i] ? w.data[i] : Real(0);
  return out;
}

inline void check_disjoint(const std::vector<TaskMask>& masks) {
  std::map<std::string, std::vector<int>> owner;
  for (const auto& m : masks)
    for (const auto& [name, b] : m.bits) {
      auto& o = owner[name];
      if (o.empty()) o.assign(b.size(), -1);
      if (o.size() != b.size()) throw InvariantError("masks disagree on the size of " + name);
      for (std::size_t j = 0; j < b.size(); ++j)
        if (b[j]) {
          if (o[j] >= 0)
            throw InvariantError("masks of tasks " + std::to_string(o[j]) + " and " + std::to_string(m.task_id) +
                                 " overlap at " + name + "[" + std::to_string(j) + "]");
          o[j] = m.task_id;
        }
    }
}

/// Entrywise Σ_i M_i over a tensor.
inline std::vector<int> mask_coverage(const std::vector<TaskMask>& masks, const std::string& name) {
  std::vector<int> c;
  for (const auto& m : masks) {
    const auto& b = m.bits.at(name);
    if (c.empty()) c.assign(b.size(), 0);
    for (std::size_t j = 0; j < b.size(); ++j) c[j] += b[j];
  }
  return c;
}

/// W = Σ_i M_i ∘ W[i·Ω]. With disjoint masks at most one term is nonzero per
/// entry, so the owner's value is copied exactly; unowned entries are zero.
template <class Real>
ParameterStore<Real> assemble(const std::vector<ParameterStore<Real>>& checkpoints,
                              const std::vector<TaskMask>& masks) {
  if (checkpoints.size() != masks.size())
    throw PipelineError("assemble", std::to_string(masks.size()) + " masks but " +
                                        std::to_string(checkpoints.size()) + " checkpoints");
  if (masks.empty()) throw PipelineError("assemble", "no checkpoints to assemble");
  check_disjoint(masks);
  ParameterStore<Real> out;
  for (const auto& [name, e] : checkpoints.front()) {
    Tensor<Real> t(e.tensor.shape);
    for (std::size_t i = 0; i < masks.size(); ++i) {
      if (!checkpoints[i].contains(name))
        throw PipelineError("assemble", "checkpoint of task " + std::to_string(masks[i].task_id) + " lacks " + name);
      const auto& src = checkpoints[i].at(name);
      const auto& b = masks[i].bits.at(name);
      if (b.size() != t.size() || src.size() != t.size())
        throw InvariantError("assemble: size mismatch for " + name);
      for (std::size_t j = 0; j < t.size(); ++j)
        if (b[j]) t.data[j] = src.data[j];
    }
    out.add(name, std::move(t), e.trainable);
  }
  return out;
}

struct PruneResult {
  std::vector<TaskMask> masks;
  std::size_t released = 0;
  std::size_t masked = 0;
  double prune_rate = 0.0;
};

/// Per-tensor magnitude pruning: owned entries with |w| < threshold are
/// dropped from their mask and returned to the pool.
template <class Real>
PruneResult prune_masks(const ParameterStore<Real>& w, const std::vector<TaskMask>& masks, double threshold,
                        CapacityLedger* ledger = nullptr) {
  if (threshold < 0) throw ConfigError("prune threshold must be >= 0");
  PruneResult r;
  r.masks = masks;
  for (auto& m : r.masks)
    for (auto& [name, b] : m.bits) {
      const auto& t = w.at(name);
      for (std::size_t j = 0; j < b.size(); ++j) {
        if (!b[j]) continue;
        ++r.masked;
        if (std::abs(static_cast<double>(t.data[j])) < threshold) {
          b[j] = 0;
          ++r.released;
          if (ledger) ledger->release(name, j);
        }
      }
    }
  r.prune_rate = r.masked ? static_cast<double>(r.released) / static_cast<double>(r.masked) : 0.0;
  return r;
}

/// Remaining free fraction per tensor.
inline std::map<std::string, double> capacity_report(const CapacityLedger& ledger) {
  std::map<std::string, double> out;
  for (const auto& [name, s] : ledger.shapes()) {
    const auto n = ledger.total(name);
    out[name] = n ? static_cast<double>(ledger.remaining(name)) / static_cast<double>(n) : 1.0;
  }
  return out;
}

// --- mask file --------------------------------------------------------------

namespace detail {
inline constexpr std::array<char, 8> kMaskMagic{'V', 'Q', 'C', 'D', 'M', 'A', 'S', 'K'};
}

inline std::vector<std::uint8_t> pack_bits(const std::vector<std::uint8_t>& b) {
  std::vector<std::uint8_t> out((b.size() + 7) / 8, 0);
  for (std::size_t j = 0; j < b.size(); ++j)
    if (b[j]) out[j / 8] |= static_cast<std::uint8_t>(1u << (j % 8));
  return out;
}

inline std::vector<std::uint8_t> unpack_bits(const std::vector<std::uint8_t>& packed, std::size_t n) {
  std::vector<std::uint8_t> out(n, 0);
  for (std::size_t j = 0; j < n; ++j) out[j] = (packed[j / 8] >> (j % 8)) & 1u;
  return out;
}

inline void save_mask(const std::string& path, const TaskMask& m) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path);
  os.write(detail::kMaskMagic.data(), 8);
  detail::put_le<std::uint32_t>(os, 1);
  detail::put_le<std::int64_t>(os, m.task_id);
  detail::put_le<std::uint64_t>(os, m.seed);
  detail::put_string(os, m.extra);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(m.bits.size()));
  for (const auto& [name, b] : m.bits) {
    detail::put_string(os, name);
    const auto& s = m.shapes.at(name);
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
    for (auto d : s) detail::put_le<std::uint64_t>(os, d);
    detail::put_le<std::uint64_t>(os, b.size());
    const auto packed = pack_bits(b);
    os.write(reinterpret_cast<const char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
  }
  if (!os) throw IoError("write failed: " + path);
}

inline TaskMask load_mask(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open mask file: " + path);
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), 8) || magic != detail::kMaskMagic) throw IoError("not a mask file: " + path);
  if (detail::get_le<std::uint32_t>(is, path) != 1) throw IoError("unsupported mask version in " + path);
  TaskMask m;
  m.task_id = static_cast<int>(detail::get_le<std::int64_t>(is, path));
  m.seed = detail::get_le<std::uint64_t>(is, path);
  m.extra = detail::get_string(is, path);
  const auto count = detail::get_le<std::uint32_t>(is, path);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name = detail::get_string(is, path);
    Shape s(detail::get_le<std::uint32_t>(is, path));
    for (auto& d : s) d = detail::get_le<std::uint64_t>(is, path);
    const auto n = detail::get_le<std::uint64_t>(is, path);
    if (n != numel(s)) throw IoError("mask entry " + name + " bit count disagrees with its shape in " + path);
    std::vector<std::uint8_t> packed((n + 7) / 8);
    if (!packed.empty() && !is.read(reinterpret_cast<char*>(packed.data()), static_cast<std::streamsize>(packed.size())))
      throw IoError("truncated file: " + path);
    m.shapes[name] = s;
    m.bits[name] = unpack_bits(packed, n);
  }
  return m;
}

}  // namespace vqcd

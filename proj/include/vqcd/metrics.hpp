#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vqcd/error.hpp"

namespace vqcd {

/// Φ = (R − R_random) / (R_expert − R_random) · 100
inline double normalized_score(double r, double r_random, double r_expert) {
  if (!(r_expert != r_random) || !std::isfinite(r_expert) || !std::isfinite(r_random))
    throw ConfigError("normalized_score: degenerate reference returns (" + std::to_string(r_random) +
                      ", " + std::to_string(r_expert) + ")");
  return (r - r_random) / (r_expert - r_random) * 100.0;
}

struct MetricsCell {
  double mean = 0.0;
  double std = 0.0;
  double success_rate = 0.0;  // fraction of episodes at or above the success threshold
};

/// I×I table. Entry (i, j): evaluation on task j after training through task i.
/// Only j ≤ i is defined during training; the last row is the final model.
class MetricsMatrix {
 public:
  MetricsMatrix() = default;
  explicit MetricsMatrix(std::size_t n_tasks) : n_(n_tasks), cells_(n_tasks * n_tasks) {}

  std::size_t size() const { return n_; }

  void set(std::size_t stage, std::size_t task, MetricsCell c) {
    check(stage, task);
    if (!std::isfinite(c.mean) || !std::isfinite(c.std))
      throw InvariantError("non-finite metrics entry");
    cells_[stage * n_ + task] = c;
  }
  const std::optional<MetricsCell>& at(std::size_t stage, std::size_t task) const {
    check(stage, task);
    return cells_[stage * n_ + task];
  }
  bool has(std::size_t stage, std::size_t task) const { return at(stage, task).has_value(); }
  double mean(std::size_t stage, std::size_t task) const {
    const auto& c = at(stage, task);
    if (!c) throw InvariantError("metrics entry (" + std::to_string(stage) + ", " + std::to_string(task) +
                                 ") not populated");
    return c->mean;
  }
  bool row_complete(std::size_t stage) const {
    for (std::size_t j = 0; j <= stage && j < n_; ++j)
      if (!has(stage, j)) return false;
    return true;
  }

  /// P: mean of the final row.
  double final_performance() const {
    double s = 0;
    for (std::size_t j = 0; j < n_; ++j) s += mean(n_ - 1, j);
    return s / static_cast<double>(n_);
  }
  /// F_j = entry(j, j) − entry(I, j)
  double forgetting(std::size_t task) const { return mean(task, task) - mean(n_ - 1, task); }

  nlohmann::json to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < n_; ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t j = 0; j < n_; ++j) {
        const auto& c = cells_[i * n_ + j];
        if (c) row.push_back({{"mean", c->mean}, {"std", c->std}, {"success_rate", c->success_rate}});
        else row.push_back(nullptr);
      }
      rows.push_back(row);
    }
    return {{"n_tasks", n_}, {"entries", rows}};
  }
  static MetricsMatrix from_json(const nlohmann::json& j) {
    MetricsMatrix m(j.at("n_tasks").get<std::size_t>());
    const auto& rows = j.at("entries");
    for (std::size_t i = 0; i < m.n_; ++i)
      for (std::size_t k = 0; k < m.n_; ++k) {
        const auto& c = rows.at(i).at(k);
        if (!c.is_null())
          m.set(i, k, {c.at("mean").get<double>(), c.at("std").get<double>(), c.at("success_rate").get<double>()});
      }
    return m;
  }

  bool operator==(const MetricsMatrix& o) const {
    if (n_ != o.n_) return false;
    for (std::size_t i = 0; i < cells_.size(); ++i) {
      if (cells_[i].has_value() != o.cells_[i].has_value()) return false;
      if (cells_[i] && (cells_[i]->mean != o.cells_[i]->mean || cells_[i]->std != o.cells_[i]->std ||
                        cells_[i]->success_rate != o.cells_[i]->success_rate))
        return false;
    }
    return true;
  }

 private:
  void check(std::size_t stage, std::size_t task) const {
    if (stage >= n_ || task >= n_)
      throw DimensionError("metrics index (" + std::to_string(stage) + ", " + std::to_string(task) +
                           ") outside " + std::to_string(n_) + "x" + std::to_string(n_));
  }

  std::size_t n_ = 0;
  std::vector<std::optional<MetricsCell>> cells_;
};

}  // namespace vqcd

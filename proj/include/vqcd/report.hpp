#pragma once

// Report files of a run: a CSV metrics table, a JSON summary, and
// per-task learning-curve series. All are pure functions of their inputs,
// so regenerating from a saved matrix is byte-identical.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vqcd/metrics.hpp"

namespace vqcd {

struct CurvePoint {
  std::string series;  // e.g. "swa_loss", "qsa_state_loss", "eval_return"
  int task = 0;
  double x = 0;
  double y = 0;
};

struct ReportContext {
  std::vector<int> task_ids;
  std::vector<double> r_random, r_expert;  // per task, in matrix column order
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string method;
  std::vector<CurvePoint> curves;
};

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string metrics_csv(const MetricsMatrix& m, const ReportContext& ctx) {
  std::string out = "stage";
  for (int id : ctx.task_ids) out += ",task_" + std::to_string(id);
  out += '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    out += std::to_string(i);
    for (std::size_t j = 0; j < m.size(); ++j) {
      out += ',';
      if (m.has(i, j)) out += format_real(m.mean(i, j));
    }
    out += '\n';
  }
  return out;
}

inline nlohmann::json summary_json(const MetricsMatrix& m, const ReportContext& ctx) {
  const std::size_t n = m.size();
  if (ctx.task_ids.size() != n || ctx.r_random.size() != n || ctx.r_expert.size() != n)
    throw DimensionError("report context does not match a " + std::to_string(n) + "-task matrix");
  nlohmann::json j;
  j["config_hash"] = ctx.config_hash;
  j["seed"] = ctx.seed;
  j["method"] = ctx.method;
  j["task_ids"] = ctx.task_ids;
  j["P"] = m.final_performance();
  std::vector<double> forgetting, forgetting_norm, final_norm, success;
  double p_norm = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double gap = ctx.r_expert[t] - ctx.r_random[t];
    forgetting.push_back(m.forgetting(t));
    forgetting_norm.push_back(m.forgetting(t) / gap * 100.0);
    final_norm.push_back(normalized_score(m.mean(n - 1, t), ctx.r_random[t], ctx.r_expert[t]));
    success.push_back(m.at(n - 1, t)->success_rate);
    p_norm += final_norm.back();
  }
  j["P_normalized"] = p_norm / static_cast<double>(n);
  j["forgetting"] = forgetting;
  j["forgetting_normalized"] = forgetting_norm;
  j["final_normalized_scores"] = final_norm;
  j["final_success_rates"] = success;
  j["r_random"] = ctx.r_random;
  j["r_expert"] = ctx.r_expert;
  j["matrix"] = m.to_json();
  return j;
}

inline std::string curves_csv(const ReportContext& ctx) {
  std::string out = "series,task,x,y\n";
  for (const auto& c : ctx.curves)
    out += c.series + "," + std::to_string(c.task) + "," + format_real(c.x) + "," + format_real(c.y) + "\n";
  return out;
}

struct ReportFiles {
  std::string table, summary, curves;
};

inline ReportFiles emit_report(const MetricsMatrix& m, const ReportContext& ctx, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  ReportFiles f{dir + "/metrics.csv", dir + "/summary.json", dir + "/curves.csv"};
  auto write = [](const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write report file " + path);
    os << text;
    if (!os) throw IoError("write failed: " + path);
  };
  write(f.table, metrics_csv(m, ctx));
  write(f.summary, summary_json(m, ctx).dump(2) + "\n");
  write(f.curves, curves_csv(ctx));
  return f;
}

}  // namespace vqcd

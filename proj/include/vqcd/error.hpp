#pragma once

#include <stdexcept>
#include <string>

namespace vqcd {

/// Shape disagreement between operands.
struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid hyperparameter or configuration value.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An internal invariant was violated (mask overlap, missing gradient, ...).
struct InvariantError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Pipeline stages were run out of order or a required artifact is missing.
struct PipelineError : std::runtime_error {
  PipelineError(const std::string& stage, const std::string& what)
      : std::runtime_error("[" + stage + "] " + what), stage_(stage) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Mask allocation ran out of free positions in a tensor.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace vqcd

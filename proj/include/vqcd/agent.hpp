#pragma once

// Closed-loop diffusion agent: encode the current state, inpaint it at
// timestep 0, sample a guided sequence, and read off the action (joint mode)
// or the planned next state for the inverse-dynamics model (idm mode).

#include <memory>
#include <vector>

#include "vqcd/diffuser.hpp"
#include "vqcd/tasks.hpp"

namespace vqcd {

struct AgentOptions {
  DecodeMode mode = DecodeMode::joint;
  double target_return = 0.95;
  int stride = 20;
  std::uint64_t seed = 0;
};

/// One planning step for a batch of raw states of `task`.
template <class Rng>
std::vector<Vec> diffusion_act(Diffuser& model, const FeatureMap& fm, int task, const StateBatch& states,
                               const AgentOptions& opt, Rng& rng, const InverseDynamics* idm = nullptr) {
  const std::size_t n = states.size(), ws = fm.state_width(), T = model.horizon(), C = model.channels();
  const auto obs = fm.encode_states(states);
  const std::vector<real> cond(n, static_cast<real>(opt.target_return));
  const auto x = model.ddim_sample(n, cond, opt.stride, task, rng, &obs, ws);
  if (opt.mode == DecodeMode::joint) {
    const std::size_t wa = fm.action_width();
    if (C != ws + wa) throw DimensionError("joint agent: model channels do not match state + action width");
    std::vector<real> fa(n * wa);
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < wa; ++c) fa[b * wa + c] = x[(b * C + ws + c) * T];
    return fm.decode_actions(fa, n);
  }
  if (!idm) throw PipelineError("eval", "idm mode requires an inverse dynamics model");
  if (T < 2) throw ConfigError("idm mode needs horizon >= 2");
  std::vector<real> fs(n * ws);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t c = 0; c < ws; ++c) fs[b * ws + c] = x[(b * C + c) * T + 1];
  const auto next = fm.decode_states(fs, n);
  return idm->predict(states, next);
}

/// Rollout factory: each chunk of episodes gets a generator seeded from its
/// first episode seed, so results depend only on episode seeds and chunking.
inline PolicyFactory diffusion_factory(Diffuser& model, const FeatureMap& fm, int task, AgentOptions opt,
                                       const InverseDynamics* idm = nullptr) {
  return [&model, &fm, task, opt, idm](const std::vector<std::uint64_t>& seeds) -> BatchPolicy {
    auto rng = std::make_shared<std::mt19937_64>(mix_seed(opt.seed, seeds.empty() ? 0 : seeds.front()));
    return [&model, &fm, task, opt, idm, rng](const StateBatch& states, int) {
      return diffusion_act(model, fm, task, states, opt, *rng, idm);
    };
  };
}

}  // namespace vqcd

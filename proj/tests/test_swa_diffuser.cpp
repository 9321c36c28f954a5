#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include "vqcd/agent.hpp"
#include "vqcd/diffuser.hpp"
#include "vqcd/mask.hpp"

using namespace vqcd;

namespace {

UnetConfig tiny_unet(std::size_t features = 6) {
  UnetConfig u;
  u.features = features;
  u.horizon = 8;
  u.hidden = 32;
  u.emb_dim = 16;
  u.groups = 8;
  return u;
}

DiffusionConfig tiny_diffusion() {
  DiffusionConfig d;
  d.batch = 8;
  return d;
}

std::vector<real> normal_vec(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  std::vector<real> v(n);
  for (auto& x : v) x = static_cast<real>(scale * n01(rng));
  return v;
}

double variance(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

// Two-task masked model with disjoint default-rate masks.
struct TwoTasks {
  Diffuser model{tiny_unet(), tiny_diffusion(), 3};
  std::vector<TaskMask> masks;
  TwoTasks() {
    CapacityLedger ledger(parameter_shapes(model.params()), 2);
    masks.push_back(generate_mask(0, 0, ledger, 100));
    masks.push_back(generate_mask(1, 1, ledger, 101));
    model.register_task(0, masks[0].bits);
    model.register_task(1, masks[1].bits);
  }
};

SequenceData synthetic_sequences(int task, std::size_t n, std::size_t C, std::uint64_t seed) {
  SequenceData d;
  d.task_id = task;
  d.channels = C;
  d.horizon = 8;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = u(rng), phase = u(rng) * 6.28;
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t t = 0; t < 8; ++t)
        d.seqs.push_back(static_cast<real>(0.8 * r * std::sin(phase + 0.7 * t + c)));
    d.cond.push_back(static_cast<real>(r));
  }
  return d;
}

}  // namespace

// --- schedule ---------------------------------------------------------------

TEST(Schedule, ProductIdentityAndMonotone) {
  const auto sc = make_schedule(200);
  EXPECT_EQ(sc.alpha_bar[1], sc.alpha[1]);
  for (int k = 1; k <= 200; ++k) {
    EXPECT_DOUBLE_EQ(sc.beta[k], 1.0 - sc.alpha[k]);
    EXPECT_GT(sc.beta[k], 0.0);
    EXPECT_LE(sc.beta[k], 0.999);
    EXPECT_GT(sc.alpha_bar[k], 0.0);
    EXPECT_LT(sc.alpha_bar[k], 1.0);
    EXPECT_NEAR(sc.alpha_bar[k], sc.alpha_bar[k - 1] * sc.alpha[k], 1e-15);
    if (k > 1) {
      EXPECT_LT(sc.alpha_bar[k], sc.alpha_bar[k - 1]);
    }
  }
  EXPECT_LT(sc.alpha_bar[200], sc.alpha_bar[1]);
}

TEST(Schedule, FirstStepPosteriorVarianceIsZero) {
  const auto sc = make_schedule(200);
  EXPECT_EQ(sc.posterior_var[1], 0.0);
  EXPECT_GT(sc.posterior_var[2], 0.0);
}

TEST(Schedule, Errors) {
  EXPECT_THROW(make_schedule(0), ConfigError);
  const auto sc = make_schedule(10);
  const std::vector<double> x(2, 0.0);
  EXPECT_THROW(forward_diffuse<double>(x, 0, x, sc), ConfigError);
  EXPECT_THROW(forward_diffuse<double>(x, 11, x, sc), ConfigError);
}

TEST(ForwardDiffuse, Examples) {
  const auto sc = make_schedule(200);
  const std::vector<double> x0{0.5, -1.0}, zero{0, 0}, eps{1.0, 2.0};
  const auto a = forward_diffuse<double>(x0, 50, zero, sc);
  EXPECT_DOUBLE_EQ(a[0], std::sqrt(sc.alpha_bar[50]) * 0.5);
  const auto b = forward_diffuse<double>(zero, 50, eps, sc);
  EXPECT_DOUBLE_EQ(b[1], std::sqrt(1 - sc.alpha_bar[50]) * 2.0);
}

TEST(ForwardDiffuse, MonteCarloVariance) {
  const auto sc = make_schedule(200);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01;
  const std::size_t n = 10000;
  for (int k : {1, 20, 100, 200}) {
    std::vector<double> x0(n, 0.0), eps(n);
    for (auto& e : eps) e = n01(rng);
    const auto xk = forward_diffuse<double>(x0, k, eps, sc);
    EXPECT_NEAR(variance(xk) / (1 - sc.alpha_bar[k]), 1.0, 0.05) << "k=" << k;
  }
  // unit-variance data ends near unit variance at k = K
  std::vector<double> x0(n), eps(n);
  for (auto& v : x0) v = n01(rng);
  for (auto& e : eps) e = n01(rng);
  EXPECT_NEAR(variance(forward_diffuse<double>(x0, 200, eps, sc)), 1.0, 0.05);
}

TEST(DdpmStep, FinalStepIsDeterministicRoundTrip) {
  const auto sc = make_schedule(200);
  const auto x0 = normal_vec(64, 2);
  const auto eps = normal_vec(64, 3);
  const auto x1 = forward_diffuse<real>(x0, 1, eps, sc);
  std::mt19937_64 r1(1), r2(99);
  const auto a = ddpm_step<real>(x1, 1, eps, sc, r1);
  const auto b = ddpm_step<real>(x1, 1, eps, sc, r2);
  EXPECT_EQ(a, b);
  for (std::size_t i = 0; i < x0.size(); ++i) EXPECT_NEAR(a[i], x0[i], 1e-5);
}

TEST(DdpmStep, MonteCarloVarianceMatchesPosterior) {
  const auto sc = make_schedule(200);
  std::mt19937_64 rng(4);
  const std::size_t n = 10000;
  for (int k : {2, 50, 150}) {
    const std::vector<double> xk(n, 0.3), eps(n, -0.2);
    const auto out = ddpm_step<double>(xk, k, eps, sc, rng);
    EXPECT_NEAR(variance(out) / sc.posterior_var[k], 1.0, 0.05) << "k=" << k;
  }
}

TEST(Ddim, StepCounts) {
  EXPECT_EQ(ddim_steps(200, 20).size(), 10u);
  EXPECT_EQ(ddim_steps(200, 1).size(), 200u);
  EXPECT_EQ(ddim_steps(200, 200), (std::vector<int>{200}));
  EXPECT_THROW(ddim_steps(200, 300), ConfigError);
  EXPECT_THROW(ddim_steps(200, 0), ConfigError);
}

TEST(Ddim, ExactCleanStepRecoversSample) {
  const auto sc = make_schedule(200);
  const auto x0 = normal_vec(32, 5, 0.4);
  const auto eps = normal_vec(32, 6);
  const auto x = forward_diffuse<double>(std::vector<double>(x0.begin(), x0.end()), 120,
                                         std::vector<double>(eps.begin(), eps.end()), sc);
  const auto back = ddim_step<double>(x, 120, 0, std::vector<double>(eps.begin(), eps.end()), sc);
  for (std::size_t i = 0; i < x0.size(); ++i) EXPECT_NEAR(back[i], x0[i], 1e-6);
}

// --- guidance ---------------------------------------------------------------

TEST(Guidance, ScalarArithmetic) {
  EXPECT_NEAR(combine_guidance({0}, {1}, 1.2)[0], 1.2, 1e-6);
  EXPECT_EQ(combine_guidance({0.3f}, {0.7f}, 0.0)[0], 0.3f);
  EXPECT_EQ(combine_guidance({0.3f}, {0.7f}, 1.0)[0], 0.7f);
}

TEST(Guidance, IdentitiesOnNetwork) {
  TwoTasks t;
  const std::size_t n = 3, per = 6 * 8;
  const auto x = normal_vec(n * per, 7);
  const std::vector<real> cond{0.1f, 0.5f, 0.9f};
  const std::vector<double> steps(n, 40);
  const auto on = t.model.predict_noise(x, steps, cond, std::vector<std::uint8_t>(n, 1), 0);
  const auto off = t.model.predict_noise(x, steps, cond, std::vector<std::uint8_t>(n, 0), 0);
  EXPECT_EQ(t.model.guided_noise(x, 40, cond, 1.0, 0), on);
  EXPECT_EQ(t.model.guided_noise(x, 40, cond, 0.0, 0), off);
  const auto mixed = t.model.guided_noise(x, 40, cond, 1.2, 0);
  const auto oracle = combine_guidance(off, on, 1.2);
  for (std::size_t i = 0; i < mixed.size(); ++i) EXPECT_NEAR(mixed[i], oracle[i], 1e-5);
}

TEST(Guidance, NullTokenIgnoresConditionValue) {
  TwoTasks t;
  const auto x = normal_vec(2 * 48, 8);
  const std::vector<double> steps(2, 10);
  const std::vector<std::uint8_t> drop(2, 0);
  EXPECT_EQ(t.model.predict_noise(x, steps, {0.1f, 0.2f}, drop, 1),
            t.model.predict_noise(x, steps, {0.9f, 0.7f}, drop, 1));
  EXPECT_NE(t.model.predict_noise(x, steps, {0.1f, 0.2f}, {1, 1}, 1),
            t.model.predict_noise(x, steps, {0.9f, 0.7f}, {1, 1}, 1));
}

// --- masking ----------------------------------------------------------------

TEST(MaskedForward, FullMaskEqualsUnmaskedModel) {
  Diffuser masked(tiny_unet(), tiny_diffusion(), 5, true), plain(tiny_unet(), tiny_diffusion(), 5, false);
  masked.register_task(0, full_mask(0, masked.params()).bits);
  plain.register_task(0, {});
  const auto x = normal_vec(2 * 48, 9);
  const std::vector<double> steps{3, 170};
  const std::vector<real> cond{0.2f, 0.8f};
  const std::vector<std::uint8_t> keep{1, 0};
  EXPECT_EQ(masked.predict_noise(x, steps, cond, keep, 0), plain.predict_noise(x, steps, cond, keep, 0));
}

TEST(MaskedForward, PerturbingUnownedWeightsChangesNothing) {
  TwoTasks t;
  const auto x = normal_vec(4 * 48, 10);
  const std::vector<double> steps{1, 50, 100, 200};
  const std::vector<real> cond{0.0f, 0.3f, 0.6f, 1.0f};
  const std::vector<std::uint8_t> keep{1, 1, 0, 1};
  const auto before = t.model.predict_noise(x, steps, cond, keep, 0);
  const auto other_before = t.model.predict_noise(x, steps, cond, keep, 1);
  for (double delta : {1.0, -1.0}) {
    for (const auto& name : t.model.params().names()) {
      auto& w = t.model.params().at(name);
      const auto& m = t.masks[0].bits.at(name);
      for (std::size_t j = 0; j < w.size(); ++j)
        if (!m[j]) w.data[j] = static_cast<real>(w.data[j] + delta);
    }
    EXPECT_EQ(t.model.predict_noise(x, steps, cond, keep, 0), before);
  }
  // the net perturbation is zero but the values went through float rounding;
  // task 1 owns those weights, so its output may now differ only by that rounding
  const auto other_after = t.model.predict_noise(x, steps, cond, keep, 1);
  for (std::size_t i = 0; i < other_after.size(); ++i) EXPECT_NEAR(other_after[i], other_before[i], 1e-4);
}

TEST(MaskedBackward, UnownedWeightsGetExactlyZeroGradient) {
  TwoTasks t;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    std::mt19937_64 rng(seed);
    const auto x0 = normal_vec(8 * 48, 20 + seed, 0.5);
    std::vector<real> cond(8);
    for (std::size_t i = 0; i < 8; ++i) cond[i] = static_cast<real>(i / 7.0);
    for (int task : {0, 1}) {
      Graph<real> g;
      Var loss = t.model.diffusion_loss(g, x0, cond, task, rng);
      t.model.params().zero_grad();
      backward(g, loss, t.model.params());
      std::size_t owned_nonzero = 0;
      for (const auto& name : t.model.params().names()) {
        const auto& w = t.model.params().at(name);
        const auto& m = t.masks[task].bits.at(name);
        for (std::size_t j = 0; j < w.size(); ++j) {
          if (!m[j]) ASSERT_EQ(w.grad[j], 0.0f) << name << "[" << j << "] task " << task;
          else if (w.grad[j] != 0.0f) ++owned_nonzero;
        }
      }
      EXPECT_GT(owned_nonzero, 0u);
    }
  }
}

TEST(Registration, Errors) {
  Diffuser m(tiny_unet(), tiny_diffusion(), 1);
  auto bits = full_mask(0, m.params()).bits;
  bits.erase(bits.begin());
  EXPECT_THROW(m.register_task(0, bits), InvariantError);
  auto bad = full_mask(0, m.params()).bits;
  bad.begin()->second.pop_back();
  EXPECT_THROW(m.register_task(0, bad), InvariantError);
  EXPECT_THROW(m.mask(3), PipelineError);
  EXPECT_THROW(m.predict_noise(normal_vec(48, 1), {5}, {0.5f}, {1}, 3), PipelineError);
}

// --- loss and training ------------------------------------------------------

TEST(DiffusionLoss, ZeroOutputNetGivesUnitNoiseEnergy) {
  Diffuser m(tiny_unet(), tiny_diffusion(), 2, false);
  m.register_task(0, {});
  for (const auto* n : {"unet.out.weight", "unet.out.bias"}) {
    auto& w = m.params().at(n);
    std::fill(w.data.begin(), w.data.end(), real(0));
  }
  std::mt19937_64 rng(3);
  const auto x0 = normal_vec(64 * 48, 4, 0.5);
  Graph<real> g;
  const double l = g.scalar(m.diffusion_loss(g, x0, std::vector<real>(64, 0.5f), 0, rng));
  EXPECT_NEAR(l, 1.0, 0.05);
}

TEST(DiffusionLoss, ObservedEntriesAreUnscored) {
  // Zero-output net: every scored entry contributes ε², so the loss stays at
  // unit energy only if the observed entries are dropped from the average.
  // Counting them with a zero target would give 1 − 2/48 ≈ 0.958.
  Diffuser m(tiny_unet(), tiny_diffusion(), 2, false);
  m.register_task(0, {});
  for (const auto* n : {"unet.out.weight", "unet.out.bias"}) {
    auto& w = m.params().at(n);
    std::fill(w.data.begin(), w.data.end(), real(0));
  }
  const std::size_t n = 1024;
  const auto x0 = normal_vec(n * 48, 4, 0.5);
  const std::vector<real> cond(n, 0.5f);
  std::mt19937_64 rng(3);
  Graph<real> g;
  EXPECT_NEAR(g.scalar(m.diffusion_loss(g, x0, cond, 0, rng, 2)), 1.0, 0.02);
  Graph<real> g2;
  EXPECT_THROW(m.diffusion_loss(g2, x0, cond, 0, rng, 7), DimensionError);
}

TEST(TrainTask, ObservedChannelsAreLearnedAsCondition) {
  // channels 2..3 are a fixed linear map of channels 0..1 at every step;
  // with channels 0..1 inpainted at timestep 0 the sampled action-like
  // channels must follow the observation.
  UnetConfig u = tiny_unet(4);
  u.hidden = 32;
  u.groups = 4;
  SequenceData sd;
  sd.task_id = 0;
  sd.channels = 4;
  sd.horizon = 8;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> un(-0.8, 0.8);
  const std::size_t N = 2000, per = 32;
  sd.seqs.resize(N * per);
  for (std::size_t k = 0; k < N; ++k) {
    for (std::size_t t = 0; t < 8; ++t) {
      const double s0 = un(rng), s1 = un(rng);
      sd.seqs[k * per + 0 * 8 + t] = static_cast<real>(s0);
      sd.seqs[k * per + 1 * 8 + t] = static_cast<real>(s1);
      sd.seqs[k * per + 2 * 8 + t] = static_cast<real>(0.5 * s0 - 0.4 * s1);
      sd.seqs[k * per + 3 * 8 + t] = static_cast<real>(-0.6 * s0);
    }
    sd.cond.push_back(0.5f);
  }
  auto sample_error = [&](std::size_t observed) {
    Diffuser m(u, DiffusionConfig{}, 1, false);
    m.register_task(0, {});
    sd.observed = observed;
    m.train_task(sd, 3000, 7);
    const std::size_t n = 200;
    std::vector<real> obs(n * 2);
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < 2; ++c) obs[b * 2 + c] = sd.seqs[b * per + c * 8];
    std::mt19937_64 r(4);
    const auto x = m.ddim_sample(n, std::vector<real>(n, 0.5f), 20, 0, r, &obs, 2);
    double se = 0;
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 2; c < 4; ++c) se += std::pow(x[b * per + c * 8] - sd.seqs[b * per + c * 8], 2);
    return std::sqrt(se / (2.0 * n));
  };
  const double blind = sample_error(0), trained = sample_error(2);
  // the channels' own spread is about 0.3
  EXPECT_LT(trained, 0.06);
  EXPECT_LT(trained, 0.5 * blind);
}

TEST(DiffusionLoss, OracleNoiseGivesZero) {
  Graph<real> g;
  const auto e = normal_vec(48, 1);
  Var a = g.input({1, 6, 8}, e), b = g.input({1, 6, 8}, e);
  EXPECT_EQ(g.scalar(g.mse(a, b)), 0.0);
}

TEST(TrainTask, LossFallsAndOtherTaskIsBitIdentical) {
  TwoTasks t;
  const auto probe = normal_vec(3 * 48, 30);
  const std::vector<double> steps{10, 90, 180};
  const std::vector<real> cond{0.2f, 0.5f, 0.95f};
  const std::vector<std::uint8_t> keep{1, 0, 1};

  const auto log0 = t.model.train_task(synthetic_sequences(0, 256, 6, 1), 300, 11, 50);
  EXPECT_LT(log0.loss.back(), log0.loss.front());
  const auto snapshot = t.model.params();
  const auto out0 = t.model.predict_noise(probe, steps, cond, keep, 0);

  const auto log1 = t.model.train_task(synthetic_sequences(1, 256, 6, 2), 300, 12, 50);
  EXPECT_LT(log1.loss.back(), log1.loss.front());
  EXPECT_EQ(t.model.predict_noise(probe, steps, cond, keep, 0), out0);
  std::size_t moved = 0;
  for (const auto& name : t.model.params().names()) {
    const auto& now = t.model.params().at(name).data;
    const auto& was = snapshot.at(name).data;
    const auto& m1 = t.masks[1].bits.at(name);
    for (std::size_t j = 0; j < now.size(); ++j) {
      if (!m1[j]) ASSERT_EQ(std::memcmp(&now[j], &was[j], sizeof(real)), 0) << name;
      else if (now[j] != was[j]) ++moved;
    }
  }
  EXPECT_GT(moved, 0u);
}

TEST(TrainTask, RejectsMismatchedData) {
  TwoTasks t;
  EXPECT_THROW(t.model.train_task(synthetic_sequences(0, 8, 5, 1), 1, 1), DimensionError);
  EXPECT_THROW(t.model.train_task(synthetic_sequences(7, 8, 6, 1), 1, 1), PipelineError);
}

// --- sampling ---------------------------------------------------------------

TEST(DdimSample, RoundsPassesAndDeterminism) {
  TwoTasks t;
  const std::vector<real> cond{0.95f, 0.95f};
  SampleStats s;
  std::mt19937_64 r1(5), r2(5);
  const auto a = t.model.ddim_sample(2, cond, 20, 0, r1, nullptr, 0, &s);
  const auto b = t.model.ddim_sample(2, cond, 20, 0, r2);
  EXPECT_EQ(s.rounds, 10u);
  EXPECT_EQ(s.passes, 20u);
  EXPECT_EQ(a, b);
  for (real v : a) {
    EXPECT_GE(v, -1.0f);
    EXPECT_LE(v, 1.0f);
  }
  t.model.config().omega = 1.0;
  SampleStats one;
  std::mt19937_64 r3(5);
  t.model.ddim_sample(2, cond, 20, 0, r3, nullptr, 0, &one);
  EXPECT_EQ(one.passes, 10u);
  SampleStats single;
  std::mt19937_64 r4(5);
  t.model.ddim_sample(2, cond, 200, 0, r4, nullptr, 0, &single);
  EXPECT_EQ(single.rounds, 1u);
}

TEST(DdimSample, MatchesHandRolledLoop) {
  TwoTasks t;
  const std::vector<real> cond{0.3f};
  std::mt19937_64 r1(8), r2(8);
  const auto got = t.model.ddim_sample(1, cond, 40, 1, r1);
  std::normal_distribution<double> n01;
  std::vector<real> x(48);
  for (auto& v : x) v = static_cast<real>(n01(r2));
  for (int k = 200; k >= 1; k -= 40) {
    const int prev = k - 40 >= 1 ? k - 40 : 0;
    x = ddim_step<real>(x, k, prev, t.model.guided_noise(x, k, cond, 1.2, 1), t.model.schedule());
  }
  EXPECT_EQ(got, x);
}

TEST(Inpaint, PositionZeroStateEqualsObservation) {
  TwoTasks t;
  const std::size_t n = 3, ws = 4;
  const auto obs = normal_vec(n * ws, 12, 0.5);
  std::mt19937_64 rng(6);
  const auto x = t.model.ddim_sample(n, std::vector<real>(n, 0.9f), 20, 0, rng, &obs, ws);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t c = 0; c < ws; ++c) EXPECT_EQ(x[(b * 6 + c) * 8], obs[b * ws + c]);
  std::vector<real> y(n * 48, 0.0f);
  EXPECT_THROW(t.model.inpaint_condition(y, n, obs, 7), DimensionError);
}

// --- sequences --------------------------------------------------------------

TEST(Sequences, LayoutAndConditionRange) {
  Dataset ds;
  ds.task.id = 2;
  ds.task.d_s = 2;
  ds.task.d_a = 1;
  ds.window = {3, 0.5, 0, 0};
  Trajectory tr;
  for (int t = 0; t < 5; ++t) {
    tr.states.push_back({0.1 * t, -0.1 * t});
    tr.actions.push_back({0.2 * t - 0.5});
    tr.rewards.push_back(-t);
    tr.terminals.push_back(t == 4);
  }
  ds.episodes.push_back(tr);
  compute_statistics(ds);
  FeatureMap fm(2, {{-1, -1}, {1, 1}}, {{-1}, {1}}, 3, 2);
  const auto sd = build_sequences(ds, fm, 3, DecodeMode::joint);
  EXPECT_EQ(sd.channels, 5u);
  ASSERT_EQ(sd.size(), 3u);
  // window 1, time 2 is transition 3: state channel 0, action channel 3
  EXPECT_FLOAT_EQ(sd.seqs[1 * 15 + 0 * 3 + 2], 0.3f);
  EXPECT_FLOAT_EQ(sd.seqs[1 * 15 + 3 * 3 + 2], 0.1f);
  EXPECT_EQ(sd.seqs[1 * 15 + 2 * 3 + 2], 0.0f);  // padded state channel
  EXPECT_EQ(sd.cond.front(), 1.0f);               // best window first
  EXPECT_EQ(sd.cond.back(), 0.0f);
  EXPECT_EQ(sd.observed, 3u);
  EXPECT_EQ(build_sequences(ds, fm, 3, DecodeMode::idm).channels, 3u);
  FeatureMap other(5, {{-1, -1}, {1, 1}}, {{-1}, {1}}, 3, 2);
  EXPECT_THROW(build_sequences(ds, other, 3, DecodeMode::joint), PipelineError);
}

TEST(Sequences, NormalizeReturnClamps) {
  const WindowStats w{8, 0.99, -10, 0};
  EXPECT_EQ(normalize_return(-5, w), 0.5);
  EXPECT_EQ(normalize_return(3, w), 1.0);
  EXPECT_EQ(normalize_return(-30, w), 0.0);
}

TEST(DiffusionConfig, Validation) {
  DiffusionConfig d;
  d.stride = 300;
  EXPECT_THROW(d.validate(), ConfigError);
  d = {};
  d.omega = -1;
  EXPECT_THROW(d.validate(), ConfigError);
  d = {};
  d.cond_dropout = 1.5;
  EXPECT_THROW(d.validate(), ConfigError);
  EXPECT_THROW(parse_mode("both"), ConfigError);
}

// --- inverse dynamics ------------------------------------------------------

TEST(InverseDynamics, RecoversLinearInverse) {
  // s' = s + B a with invertible B
  const double B[2][2] = {{1.0, 0.5}, {-0.3, 0.8}};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Vec> s, sn, a;
  for (int i = 0; i < 2000; ++i) {
    Vec si{u(rng), u(rng)}, ai{u(rng), u(rng)};
    s.push_back(si);
    a.push_back(ai);
    sn.push_back({si[0] + B[0][0] * ai[0] + B[0][1] * ai[1], si[1] + B[1][0] * ai[0] + B[1][1] * ai[1]});
  }
  InverseDynamics idm(0, 2, 2, 64, 1);
  idm.state_normalizer() = {{-3, -3}, {3, 3}};
  idm.action_normalizer() = {{-1, -1}, {1, 1}};
  idm.train(s, sn, a, 6000, 32, 1e-3, 2);
  std::vector<Vec> qs, qn, qa;
  for (int i = 0; i < 50; ++i) {
    Vec si{u(rng), u(rng)}, ai{u(rng) * 0.9, u(rng) * 0.9};
    qs.push_back(si);
    qa.push_back(ai);
    qn.push_back({si[0] + B[0][0] * ai[0] + B[0][1] * ai[1], si[1] + B[1][0] * ai[0] + B[1][1] * ai[1]});
  }
  const auto pred = idm.predict(qs, qn);
  double worst = 0;
  for (int i = 0; i < 50; ++i)
    for (int c = 0; c < 2; ++c) worst = std::max(worst, std::abs(pred[i][c] - qa[i][c]));
  EXPECT_LE(worst, 1e-3);
  // a standing state needs no action
  const auto still = idm.predict(qs, qs);
  for (const auto& p : still) {
    ASSERT_EQ(p.size(), 2u);
    EXPECT_NEAR(p[0], 0.0, 1e-3);
    EXPECT_NEAR(p[1], 0.0, 1e-3);
  }
}

TEST(InverseDynamics, ShapeContractAndExport) {
  InverseDynamics idm(4, 3, 1, 16, 1);
  const std::vector<Vec> s{{0, 0, 0}, {1, 1, 1}};
  EXPECT_EQ(idm.predict(s, s)[0].size(), 1u);
  EXPECT_THROW(idm.predict(s, {{0, 0, 0}}), DimensionError);
  ParameterStore<real> store;
  idm.export_to(store, "x.");
  const auto back = InverseDynamics::import_from(store, "x.", 4);
  EXPECT_EQ(back.predict(s, s), idm.predict(s, s));
}

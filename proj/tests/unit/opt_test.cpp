#include "golf/opt.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "golf/error.hpp"
#include "test_util.hpp"

namespace golf {
namespace {

const Wavetables& small_tables() {
  static const Wavetables t = build_wavetables(16, 512);
  return t;
}

std::vector<double> tone(std::size_t n, double freq, double phase) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = std::sin(2.0 * std::numbers::pi * (freq * static_cast<double>(i) + phase));
  return x;
}

double energy(std::span<const double> x) { return test::dot(x, x); }

// Smooth voiced clip used by the phase-fitting tests.
SynthParams smooth_params(std::size_t frames) {
  return make_flat_params(frames, 0.005, 1.0, 1.0, 0.0, 1.0, 120, 480, 4);
}

double wrapped_distance(double a, double b) {
  const double d = a - b;
  return std::abs(d - std::round(d));
}

TEST(Msstft, IdenticalInputsGiveZero) {
  std::mt19937_64 rng(1);
  const auto y = test::normal_vector(rng, 4800);
  const auto l = msstft_loss(y, y);
  EXPECT_EQ(l.value, 0.0);
  EXPECT_EQ(l.terms.size(), 3u);
  for (double g : l.grad) EXPECT_EQ(g, 0.0);
}

TEST(Msstft, BlindToPhase) {
  const auto y = tone(4800, 0.01, 0.0);
  const auto flipped = tone(4800, 0.01, 0.5);
  EXPECT_LT(msstft_loss(flipped, y, {}, false).value, 1e-3);
  EXPECT_GT(l2_waveform(flipped, y, false).value, energy(y));
}

TEST(Msstft, DoubledSignal) {
  std::mt19937_64 rng(2);
  const auto y = test::normal_vector(rng, 8192);
  std::vector<double> x(y);
  for (double& s : x) s *= 2.0;
  const auto l = msstft_loss(x, y, {}, false);
  for (const auto& t : l.terms) {
    EXPECT_NEAR(t.spectral_convergence, 1.0, 1e-12) << t.fft_size;
    EXPECT_NEAR(t.log_magnitude, std::log(2.0), 1e-5) << t.fft_size;
  }
}

TEST(Msstft, Errors) {
  EXPECT_THROW(msstft_loss(std::vector<double>(100), std::vector<double>(99)), ShapeError);
  EXPECT_THROW(msstft_loss(std::vector<double>(100, 1.0), std::vector<double>(100, 0.0)),
               std::domain_error);
  MsstftConfig bad;
  bad.fft_sizes = {500};
  EXPECT_THROW(msstft_loss(std::vector<double>(100, 1.0), std::vector<double>(100, 1.0), bad),
               std::invalid_argument);
}

TEST(Msstft, VjpMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  const auto x = test::normal_vector(rng, 2400);
  const auto y = test::normal_vector(rng, 2400);
  const auto l = msstft_loss(x, y);
  auto f = [&](std::span<const double> z) { return msstft_loss(z, y, {}, false).value; };
  for (int trial = 0; trial < 3; ++trial) {
    const auto d = test::random_vector(rng, x.size());
    EXPECT_LT(test::rel_error(test::dot(l.grad, d), test::directional_fd(f, x, d, 1e-6)), 1e-4);
  }
}

TEST(L2, Examples) {
  std::mt19937_64 rng(4);
  const auto y = test::random_vector(rng, 64);
  EXPECT_EQ(l2_waveform(y, y).value, 0.0);
  auto x = y;
  x[10] += 0.25;
  EXPECT_NEAR(l2_waveform(x, y).value, 0.0625, 1e-15);
}

TEST(L2, ShiftedTones) {
  // Whole number of cycles so the sums are exact.
  const auto y = tone(1000, 0.01, 0.0);
  const double e = energy(y);
  EXPECT_NEAR(l2_waveform(tone(1000, 0.01, 0.5), y, false).value, 4.0 * e, 1e-9);
  EXPECT_NEAR(l2_waveform(tone(1000, 0.01, 0.25), y, false).value, 2.0 * e, 1e-9);
}

TEST(L2, GradientIsTwiceDifference) {
  const auto l = l2_waveform(std::vector{1.0, 2.0}, std::vector{0.5, 3.0});
  EXPECT_EQ(l.grad, (std::vector{1.0, -2.0}));
  EXPECT_THROW(l2_waveform(std::vector{1.0}, std::vector{1.0, 2.0}), ShapeError);
}

TEST(SynthesisLoss, WeightsCombineTerms) {
  std::mt19937_64 rng(5);
  const auto x = test::normal_vector(rng, 3000), y = test::normal_vector(rng, 3000);
  const auto m = msstft_loss(x, y), l = l2_waveform(x, y);
  const auto c = synthesis_loss(x, y, LossWeights{0.5, 2.0, {}});
  EXPECT_NEAR(c.value, 0.5 * m.value + 2.0 * l.value, 1e-9);
  for (std::size_t n = 0; n < x.size(); n += 101)
    EXPECT_NEAR(c.grad[n], 0.5 * m.grad[n] + 2.0 * l.grad[n], 1e-12);
  // An all-zero reference is fine without the spectral term.
  EXPECT_NO_THROW(synthesis_loss(x, std::vector<double>(3000), LossWeights{0.0, 1.0, {}}));
}

TEST(Adam, ZeroGradientLeavesParameters) {
  AdamConfig cfg;
  AdamState s(3);
  std::vector<double> p{1.0, -2.0, 3.0};
  adam_step(s, p, std::vector<double>(3, 0.0), cfg);
  EXPECT_EQ(p, (std::vector{1.0, -2.0, 3.0}));
  EXPECT_EQ(s.step, 1u);
}

TEST(Adam, FirstStepIsLearningRateTimesSign) {
  AdamConfig cfg;
  cfg.learning_rate = 0.01;
  AdamState s(3);
  std::vector<double> p(3, 0.0);
  adam_step(s, p, std::vector{3.0, -0.2, 1e-3}, cfg);
  EXPECT_NEAR(p[0], -0.01, 1e-10);
  EXPECT_NEAR(p[1], 0.01, 1e-9);
  EXPECT_NEAR(p[2], -0.01, 1e-6);
}

TEST(Adam, SteadyStateStepMatchesLearningRate) {
  AdamConfig cfg;
  AdamState s(1);
  std::vector<double> p{0.0};
  double before = 0.0;
  for (int i = 0; i < 1000; ++i) {
    before = p[0];
    adam_step(s, p, std::vector{-0.7}, cfg);
  }
  EXPECT_NEAR(p[0] - before, cfg.learning_rate, 1e-9);
}

TEST(Adam, NonFiniteGradientNamesParameter) {
  AdamState s(2);
  std::vector<double> p{0.0, 0.0};
  try {
    adam_step(s, p, std::vector<double>{0.0, NAN}, AdamConfig{}, "gamma");
    FAIL();
  } catch (const NonFiniteError& e) {
    EXPECT_NE(std::string(e.what()).find("gamma[1]"), std::string::npos);
  }
  EXPECT_EQ(p, (std::vector{0.0, 0.0}));
  AdamConfig bad;
  bad.beta1 = 1.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = {};
  bad.learning_rate = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Wrap, DifferencesLandInHalfInterval) {
  std::mt19937_64 rng(6);
  auto o = test::random_vector(rng, 50, -4.0, 4.0);
  const auto raw = o;
  wrap_offset_differences(o);
  for (std::size_t i = 0; i < o.size(); ++i) {
    EXPECT_LT(wrapped_distance(o[i], raw[i]), 1e-12);
    if (i > 0) EXPECT_LE(std::abs(o[i] - o[i - 1]), 0.5);
  }
  auto twice = o;
  wrap_offset_differences(twice);
  EXPECT_EQ(twice, o);
}

TEST(PhaseFit, AlignedTargetStaysAtZero) {
  const auto p = smooth_params(50);
  const auto target = render(p, small_tables(), 0).audio;
  AdamConfig cfg;
  cfg.steps = 20;
  PhaseFitOptions opt;
  opt.init = OffsetInit::Zero;
  const auto r = fit_phase_offset(p, small_tables(), target, cfg, 0, opt);
  ASSERT_EQ(r.loss_trace.size(), 21u);
  EXPECT_EQ(r.loss_trace[0], 0.0);
  EXPECT_EQ(r.final_loss, 0.0);
}

TEST(PhaseFit, RecoversConstantOffset) {
  const auto p = smooth_params(50);
  const std::size_t pts = offset_points_for(p.samples(), 1200);
  const auto target = render_with_offset(p, small_tables(), std::vector<double>(pts, 0.25), 0).audio;
  AdamConfig cfg;
  cfg.learning_rate = 0.005;
  cfg.steps = 300;
  PhaseFitOptions opt;
  opt.init = OffsetInit::Zero;
  const auto r = fit_phase_offset(p, small_tables(), target, cfg, 0, opt);
  for (std::size_t j = 1; j + 1 < pts; ++j) EXPECT_LT(wrapped_distance(r.offsets[j], 0.25), 0.01) << j;
  EXPECT_LT(r.final_loss, 1e-3 * energy(target));
}

TEST(PhaseFit, RestartsReportSpreadAndBeatUnaligned) {
  const auto p = smooth_params(50);
  const std::size_t pts = offset_points_for(p.samples(), 1200);
  std::vector<double> truth(pts);
  for (std::size_t j = 0; j < pts; ++j) truth[j] = 0.3 + 0.2 * std::sin(0.7 * static_cast<double>(j));
  const auto target = render_with_offset(p, small_tables(), truth, 0).audio;
  AdamConfig cfg;
  cfg.learning_rate = 0.005;
  cfg.steps = 200;
  const auto s = fit_phase_offset_restarts(p, small_tables(), target, cfg, 10, 5);
  ASSERT_EQ(s.runs.size(), 5u);
  EXPECT_LT(s.min_final_loss, s.max_final_loss);
  EXPECT_EQ(s.runs[s.best].final_loss, s.min_final_loss);
  const double unaligned = l2_waveform(render(p, small_tables(), 0).audio, target, false).value;
  EXPECT_LT(s.min_final_loss, unaligned);
  for (const auto& run : s.runs) EXPECT_EQ(run.loss_trace.size(), 201u);
  // Restart r uses seed + r.
  const auto again = fit_phase_offset(p, small_tables(), target, cfg, 12);
  EXPECT_EQ(again.loss_trace, s.runs[2].loss_trace);
}

TEST(PhaseFit, TargetLengthChecked) {
  const auto p = smooth_params(20);
  EXPECT_THROW(fit_phase_offset(p, small_tables(), std::vector<double>(10), AdamConfig{}, 0), ShapeError);
}

TEST(FitParams, MatchedTargetStartsAtZeroAndNeverRises) {
  std::mt19937_64 rng(7);
  auto p = make_flat_params(30, 0.01, 1.0, 0.8, 0.2, 0.5, 120, 480, 4);
  p.harmonic_filter = test::random_vector(rng, p.harmonic_filter.size(), -0.5, 0.5);
  const auto target = render(p, small_tables(), 3).audio;
  AdamConfig cfg;
  cfg.learning_rate = 1e-4;
  cfg.steps = 10;
  const auto r = fit_params(target, p, small_tables(), LossWeights{}, cfg, 3);
  ASSERT_EQ(r.loss_trace.size(), 11u);
  EXPECT_EQ(r.loss_trace[0], 0.0);
  for (std::size_t i = 1; i < r.loss_trace.size(); ++i) EXPECT_LE(r.loss_trace[i], r.loss_trace[i - 1]);
}

TEST(FitParams, RecoversHalvedGain) {
  auto truth = make_flat_params(50, 0.008, 1.0, 0.5, 0.0, 0.6, 120, 480, 4);
  const auto target = render(truth, small_tables(), 1).audio;
  auto init = truth;
  for (double& g : init.gamma) g = 1.0;
  AdamConfig cfg;
  cfg.learning_rate = 0.02;
  cfg.steps = 500;
  ParamFitOptions opt;
  opt.trainable = TrainableFields{false, false, true, false, false, false, false};
  const auto r = fit_params(target, init, small_tables(), LossWeights{}, cfg, 1, opt);
  for (double g : r.params.gamma) EXPECT_NEAR(g, 0.5, 0.05);
  double mean = 0.0;
  for (double g : r.params.gamma) mean += g / static_cast<double>(r.params.gamma.size());
  EXPECT_NEAR(mean, 0.5, 0.01);
  EXPECT_LT(r.final_loss, r.loss_trace.front());
  // Untrained fields are untouched.
  EXPECT_EQ(r.params.f, init.f);
  EXPECT_EQ(r.params.harmonic_filter, init.harmonic_filter);
}

TEST(FitParams, SilentTargetDrivesGainsDown) {
  const auto init = make_flat_params(30, 0.01, 1.0, 0.5, 0.5, 0.5, 120, 480, 4);
  AdamConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.steps = 100;
  ParamFitOptions opt;
  opt.trainable = TrainableFields{false, false, true, true, false, false, false};
  const auto r = fit_params(std::vector<double>(init.samples(), 0.0), init, small_tables(),
                            LossWeights{0.0, 1.0, {}}, cfg, 2, opt);
  for (std::size_t k = 0; k < init.frames(); ++k) {
    EXPECT_LT(r.params.gamma[k], 0.5);
    EXPECT_LT(r.params.beta[k], 0.5);
    EXPECT_GE(r.params.gamma[k], 0.0);
  }
  EXPECT_LT(r.final_loss, 0.1 * r.loss_trace.front());
}

TEST(FitParams, NonFiniteTargetAbortsWithTrace) {
  const auto init = make_flat_params(20, 0.01, 1.0, 0.5, 0.1, 0.5, 120, 480, 4);
  std::vector<double> target(init.samples(), 0.1);
  target[5] = NAN;
  AdamConfig cfg;
  cfg.steps = 5;
  try {
    fit_params(target, init, small_tables(), LossWeights{0.0, 1.0, {}}, cfg, 0);
    FAIL();
  } catch (const FitAborted& e) {
    EXPECT_TRUE(e.trace().empty());
    EXPECT_EQ(e.last_params().gamma, init.gamma);
  }
}

TEST(FitParams, Deterministic) {
  std::mt19937_64 rng(8);
  auto truth = make_flat_params(20, 0.01, 1.0, 0.7, 0.3, 0.5, 120, 480, 4);
  truth.noise_filter = test::random_vector(rng, truth.noise_filter.size());
  const auto target = render(truth, small_tables(), 9).audio;
  auto init = truth;
  for (double& b : init.beta) b = 0.1;
  AdamConfig cfg;
  cfg.steps = 5;
  const auto a = fit_params(target, init, small_tables(), LossWeights{1.0, 0.1, {}}, cfg, 4);
  const auto b = fit_params(target, init, small_tables(), LossWeights{1.0, 0.1, {}}, cfg, 4);
  EXPECT_EQ(a.loss_trace, b.loss_trace);
  EXPECT_EQ(a.params.noise_filter, b.params.noise_filter);
}

}  // namespace
}  // namespace golf

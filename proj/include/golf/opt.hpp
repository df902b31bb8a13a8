#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "golf/error.hpp"
#include "golf/glottal.hpp"
#include "golf/synth.hpp"

namespace golf {

// ---------------------------------------------------------------- losses

struct MsstftConfig {
  std::vector<std::size_t> fft_sizes{512, 1024, 2048};
  double epsilon = 1e-8;  // magnitude floor inside the log term
};

struct ResolutionTerms {
  std::size_t fft_size = 0;
  double spectral_convergence = 0.0;
  double log_magnitude = 0.0;
};

struct LossValue {
  double value = 0.0;
  std::vector<double> grad;  // dL/dx; empty when not requested
  std::vector<ResolutionTerms> terms;
};

/// Sum over resolutions of ||X| - |Y||_F / ||Y||_F plus
/// mean |log(|X| + eps) - log(|Y| + eps)|. Hann window, hop = fft / 4.
/// Throws if y has no spectral energy at some resolution.
LossValue msstft_loss(std::span<const double> x, std::span<const double> y,
                      const MsstftConfig& cfg = {}, bool want_grad = true);

/// sum_n (x[n] - y[n])^2.
LossValue l2_waveform(std::span<const double> x, std::span<const double> y, bool want_grad = true);

struct LossWeights {
  double msstft = 1.0;
  double l2 = 0.0;
  MsstftConfig msstft_config;
};

/// Weighted MSSTFT + L2; terms with zero weight are not evaluated.
LossValue synthesis_loss(std::span<const double> x, std::span<const double> y,
                         const LossWeights& weights, bool want_grad = true);

// ------------------------------------------------------------------ Adam

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t steps = 1000;

  void validate() const;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::size_t step = 0;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// One bias-corrected Adam update of `params` in place. Throws
/// NonFiniteError naming the first non-finite gradient entry.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad,
               const AdamConfig& cfg, std::string_view name = "parameter");

// ------------------------------------------------------- phase alignment

/// Wraps every consecutive difference into [-0.5, 0.5] and rebuilds the track
/// by cumulative sum from the first point. Each point keeps its value mod 1.
void wrap_offset_differences(std::span<double> offsets);

enum class OffsetInit { Random, Zero, Given };

struct PhaseFitOptions {
  OffsetInit init = OffsetInit::Random;
  std::vector<double> initial;  // used with OffsetInit::Given
  std::uint64_t noise_seed = 0;
  RenderOptions render;
};

struct PhaseFitResult {
  std::vector<double> offsets;
  std::vector<double> loss_trace;  // steps + 1 entries; the last is the final loss
  double final_loss = 0.0;
};

/// Fits only the phase-offset track by minimising the L2 waveform loss of
/// render_with_offset against `target`. Random initialisation draws each
/// point uniformly from [0, 1) using init_seed.
PhaseFitResult fit_phase_offset(const SynthParams& params, const Wavetables& tables,
                                std::span<const double> target, const AdamConfig& cfg,
                                std::uint64_t init_seed, const PhaseFitOptions& options = {});

/// Non-finite loss or gradient during a phase fit; carries the trace so far.
class PhaseFitAborted : public NonFiniteError {
 public:
  PhaseFitAborted(const std::string& what, std::vector<double> trace)
      : NonFiniteError(what), trace_(std::move(trace)) {}
  const std::vector<double>& trace() const { return trace_; }

 private:
  std::vector<double> trace_;
};

struct PhaseFitSummary {
  std::vector<PhaseFitResult> runs;
  std::size_t best = 0;
  double min_final_loss = 0.0;
  double max_final_loss = 0.0;
};

/// Independent restarts (restart r uses init seed init_seed + r), run
/// concurrently.
PhaseFitSummary fit_phase_offset_restarts(const SynthParams& params, const Wavetables& tables,
                                          std::span<const double> target, const AdamConfig& cfg,
                                          std::uint64_t init_seed, std::size_t restarts,
                                          const PhaseFitOptions& options = {});

// ------------------------------------------------ analysis by synthesis

struct TrainableFields {
  bool f = true;
  bool v = true;
  bool gamma = true;
  bool beta = true;
  bool tau = true;
  bool harmonic_filter = true;
  bool noise_filter = true;
};

struct ParamFitOptions {
  TrainableFields trainable;
  RenderOptions render;
};

struct ParamFitResult {
  SynthParams params;
  std::vector<double> loss_trace;  // steps + 1 entries
  double final_loss = 0.0;
};

/// Raised when the loss or its gradient turns non-finite; carries the trace
/// up to the failing step and the last finite parameters.
class FitAborted : public NonFiniteError {
 public:
  FitAborted(const std::string& what, std::vector<double> trace, SynthParams last)
      : NonFiniteError(what), trace_(std::move(trace)), last_(std::move(last)) {}
  const std::vector<double>& trace() const { return trace_; }
  const SynthParams& last_params() const { return last_; }

 private:
  std::vector<double> trace_;
  SynthParams last_;
};

/// Gradient descent on every trainable continuous field; bounded fields are
/// clamped back into range after each step. The Gaussian noise realisation
/// is fixed by noise_seed for the whole run.
ParamFitResult fit_params(std::span<const double> target, const SynthParams& init,
                          const Wavetables& tables, const LossWeights& weights,
                          const AdamConfig& cfg, std::uint64_t noise_seed,
                          const ParamFitOptions& options = {});

}  // namespace golf

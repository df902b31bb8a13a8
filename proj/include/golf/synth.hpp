#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "golf/filters.hpp"
#include "golf/glottal.hpp"

namespace golf {

/// Frame-rate control tracks for one clip.
struct SynthParams {
  double sample_rate = 24000.0;
  std::size_t hop = 120;      // T
  std::size_t window = 480;   // W
  std::size_t lpc_order = 22; // M, for both paths
  std::size_t tau_stride = 10;
  std::string table_ref;

  std::vector<double> f;      // normalized frequency per frame, [0, 0.5]
  std::vector<double> v;      // voicing per frame, [0, 1]
  std::vector<double> gamma;  // harmonic gain per frame, >= 0
  std::vector<double> beta;   // noise gain per frame, >= 0
  std::vector<double> tau;    // Rd fractional index, one per tau_stride frames, [0, 1]
  std::vector<double> harmonic_filter;  // frames * lpc_order unconstrained (x1, x2) pairs
  std::vector<double> noise_filter;     // frames * lpc_order

  std::size_t frames() const { return f.size(); }
  std::size_t samples() const { return f.size() * hop; }
  std::size_t tau_points() const { return (frames() + tau_stride - 1) / tau_stride; }

  /// Throws ShapeError when track lengths disagree or sizes are invalid.
  void validate() const;
  /// Projects bounded tracks onto their ranges.
  void clamp_ranges();
};

/// Constant-valued parameters for `frames` frames with identity cascades.
SynthParams make_flat_params(std::size_t frames, double f, double v, double gamma, double beta,
                             double tau, std::size_t hop = 120, std::size_t window = 480,
                             std::size_t lpc_order = 22, double sample_rate = 24000.0);

/// Piecewise-linear interpolation between values anchored at n = k * hop,
/// constant after the last anchor. Output length defaults to size * hop.
std::vector<double> upsample_linear(std::span<const double> track, std::size_t hop,
                                    std::size_t out_length = 0);
std::vector<double> upsample_linear_vjp(std::span<const double> grad, std::size_t track_length,
                                        std::size_t hop);

/// Unit-variance Gaussian samples addressed by (seed, index); any sub-range
/// can be regenerated independently.
std::vector<double> gaussian_noise(std::uint64_t seed, std::size_t count);

enum class SourceKind { Wavetable, PulseTrain };

struct RenderOptions {
  SourceKind source = SourceKind::Wavetable;
  /// Block gradients from the harmonic source back to f and v.
  bool stop_source_gradient = false;
  /// Sampling rate of the phase-offset track in Hz.
  double offset_rate = 20.0;
};

/// Samples per offset point; sample_rate / offset_rate must be a whole number.
std::size_t offset_hop(double sample_rate, double offset_rate);
/// Smallest offset track covering `samples` with an anchor at or past the end.
std::size_t offset_points_for(std::size_t samples, std::size_t hop);

struct RenderOutput {
  std::vector<double> audio;
  std::vector<double> harmonic;
  std::vector<double> noise;
  std::vector<double> phase;
};

/// Everything the adjoint needs from a forward render.
struct RenderTape {
  SynthParams params;  // after clamping
  std::vector<double> offsets;
  std::size_t offset_hop = 0;
  std::vector<double> f_n, v_n, gamma_n, beta_n, tau_n;
  std::vector<double> source;  // harmonic excitation before gain
  std::vector<double> noise_source;
  std::vector<double> window;
  FrameCoeffs harmonic_coeffs;
  FrameCoeffs noise_coeffs;
  FramewiseTape harmonic_tape;
  FramewiseTape noise_tape;
  // 1 where the raw value was inside its range, 0 where clamped.
  std::vector<double> f_mask, v_mask, gamma_mask, beta_mask, tau_mask;
};

struct RenderForward {
  RenderOutput output;
  RenderTape tape;
};

RenderForward render_forward(const SynthParams& params, const Wavetables& tables,
                             std::span<const double> offsets, std::uint64_t noise_seed,
                             const RenderOptions& options = {});

RenderOutput render(const SynthParams& params, const Wavetables& tables, std::uint64_t noise_seed,
                    const RenderOptions& options = {});

/// `offsets` is the phase-offset track at options.offset_rate; it is linearly
/// upsampled and added to the accumulated phase.
RenderOutput render_with_offset(const SynthParams& params, const Wavetables& tables,
                                std::span<const double> offsets, std::uint64_t noise_seed,
                                const RenderOptions& options = {});

struct SynthGrad {
  std::vector<double> f, v, gamma, beta, tau;
  std::vector<double> harmonic_filter, noise_filter;
  std::vector<double> offsets;
};

/// Which gradients render_vjp should produce. Skipping the filter
/// coefficients or the noise branch saves one filtering pass each.
struct GradRequest {
  bool harmonic_filter = true;
  bool noise_branch = true;
};

SynthGrad render_vjp(const RenderTape& tape, const Wavetables& tables,
                     std::span<const double> grad_audio, const RenderOptions& options = {},
                     const GradRequest& request = {});

}  // namespace golf

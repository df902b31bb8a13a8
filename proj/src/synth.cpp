#include "golf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "golf/error.hpp"
#include "golf/oscillator.hpp"
#include "golf/parallel.hpp"

namespace golf {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform in (0, 1], never zero so the log below stays finite.
double unit_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

std::vector<double> clamp_track(std::vector<double>& track, double lo, double hi) {
  std::vector<double> mask(track.size(), 1.0);
  for (std::size_t i = 0; i < track.size(); ++i) {
    if (track[i] < lo || track[i] > hi) {
      track[i] = std::clamp(track[i], lo, hi);
      mask[i] = 0.0;
    }
  }
  return mask;
}

FrameCoeffs coeffs_from_unconstrained(const std::vector<double>& x, std::size_t frames,
                                      const SynthParams& p) {
  FrameCoeffs fc;
  fc.order = p.lpc_order;
  fc.hop = p.hop;
  fc.window = p.window;
  fc.coeffs.resize(frames * p.lpc_order);
  parallel_for(frames, [&](std::size_t k) {
    const auto a = direct_from_unconstrained(
        std::span(x.data() + k * p.lpc_order, p.lpc_order));
    std::copy(a.begin(), a.end(), fc.coeffs.begin() + static_cast<std::ptrdiff_t>(k * p.lpc_order));
  });
  return fc;
}

std::vector<double> filter_grad_to_unconstrained(const std::vector<double>& x,
                                                 const std::vector<double>& d_coeffs,
                                                 std::size_t frames, std::size_t order) {
  std::vector<double> d_x(frames * order, 0.0);
  parallel_for(frames, [&](std::size_t k) {
    const auto g = direct_from_unconstrained_vjp(std::span(x.data() + k * order, order),
                                                 std::span(d_coeffs.data() + k * order, order));
    std::copy(g.begin(), g.end(), d_x.begin() + static_cast<std::ptrdiff_t>(k * order));
  });
  return d_x;
}

void apply_mask(std::vector<double>& grad, const std::vector<double>& mask) {
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= mask[i];
}

}  // namespace

void SynthParams::validate() const {
  const std::size_t n = frames();
  if (n == 0) throw ShapeError("SynthParams: no frames");
  if (hop == 0 || window < hop) throw ShapeError("SynthParams: require 0 < hop <= window");
  if (lpc_order == 0 || lpc_order % 2 != 0) throw ShapeError("SynthParams: lpc_order must be even");
  if (tau_stride == 0) throw ShapeError("SynthParams: tau_stride must be positive");
  if (!(sample_rate > 0.0)) throw ShapeError("SynthParams: sample_rate must be positive");
  if (v.size() != n || gamma.size() != n || beta.size() != n)
    throw ShapeError("SynthParams: f, v, gamma, beta must have equal length");
  if (tau.size() != tau_points())
    throw ShapeError("SynthParams: tau needs " + std::to_string(tau_points()) + " points, got " +
                     std::to_string(tau.size()));
  if (harmonic_filter.size() != n * lpc_order || noise_filter.size() != n * lpc_order)
    throw ShapeError("SynthParams: filter tracks must hold frames * lpc_order values");
}

void SynthParams::clamp_ranges() {
  clamp_track(f, 0.0, 0.5);
  clamp_track(v, 0.0, 1.0);
  clamp_track(gamma, 0.0, INFINITY);
  clamp_track(beta, 0.0, INFINITY);
  clamp_track(tau, 0.0, 1.0);
}

SynthParams make_flat_params(std::size_t frames, double f, double v, double gamma, double beta,
                             double tau, std::size_t hop, std::size_t window,
                             std::size_t lpc_order, double sample_rate) {
  SynthParams p;
  p.sample_rate = sample_rate;
  p.hop = hop;
  p.window = window;
  p.lpc_order = lpc_order;
  p.f.assign(frames, f);
  p.v.assign(frames, v);
  p.gamma.assign(frames, gamma);
  p.beta.assign(frames, beta);
  p.tau.assign(p.tau_points(), tau);
  p.harmonic_filter.assign(frames * lpc_order, 0.0);
  p.noise_filter.assign(frames * lpc_order, 0.0);
  return p;
}

std::vector<double> upsample_linear(std::span<const double> track, std::size_t hop,
                                    std::size_t out_length) {
  if (track.empty()) throw std::invalid_argument("upsample_linear: empty track");
  if (hop == 0) throw std::invalid_argument("upsample_linear: hop must be positive");
  if (out_length == 0) out_length = track.size() * hop;
  std::vector<double> out(out_length);
  const double inv_hop = 1.0 / static_cast<double>(hop);
  for (std::size_t n = 0; n < out_length; ++n) {
    const std::size_t k = n / hop;
    if (k + 1 >= track.size()) {
      out[n] = track.back();
      continue;
    }
    const double r = static_cast<double>(n - k * hop) * inv_hop;
    out[n] = (1.0 - r) * track[k] + r * track[k + 1];
  }
  return out;
}

std::vector<double> upsample_linear_vjp(std::span<const double> grad, std::size_t track_length,
                                        std::size_t hop) {
  if (track_length == 0) throw std::invalid_argument("upsample_linear_vjp: empty track");
  std::vector<double> d(track_length, 0.0);
  const double inv_hop = 1.0 / static_cast<double>(hop);
  for (std::size_t n = 0; n < grad.size(); ++n) {
    const std::size_t k = n / hop;
    if (k + 1 >= track_length) {
      d.back() += grad[n];
      continue;
    }
    const double r = static_cast<double>(n - k * hop) * inv_hop;
    d[k] += (1.0 - r) * grad[n];
    d[k + 1] += r * grad[n];
  }
  return d;
}

std::vector<double> gaussian_noise(std::uint64_t seed, std::size_t count) {
  std::vector<double> out(count);
  const std::uint64_t key = splitmix64(seed ^ 0x6a09e667f3bcc909ULL);
  for (std::size_t i = 0; i < count; i += 2) {
    const std::uint64_t counter = i / 2;
    const double u1 = unit_open(splitmix64(key + 2 * counter));
    const double u2 = unit_open(splitmix64(key + 2 * counter + 1));
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    out[i] = radius * std::cos(angle);
    if (i + 1 < count) out[i + 1] = radius * std::sin(angle);
  }
  return out;
}

std::size_t offset_hop(double sample_rate, double offset_rate) {
  const double ratio = sample_rate / offset_rate;
  const double rounded = std::round(ratio);
  if (!(offset_rate > 0.0) || rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * ratio)
    throw std::invalid_argument("sample_rate / offset_rate must be a positive whole number");
  return static_cast<std::size_t>(rounded);
}

std::size_t offset_points_for(std::size_t samples, std::size_t hop) {
  return (samples + hop - 1) / hop + 1;
}

RenderForward render_forward(const SynthParams& params, const Wavetables& tables,
                             std::span<const double> offsets, std::uint64_t noise_seed,
                             const RenderOptions& options) {
  params.validate();
  if (tables.empty() && options.source == SourceKind::Wavetable)
    throw std::invalid_argument("render: empty wavetables");

  RenderForward fwd;
  RenderTape& t = fwd.tape;
  t.params = params;
  SynthParams& p = t.params;
  t.f_mask = clamp_track(p.f, 0.0, 0.5);
  t.v_mask = clamp_track(p.v, 0.0, 1.0);
  t.gamma_mask = clamp_track(p.gamma, 0.0, INFINITY);
  t.beta_mask = clamp_track(p.beta, 0.0, INFINITY);
  t.tau_mask = clamp_track(p.tau, 0.0, 1.0);

  const std::size_t frames = p.frames();
  const std::size_t n_samples = p.samples();

  t.f_n = upsample_linear(p.f, p.hop, n_samples);
  t.v_n = upsample_linear(p.v, p.hop, n_samples);
  t.gamma_n = upsample_linear(p.gamma, p.hop, n_samples);
  t.beta_n = upsample_linear(p.beta, p.hop, n_samples);
  const auto tau_k = upsample_linear(p.tau, p.tau_stride, frames);
  t.tau_n = upsample_linear(tau_k, p.hop, n_samples);

  std::vector<double> offset_n;
  if (!offsets.empty()) {
    t.offset_hop = offset_hop(p.sample_rate, options.offset_rate);
    if (offsets.size() < (n_samples + t.offset_hop - 1) / t.offset_hop)
      throw ShapeError("render_with_offset: offset track too short for the clip");
    t.offsets.assign(offsets.begin(), offsets.end());
    offset_n = upsample_linear(offsets, t.offset_hop, n_samples);
  }

  const auto f_hat = gate_frequency(t.f_n, t.v_n);
  auto& out = fwd.output;
  out.phase = accumulate_phase(f_hat, offset_n);
  t.source = options.source == SourceKind::Wavetable ? wavetable_lookup(out.phase, t.tau_n, tables)
                                                     : pulse_train(out.phase, f_hat);
  // Fully unvoiced samples carry no harmonic excitation: the frozen
  // oscillator would otherwise hold a constant non-zero table value.
  for (std::size_t n = 0; n < n_samples; ++n)
    if (t.v_n[n] == 0.0) t.source[n] = 0.0;

  t.window = hann_window(p.window);
  t.harmonic_coeffs = coeffs_from_unconstrained(p.harmonic_filter, frames, p);
  t.noise_coeffs = coeffs_from_unconstrained(p.noise_filter, frames, p);

  auto harmonic = framewise_lpc(t.source, t.gamma_n, t.harmonic_coeffs, t.window);
  t.harmonic_tape = std::move(harmonic.tape);
  out.harmonic = std::move(harmonic.output);

  t.noise_source = gaussian_noise(noise_seed, n_samples);
  auto noise = framewise_lpc(t.noise_source, t.beta_n, t.noise_coeffs, t.window);
  t.noise_tape = std::move(noise.tape);
  out.noise = std::move(noise.output);

  out.audio.resize(n_samples);
  for (std::size_t n = 0; n < n_samples; ++n) out.audio[n] = out.harmonic[n] + out.noise[n];
  return fwd;
}

RenderOutput render(const SynthParams& params, const Wavetables& tables, std::uint64_t noise_seed,
                    const RenderOptions& options) {
  return render_forward(params, tables, {}, noise_seed, options).output;
}

RenderOutput render_with_offset(const SynthParams& params, const Wavetables& tables,
                                std::span<const double> offsets, std::uint64_t noise_seed,
                                const RenderOptions& options) {
  return render_forward(params, tables, offsets, noise_seed, options).output;
}

SynthGrad render_vjp(const RenderTape& t, const Wavetables& tables,
                     std::span<const double> grad_audio, const RenderOptions& options,
                     const GradRequest& request) {
  const SynthParams& p = t.params;
  const std::size_t frames = p.frames();
  const std::size_t n_samples = p.samples();
  if (grad_audio.size() != n_samples) throw ShapeError("render_vjp: gradient length mismatch");

  SynthGrad g;

  // Harmonic branch.
  const auto hg = framewise_lpc_vjp(grad_audio, t.source, t.gamma_n, t.harmonic_coeffs, t.window,
                                    t.harmonic_tape, request.harmonic_filter);
  g.gamma = upsample_linear_vjp(hg.d_gain, frames, p.hop);
  apply_mask(g.gamma, t.gamma_mask);
  if (request.harmonic_filter)
    g.harmonic_filter = filter_grad_to_unconstrained(p.harmonic_filter, hg.d_coeffs, frames, p.lpc_order);

  std::vector<double> d_source = hg.d_source;
  for (std::size_t n = 0; n < n_samples; ++n)
    if (t.v_n[n] == 0.0) d_source[n] = 0.0;

  const auto f_hat = gate_frequency(t.f_n, t.v_n);
  std::vector<double> phase;
  {
    std::vector<double> offset_n;
    if (!t.offsets.empty()) offset_n = upsample_linear(t.offsets, t.offset_hop, n_samples);
    phase = accumulate_phase(f_hat, offset_n);
  }

  std::vector<double> d_phi;
  std::vector<double> d_tau_n(n_samples, 0.0);
  if (options.source == SourceKind::Wavetable) {
    auto lg = wavetable_lookup_vjp(d_source, phase, t.tau_n, tables);
    d_phi = std::move(lg.d_phi);
    d_tau_n = std::move(lg.d_tau);
  } else {
    d_phi = pulse_train_vjp(d_source, phase, f_hat);
  }

  const auto tau_k_grad = upsample_linear_vjp(d_tau_n, frames, p.hop);
  g.tau = upsample_linear_vjp(tau_k_grad, p.tau.size(), p.tau_stride);
  apply_mask(g.tau, t.tau_mask);

  const auto pg = accumulate_phase_vjp(d_phi);
  if (!t.offsets.empty()) g.offsets = upsample_linear_vjp(pg.d_offset, t.offsets.size(), t.offset_hop);

  if (options.stop_source_gradient) {
    g.f.assign(frames, 0.0);
    g.v.assign(frames, 0.0);
  } else {
    const auto gg = gate_frequency_vjp(pg.d_f_hat, t.f_n, t.v_n);
    g.f = upsample_linear_vjp(gg.d_f, frames, p.hop);
    g.v = upsample_linear_vjp(gg.d_v, frames, p.hop);
    apply_mask(g.f, t.f_mask);
    apply_mask(g.v, t.v_mask);
  }

  // Noise branch.
  if (request.noise_branch) {
    const auto ng = framewise_lpc_vjp(grad_audio, t.noise_source, t.beta_n, t.noise_coeffs,
                                      t.window, t.noise_tape, true);
    g.beta = upsample_linear_vjp(ng.d_gain, frames, p.hop);
    apply_mask(g.beta, t.beta_mask);
    g.noise_filter = filter_grad_to_unconstrained(p.noise_filter, ng.d_coeffs, frames, p.lpc_order);
  }
  return g;
}

}  // namespace golf

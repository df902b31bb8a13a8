#include "golf/opt.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <sstream>
#include <stdexcept>

#include "golf/filters.hpp"
#include "golf/parallel.hpp"
#include "golf/stft.hpp"

namespace golf {
namespace {

void require_equal_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw ShapeError(std::string(what) + ": length mismatch");
}

struct Spectrum {
  std::vector<std::complex<double>> bins;  // frames * (fft/2 + 1)
  std::vector<double> magnitude;
};

Spectrum analyse(std::span<const double> x, const StftLayout& layout, const RealFft& fft,
                 const std::vector<double>& window) {
  const std::size_t nb = fft.bins();
  Spectrum s;
  s.bins.resize(layout.frames * nb);
  s.magnitude.resize(layout.frames * nb);
  std::vector<double> frame(layout.fft_size);
  for (std::size_t t = 0; t < layout.frames; ++t) {
    const std::size_t start = t * layout.hop;
    for (std::size_t j = 0; j < layout.fft_size; ++j) {
      const std::size_t n = start + j;
      frame[j] = n < x.size() ? x[n] * window[j] : 0.0;
    }
    fft.forward(frame, std::span(s.bins.data() + t * nb, nb));
  }
  for (std::size_t i = 0; i < s.bins.size(); ++i) s.magnitude[i] = std::abs(s.bins[i]);
  return s;
}

}  // namespace

LossValue msstft_loss(std::span<const double> x, std::span<const double> y,
                      const MsstftConfig& cfg, bool want_grad) {
  require_equal_length(x.size(), y.size(), "msstft_loss");
  if (x.empty()) throw ShapeError("msstft_loss: empty input");
  LossValue out;
  if (want_grad) out.grad.assign(x.size(), 0.0);

  for (std::size_t fft_size : cfg.fft_sizes) {
    if (fft_size == 0 || (fft_size & (fft_size - 1)) != 0)
      throw std::invalid_argument("msstft_loss: FFT sizes must be powers of two");
    const RealFft fft(fft_size);
    const StftLayout layout = stft_layout(x.size(), fft_size);
    const auto window = hann_window(fft_size);
    const Spectrum sx = analyse(x, layout, fft, window);
    const Spectrum sy = analyse(y, layout, fft, window);

    double diff_sq = 0.0, ref_sq = 0.0, log_sum = 0.0;
    const std::size_t count = sx.magnitude.size();
    for (std::size_t i = 0; i < count; ++i) {
      const double d = sx.magnitude[i] - sy.magnitude[i];
      diff_sq += d * d;
      ref_sq += sy.magnitude[i] * sy.magnitude[i];
      log_sum += std::abs(std::log(sx.magnitude[i] + cfg.epsilon) -
                          std::log(sy.magnitude[i] + cfg.epsilon));
    }
    if (ref_sq == 0.0)
      throw std::domain_error("msstft_loss: reference has no spectral energy (all-zero target?)");
    const double diff_norm = std::sqrt(diff_sq);
    const double ref_norm = std::sqrt(ref_sq);
    ResolutionTerms terms{fft_size, diff_norm / ref_norm, log_sum / static_cast<double>(count)};
    out.value += terms.spectral_convergence + terms.log_magnitude;
    out.terms.push_back(terms);

    if (!want_grad) continue;
    const std::size_t nb = fft.bins();
    std::vector<std::complex<double>> g(nb);
    std::vector<double> frame_grad(fft_size);
    const double sc_scale = diff_norm > 0.0 ? 1.0 / (diff_norm * ref_norm) : 0.0;
    const double log_scale = 1.0 / static_cast<double>(count);
    for (std::size_t t = 0; t < layout.frames; ++t) {
      for (std::size_t k = 0; k < nb; ++k) {
        const std::size_t i = t * nb + k;
        const double mx = sx.magnitude[i], my = sy.magnitude[i];
        const double log_diff = std::log(mx + cfg.epsilon) - std::log(my + cfg.epsilon);
        const double sgn = log_diff > 0.0 ? 1.0 : (log_diff < 0.0 ? -1.0 : 0.0);
        const double d_mag = (mx - my) * sc_scale + sgn * log_scale / (mx + cfg.epsilon);
        g[k] = mx > 0.0 ? sx.bins[i] * (d_mag / mx) : std::complex<double>(0.0, 0.0);
      }
      fft.adjoint(g, frame_grad);
      const std::size_t start = t * layout.hop;
      for (std::size_t j = 0; j < fft_size && start + j < x.size(); ++j)
        out.grad[start + j] += frame_grad[j] * window[j];
    }
  }
  return out;
}

LossValue l2_waveform(std::span<const double> x, std::span<const double> y, bool want_grad) {
  require_equal_length(x.size(), y.size(), "l2_waveform");
  LossValue out;
  if (want_grad) out.grad.resize(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double d = x[n] - y[n];
    out.value += d * d;
    if (want_grad) out.grad[n] = 2.0 * d;
  }
  return out;
}

LossValue synthesis_loss(std::span<const double> x, std::span<const double> y,
                         const LossWeights& weights, bool want_grad) {
  require_equal_length(x.size(), y.size(), "synthesis_loss");
  LossValue out;
  if (want_grad) out.grad.assign(x.size(), 0.0);
  if (weights.msstft != 0.0) {
    const auto m = msstft_loss(x, y, weights.msstft_config, want_grad);
    out.value += weights.msstft * m.value;
    out.terms = m.terms;
    if (want_grad)
      for (std::size_t n = 0; n < x.size(); ++n) out.grad[n] += weights.msstft * m.grad[n];
  }
  if (weights.l2 != 0.0) {
    const auto l = l2_waveform(x, y, want_grad);
    out.value += weights.l2 * l.value;
    if (want_grad)
      for (std::size_t n = 0; n < x.size(); ++n) out.grad[n] += weights.l2 * l.grad[n];
  }
  return out;
}

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("Adam: learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw std::invalid_argument("Adam: betas must lie in [0, 1)");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("Adam: epsilon must be non-negative");
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad,
               const AdamConfig& cfg, std::string_view name) {
  if (params.size() != grad.size()) throw ShapeError("adam_step: parameter/gradient size mismatch");
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      std::ostringstream msg;
      msg << "non-finite gradient for " << name << '[' << i << ']';
      throw NonFiniteError(msg.str());
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

void wrap_offset_differences(std::span<double> offsets) {
  if (offsets.size() < 2) return;
  double prev_raw = offsets[0];
  for (std::size_t i = 1; i < offsets.size(); ++i) {
    const double d = offsets[i] - prev_raw;
    prev_raw = offsets[i];
    offsets[i] = offsets[i - 1] + (d - std::round(d));
  }
}

PhaseFitResult fit_phase_offset(const SynthParams& params, const Wavetables& tables,
                                std::span<const double> target, const AdamConfig& cfg,
                                std::uint64_t init_seed, const PhaseFitOptions& options) {
  cfg.validate();
  params.validate();
  if (target.size() != params.samples())
    throw ShapeError("fit_phase_offset: target length " + std::to_string(target.size()) +
                     " != render length " + std::to_string(params.samples()));
  const std::size_t hop = offset_hop(params.sample_rate, options.render.offset_rate);
  const std::size_t points = offset_points_for(params.samples(), hop);

  PhaseFitResult result;
  switch (options.init) {
    case OffsetInit::Zero:
      result.offsets.assign(points, 0.0);
      break;
    case OffsetInit::Given:
      if (options.initial.size() < points - 1)
        throw ShapeError("fit_phase_offset: initial offset track too short");
      result.offsets = options.initial;
      break;
    case OffsetInit::Random: {
      std::mt19937_64 rng(init_seed);
      std::uniform_real_distribution<double> uniform(0.0, 1.0);
      result.offsets.resize(points);
      for (double& o : result.offsets) o = uniform(rng);
      break;
    }
  }
  wrap_offset_differences(result.offsets);

  // The noise branch does not depend on the offsets, but it is part of the
  // rendered waveform the target is compared with.
  const GradRequest request{.harmonic_filter = false, .noise_branch = false};
  AdamState adam(result.offsets.size());
  result.loss_trace.reserve(cfg.steps + 1);
  for (std::size_t step = 0;; ++step) {
    const auto fwd = render_forward(params, tables, result.offsets, options.noise_seed, options.render);
    const auto loss = l2_waveform(fwd.output.audio, target, step < cfg.steps);
    if (!std::isfinite(loss.value))
      throw PhaseFitAborted("fit_phase_offset: non-finite loss at step " + std::to_string(step),
                            result.loss_trace);
    result.loss_trace.push_back(loss.value);
    if (step == cfg.steps) break;
    const auto grad = render_vjp(fwd.tape, tables, loss.grad, options.render, request);
    try {
      adam_step(adam, result.offsets, grad.offsets, cfg, "phase offset");
    } catch (const NonFiniteError& e) {
      throw PhaseFitAborted(e.what(), result.loss_trace);
    }
    wrap_offset_differences(result.offsets);
  }
  result.final_loss = result.loss_trace.back();
  return result;
}

PhaseFitSummary fit_phase_offset_restarts(const SynthParams& params, const Wavetables& tables,
                                          std::span<const double> target, const AdamConfig& cfg,
                                          std::uint64_t init_seed, std::size_t restarts,
                                          const PhaseFitOptions& options) {
  if (restarts == 0) throw std::invalid_argument("fit_phase_offset_restarts: need >= 1 restart");
  PhaseFitSummary summary;
  summary.runs.resize(restarts);
  parallel_for(restarts, [&](std::size_t r) {
    summary.runs[r] = fit_phase_offset(params, tables, target, cfg, init_seed + r, options);
  });
  summary.min_final_loss = summary.runs[0].final_loss;
  summary.max_final_loss = summary.runs[0].final_loss;
  for (std::size_t r = 1; r < restarts; ++r) {
    const double l = summary.runs[r].final_loss;
    if (l < summary.min_final_loss) {
      summary.min_final_loss = l;
      summary.best = r;
    }
    summary.max_final_loss = std::max(summary.max_final_loss, l);
  }
  return summary;
}

namespace {

struct Field {
  std::vector<double>* values;
  const std::vector<double>* grad;
  const char* name;
};

}  // namespace

ParamFitResult fit_params(std::span<const double> target, const SynthParams& init,
                          const Wavetables& tables, const LossWeights& weights,
                          const AdamConfig& cfg, std::uint64_t noise_seed,
                          const ParamFitOptions& options) {
  cfg.validate();
  init.validate();
  if (target.size() != init.samples())
    throw ShapeError("fit_params: target length " + std::to_string(target.size()) +
                     " != render length " + std::to_string(init.samples()));

  ParamFitResult result;
  result.params = init;
  result.params.clamp_ranges();
  SynthParams& p = result.params;
  const auto& tr = options.trainable;

  std::vector<AdamState> states(7);
  result.loss_trace.reserve(cfg.steps + 1);
  for (std::size_t step = 0;; ++step) {
    const bool update = step < cfg.steps;
    const auto fwd = render_forward(p, tables, {}, noise_seed, options.render);
    const auto loss = synthesis_loss(fwd.output.audio, target, weights, update);
    if (!std::isfinite(loss.value))
      throw FitAborted("fit_params: non-finite loss at step " + std::to_string(step),
                       result.loss_trace, p);
    result.loss_trace.push_back(loss.value);
    if (!update) break;

    const GradRequest request{.harmonic_filter = tr.harmonic_filter,
                              .noise_branch = tr.beta || tr.noise_filter};
    const SynthGrad g = render_vjp(fwd.tape, tables, loss.grad, options.render, request);
    const Field fields[] = {
        {tr.f ? &p.f : nullptr, &g.f, "f"},
        {tr.v ? &p.v : nullptr, &g.v, "v"},
        {tr.gamma ? &p.gamma : nullptr, &g.gamma, "gamma"},
        {tr.beta ? &p.beta : nullptr, &g.beta, "beta"},
        {tr.tau ? &p.tau : nullptr, &g.tau, "tau"},
        {tr.harmonic_filter ? &p.harmonic_filter : nullptr, &g.harmonic_filter, "harmonic_filter"},
        {tr.noise_filter ? &p.noise_filter : nullptr, &g.noise_filter, "noise_filter"},
    };
    for (const Field& field : fields) {
      if (field.values == nullptr) continue;
      const auto bad = std::find_if(field.grad->begin(), field.grad->end(),
                                    [](double x) { return !std::isfinite(x); });
      if (bad != field.grad->end())
        throw FitAborted("fit_params: non-finite gradient for " + std::string(field.name) + '[' +
                             std::to_string(bad - field.grad->begin()) + "] at step " +
                             std::to_string(step),
                         result.loss_trace, p);
    }
    for (std::size_t i = 0; i < std::size(fields); ++i)
      if (fields[i].values != nullptr)
        adam_step(states[i], *fields[i].values, *fields[i].grad, cfg, fields[i].name);
    p.clamp_ranges();
  }
  result.final_loss = result.loss_trace.back();
  return result;
}

}  // namespace golf

#include "golf/filters.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "golf/error.hpp"
#include "golf/iir.hpp"
#include "golf/parallel.hpp"

namespace golf {
namespace {

double limited_tanh(double x, double& slope) {
  const double t = std::tanh(x);
  if (t > kTanhLimit) {
    slope = 0.0;
    return kTanhLimit;
  }
  if (t < -kTanhLimit) {
    slope = 0.0;
    return -kTanhLimit;
  }
  slope = 1.0 - t * t;
  return t;
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Coefficients of prod(1 + eta1 z^-1 + eta2 z^-2), leading 1 included.
std::vector<double> poly_product(std::span<const BiquadSection> sections, std::size_t skip) {
  std::vector<double> poly{1.0};
  poly.reserve(2 * sections.size() + 1);
  for (std::size_t i = 0; i < sections.size(); ++i) {
    if (i == skip) continue;
    const auto& s = sections[i];
    poly.resize(poly.size() + 2, 0.0);
    for (std::size_t m = poly.size(); m-- > 1;) {
      poly[m] += s.eta1 * poly[m - 1];
      if (m >= 2) poly[m] += s.eta2 * poly[m - 2];
    }
  }
  return poly;
}

void check_frames(std::size_t length, const FrameCoeffs& frames, std::span<const double> window,
                  bool need_window) {
  if (frames.order == 0 || frames.coeffs.size() % frames.order != 0)
    throw ShapeError("frame coefficients are not a whole number of frames");
  if (frames.hop == 0 || frames.window < frames.hop)
    throw ShapeError("frame grid requires 0 < hop <= window");
  if (need_window && window.size() != frames.window)
    throw ShapeError("synthesis window length differs from frame window");
  if (frames.frames() * frames.hop < length)
    throw ShapeError("frame grid shorter than signal (" + std::to_string(frames.frames()) +
                     " frames of hop " + std::to_string(frames.hop) + " for " +
                     std::to_string(length) + " samples)");
}

}  // namespace

bool is_stable(const BiquadSection& s) {
  return std::abs(s.eta2) < 1.0 && std::abs(s.eta1) < 1.0 + s.eta2;
}

BiquadSection biquad_from_unconstrained(double x1, double x2) {
  if (!std::isfinite(x1) || !std::isfinite(x2))
    throw std::invalid_argument("biquad_from_unconstrained: non-finite input");
  double s1 = 0.0, s2 = 0.0;
  const double t1 = limited_tanh(x1, s1);
  const double t2 = limited_tanh(x2, s2);
  BiquadSection out;
  out.eta1 = 2.0 * t1;
  const double mag = std::abs(out.eta1);
  out.eta2 = ((2.0 - mag) * t2 + mag) / 2.0;
  return out;
}

std::pair<double, double> biquad_from_unconstrained_vjp(double x1, double x2, double d_eta1,
                                                        double d_eta2) {
  double s1 = 0.0, s2 = 0.0;
  const double t1 = limited_tanh(x1, s1);
  const double t2 = limited_tanh(x2, s2);
  const double eta1 = 2.0 * t1;
  const double mag = std::abs(eta1);
  const double d_eta1_total = d_eta1 + d_eta2 * sign(eta1) * (1.0 - t2) / 2.0;
  const double d_x1 = d_eta1_total * 2.0 * s1;
  const double d_x2 = d_eta2 * (2.0 - mag) / 2.0 * s2;
  return {d_x1, d_x2};
}

std::vector<double> cascade_to_direct(std::span<const BiquadSection> sections) {
  if (sections.empty()) throw std::invalid_argument("cascade_to_direct: no sections");
  auto poly = poly_product(sections, sections.size());
  return {poly.begin() + 1, poly.end()};
}

std::vector<BiquadSection> cascade_to_direct_vjp(std::span<const BiquadSection> sections,
                                                 std::span<const double> d_a) {
  if (sections.empty()) throw std::invalid_argument("cascade_to_direct_vjp: no sections");
  if (d_a.size() != 2 * sections.size()) throw ShapeError("cascade_to_direct_vjp: bad gradient size");
  std::vector<BiquadSection> grad(sections.size());
  for (std::size_t i = 0; i < sections.size(); ++i) {
    const auto others = poly_product(sections, i);  // length M - 1
    double g1 = 0.0, g2 = 0.0;
    for (std::size_t j = 0; j < d_a.size(); ++j) {
      if (j < others.size()) g1 += d_a[j] * others[j];
      if (j >= 1 && j - 1 < others.size()) g2 += d_a[j] * others[j - 1];
    }
    grad[i] = {g1, g2};
  }
  return grad;
}

std::vector<BiquadSection> sections_from_unconstrained(std::span<const double> x) {
  if (x.empty() || x.size() % 2 != 0)
    throw ShapeError("unconstrained filter inputs must be non-empty (x1, x2) pairs");
  std::vector<BiquadSection> sections(x.size() / 2);
  for (std::size_t i = 0; i < sections.size(); ++i)
    sections[i] = biquad_from_unconstrained(x[2 * i], x[2 * i + 1]);
  return sections;
}

std::vector<double> direct_from_unconstrained(std::span<const double> x) {
  const auto sections = sections_from_unconstrained(x);
  return cascade_to_direct(sections);
}

std::vector<double> direct_from_unconstrained_vjp(std::span<const double> x,
                                                  std::span<const double> d_a) {
  const auto sections = sections_from_unconstrained(x);
  const auto d_eta = cascade_to_direct_vjp(sections, d_a);
  std::vector<double> d_x(x.size());
  for (std::size_t i = 0; i < sections.size(); ++i) {
    const auto [g1, g2] =
        biquad_from_unconstrained_vjp(x[2 * i], x[2 * i + 1], d_eta[i].eta1, d_eta[i].eta2);
    d_x[2 * i] = g1;
    d_x[2 * i + 1] = g2;
  }
  return d_x;
}

std::vector<double> hann_window(std::size_t length) {
  std::vector<double> w(length);
  for (std::size_t j = 0; j < length; ++j)
    w[j] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(j) /
                                static_cast<double>(length));
  return w;
}

double overlap_add_gain(std::span<const double> window, std::size_t hop) {
  double sum = 0.0;
  for (double x : window) sum += x;
  return sum / static_cast<double>(hop);
}

FramewiseResult framewise_lpc(std::span<const double> source, std::span<const double> gain,
                              const FrameCoeffs& frames, std::span<const double> window) {
  if (source.size() != gain.size()) throw ShapeError("framewise_lpc: source/gain length mismatch");
  check_frames(source.size(), frames, window, true);
  const std::size_t n_samples = source.size();
  const std::size_t hop = frames.hop;
  const std::size_t width = frames.window;

  FramewiseResult result;
  auto& tape = result.tape;
  tape.length = n_samples;
  tape.used_frames = (n_samples + hop - 1) / hop;
  tape.norm = overlap_add_gain(window, hop);
  tape.frame_outputs.assign(tape.used_frames * width, 0.0);

  parallel_for(tape.used_frames, [&](std::size_t k) {
    const std::size_t start = k * hop;
    const std::size_t seg = std::min(width, n_samples - start);
    std::vector<double> excitation(seg);
    for (std::size_t j = 0; j < seg; ++j) excitation[j] = source[start + j] * gain[start + j];
    lfilter_allpole(excitation, frames.frame(k),
                    std::span<double>(tape.frame_outputs.data() + k * width, seg));
  });

  result.output.assign(n_samples, 0.0);
  const double inv_norm = 1.0 / tape.norm;
  for (std::size_t k = 0; k < tape.used_frames; ++k) {
    const std::size_t start = k * hop;
    const std::size_t seg = std::min(width, n_samples - start);
    const double* y = tape.frame_outputs.data() + k * width;
    for (std::size_t j = 0; j < seg; ++j) result.output[start + j] += y[j] * window[j] * inv_norm;
  }
  return result;
}

FramewiseGrad framewise_lpc_vjp(std::span<const double> grad, std::span<const double> source,
                                std::span<const double> gain, const FrameCoeffs& frames,
                                std::span<const double> window, const FramewiseTape& tape,
                                bool want_coeffs) {
  const std::size_t n_samples = source.size();
  if (grad.size() != n_samples || gain.size() != n_samples || tape.length != n_samples)
    throw ShapeError("framewise_lpc_vjp: length mismatch");
  check_frames(n_samples, frames, window, true);
  const std::size_t hop = frames.hop;
  const std::size_t width = frames.window;
  const double inv_norm = 1.0 / tape.norm;

  std::vector<double> frame_d_input(tape.used_frames * width, 0.0);
  FramewiseGrad g;
  if (want_coeffs) g.d_coeffs.assign(frames.frames() * frames.order, 0.0);

  parallel_for(tape.used_frames, [&](std::size_t k) {
    const std::size_t start = k * hop;
    const std::size_t seg = std::min(width, n_samples - start);
    std::vector<double> gy(seg);
    for (std::size_t j = 0; j < seg; ++j) gy[j] = grad[start + j] * window[j] * inv_norm;
    const auto de = vjp_input(gy, frames.frame(k));
    std::copy(de.begin(), de.end(), frame_d_input.begin() + static_cast<std::ptrdiff_t>(k * width));
    if (want_coeffs) {
      const auto da = vjp_coeffs(gy, std::span(tape.frame_outputs.data() + k * width, seg),
                                 frames.frame(k));
      std::copy(da.begin(), da.end(),
                g.d_coeffs.begin() + static_cast<std::ptrdiff_t>(k * frames.order));
    }
  });

  std::vector<double> d_excitation(n_samples, 0.0);
  for (std::size_t k = 0; k < tape.used_frames; ++k) {
    const std::size_t start = k * hop;
    const std::size_t seg = std::min(width, n_samples - start);
    const double* de = frame_d_input.data() + k * width;
    for (std::size_t j = 0; j < seg; ++j) d_excitation[start + j] += de[j];
  }
  g.d_source.resize(n_samples);
  g.d_gain.resize(n_samples);
  for (std::size_t n = 0; n < n_samples; ++n) {
    g.d_source[n] = d_excitation[n] * gain[n];
    g.d_gain[n] = d_excitation[n] * source[n];
  }
  return g;
}

std::vector<double> samplewise_lpc(std::span<const double> source, std::span<const double> gain,
                                   const FrameCoeffs& frames) {
  if (source.size() != gain.size()) throw ShapeError("samplewise_lpc: source/gain length mismatch");
  check_frames(source.size(), frames, {}, false);
  const std::size_t n_samples = source.size();
  const std::size_t order = frames.order;
  const std::size_t n_frames = frames.frames();
  const double hop = static_cast<double>(frames.hop);
  const double first_centre = static_cast<double>(frames.window) / 2.0;
  const double last_centre = first_centre + hop * static_cast<double>(n_frames - 1);

  std::vector<double> s(n_samples, 0.0);
  std::vector<double> a(order);
  for (std::size_t n = 0; n < n_samples; ++n) {
    const double t = static_cast<double>(n);
    if (t <= first_centre) {
      std::copy_n(frames.frame(0).begin(), order, a.begin());
    } else if (t >= last_centre) {
      std::copy_n(frames.frame(n_frames - 1).begin(), order, a.begin());
    } else {
      const double pos = (t - first_centre) / hop;
      auto k = static_cast<std::size_t>(pos);
      if (k >= n_frames - 1) k = n_frames - 2;
      const double r = pos - static_cast<double>(k);
      const auto lo = frames.frame(k);
      const auto hi = frames.frame(k + 1);
      for (std::size_t i = 0; i < order; ++i) a[i] = (1.0 - r) * lo[i] + r * hi[i];
    }
    double acc = source[n] * gain[n];
    const std::size_t taps = std::min(order, n);
    for (std::size_t i = 1; i <= taps; ++i) acc -= a[i - 1] * s[n - i];
    if (!std::isfinite(acc))
      throw FilterOverflow(n, "samplewise_lpc: non-finite output at index " + std::to_string(n));
    s[n] = acc;
  }
  return s;
}

}  // namespace golf

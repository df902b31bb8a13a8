#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace golf {

/// Denominator section 1 + eta1 z^-1 + eta2 z^-2.
struct BiquadSection {
  double eta1 = 0.0;
  double eta2 = 0.0;
};

/// Stability-triangle test: |eta2| < 1 and |eta1| < 1 + eta2.
bool is_stable(const BiquadSection& s);

/// Saturation guard on the tanh outputs used by the stable mapping. Without it
/// tanh rounds to exactly +-1 for |x| > ~19 and the section lands on the
/// triangle boundary.
inline constexpr double kTanhLimit = 1.0 - 1e-6;

/// eta1 = 2 tanh(x1), eta2 = ((2 - |eta1|) tanh(x2) + |eta1|) / 2, with both
/// tanh values limited to +-kTanhLimit. Any finite input lands strictly inside
/// the stability triangle.
BiquadSection biquad_from_unconstrained(double x1, double x2);

/// (dL/dx1, dL/dx2) from (dL/deta1, dL/deta2).
std::pair<double, double> biquad_from_unconstrained_vjp(double x1, double x2, double d_eta1,
                                                        double d_eta2);

/// Direct-form a_1..a_M of the product of the sections (M = 2 * sections).
std::vector<double> cascade_to_direct(std::span<const BiquadSection> sections);

/// dL/d(eta) per section from dL/da.
std::vector<BiquadSection> cascade_to_direct_vjp(std::span<const BiquadSection> sections,
                                                 std::span<const double> d_a);

/// Unconstrained inputs laid out as (x1, x2) pairs, M values per filter.
std::vector<BiquadSection> sections_from_unconstrained(std::span<const double> x);
std::vector<double> direct_from_unconstrained(std::span<const double> x);
std::vector<double> direct_from_unconstrained_vjp(std::span<const double> x,
                                                  std::span<const double> d_a);

/// Per-frame direct-form coefficients for one time-varying all-pole path.
/// Frame k starts at sample k * hop and spans `window` samples.
struct FrameCoeffs {
  std::size_t order = 0;
  std::size_t hop = 120;
  std::size_t window = 480;
  std::vector<double> coeffs;  // frames * order, row-major

  std::size_t frames() const { return order == 0 ? 0 : coeffs.size() / order; }
  std::span<const double> frame(std::size_t k) const {
    return {coeffs.data() + k * order, order};
  }
};

/// Periodic Hann window, w[j] = 0.5 - 0.5 cos(2 pi j / length).
std::vector<double> hann_window(std::size_t length);

/// Mean overlap-add sum of `window` at the given hop (sum(w) / hop); equals
/// the steady-state constant for COLA windows.
double overlap_add_gain(std::span<const double> window, std::size_t hop);

/// Saved forward state of framewise_lpc.
struct FramewiseTape {
  std::size_t length = 0;
  std::size_t used_frames = 0;
  double norm = 1.0;
  std::vector<double> frame_outputs;  // used_frames * window, zero past segment end
};

struct FramewiseResult {
  std::vector<double> output;
  FramewiseTape tape;
};

/// Frame-wise LPC with overlap-add: every frame filters its square-windowed
/// slice of source * gain from zero state, the results are weighted by the
/// synthesis window and summed, then divided by overlap_add_gain. Frames are
/// processed in parallel. Throws ShapeError if frames * hop < source length.
FramewiseResult framewise_lpc(std::span<const double> source, std::span<const double> gain,
                              const FrameCoeffs& frames, std::span<const double> window);

struct FramewiseGrad {
  std::vector<double> d_source;
  std::vector<double> d_gain;
  std::vector<double> d_coeffs;  // frames * order; empty unless requested
};

FramewiseGrad framewise_lpc_vjp(std::span<const double> grad, std::span<const double> source,
                                std::span<const double> gain, const FrameCoeffs& frames,
                                std::span<const double> window, const FramewiseTape& tape,
                                bool want_coeffs = true);

/// Reference time-varying LPC: direct-form coefficients are linearly
/// interpolated between frame centres (k * hop + window / 2) and a single
/// recursion runs over the whole signal. Evaluation only; no adjoint.
std::vector<double> samplewise_lpc(std::span<const double> source, std::span<const double> gain,
                                   const FrameCoeffs& frames);

}  // namespace golf

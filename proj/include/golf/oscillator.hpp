#pragma once

#include <span>
#include <vector>

#include "golf/glottal.hpp"

namespace golf {

/// Unvoiced gating: f_hat[n] = v[n] * f[n].
std::vector<double> gate_frequency(std::span<const double> f, std::span<const double> v);

struct GateGrad {
  std::vector<double> d_f;
  std::vector<double> d_v;
};
GateGrad gate_frequency_vjp(std::span<const double> grad, std::span<const double> f,
                            std::span<const double> v);

/// phi[n] = sum_{i<=n} f_hat[i] + offset[n]. The offset may be empty (zero).
/// Accumulation is unwrapped and in double precision; reduction mod 1
/// happens only inside the lookup.
std::vector<double> accumulate_phase(std::span<const double> f_hat,
                                     std::span<const double> offset = {});

struct PhaseGrad {
  std::vector<double> d_f_hat;   // reverse cumulative sum of d_phi
  std::vector<double> d_offset;  // d_phi itself
};
PhaseGrad accumulate_phase_vjp(std::span<const double> d_phi);

/// Bilinear lookup into the table, wrapping the phase axis by treating
/// column 0 as column L. tau in [0, 1] selects a fractional row index
/// tau * (K - 1); only the two neighbouring rows contribute.
std::vector<double> wavetable_lookup(std::span<const double> phi, std::span<const double> tau,
                                     const Wavetables& tables);

struct LookupGrad {
  std::vector<double> d_phi;
  std::vector<double> d_tau;
};

/// At exact cell boundaries the left cell's slope is used.
LookupGrad wavetable_lookup_vjp(std::span<const double> grad, std::span<const double> phi,
                                std::span<const double> tau, const Wavetables& tables);

/// Number of harmonics m >= 1 with m * f_hat < 0.5 (0 when f_hat == 0).
std::size_t harmonic_count(double f_hat);

/// Band-limited pulse train by additive synthesis: the mean of
/// cos(2 pi m phi[n]) over all harmonics below Nyquist at f_hat[n].
/// Zero wherever f_hat[n] == 0.
std::vector<double> pulse_train(std::span<const double> phi, std::span<const double> f_hat);

/// Convenience overload accumulating the phase from f_hat.
std::vector<double> pulse_train(std::span<const double> f_hat);

/// Gradient with respect to phi; harmonic counts are held fixed.
std::vector<double> pulse_train_vjp(std::span<const double> grad, std::span<const double> phi,
                                    std::span<const double> f_hat);

}  // namespace golf

#include "golf/oscillator.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "golf/error.hpp"

namespace golf {
namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw ShapeError(std::string(what) + ": length mismatch");
}

// Interpolation cell for one (phi, tau) pair. At exact boundaries the left
// cell is chosen (weight 1 on its right edge), which leaves the value
// unchanged and fixes the one-sided derivative.
struct Cell {
  std::size_t k0, k1, l0, l1;
  double p, q;
};

Cell locate(double phi, double tau, std::size_t rows, std::size_t cols) {
  Cell c{};
  const double frac = phi - std::floor(phi);
  double l = frac * static_cast<double>(cols);
  auto l0 = static_cast<std::size_t>(l);
  if (l0 >= cols) {
    l0 = cols - 1;
    l = static_cast<double>(cols);
  }
  c.q = l - static_cast<double>(l0);
  if (c.q == 0.0) {
    l0 = (l0 + cols - 1) % cols;
    c.q = 1.0;
  }
  c.l0 = l0;
  c.l1 = (l0 + 1) % cols;

  if (rows == 1) {
    c.k0 = c.k1 = 0;
    c.p = 0.0;
    return c;
  }
  const double k = tau * static_cast<double>(rows - 1);
  auto k0 = static_cast<std::size_t>(k);
  if (k0 >= rows - 1) k0 = rows - 2;
  c.p = k - static_cast<double>(k0);
  if (c.p == 0.0 && k0 > 0) {
    --k0;
    c.p = 1.0;
  }
  c.k0 = k0;
  c.k1 = k0 + 1;
  return c;
}

}  // namespace

std::vector<double> gate_frequency(std::span<const double> f, std::span<const double> v) {
  require_same_length(f.size(), v.size(), "gate_frequency");
  std::vector<double> out(f.size());
  for (std::size_t n = 0; n < f.size(); ++n) out[n] = v[n] * f[n];
  return out;
}

GateGrad gate_frequency_vjp(std::span<const double> grad, std::span<const double> f,
                            std::span<const double> v) {
  require_same_length(f.size(), v.size(), "gate_frequency_vjp");
  require_same_length(grad.size(), f.size(), "gate_frequency_vjp");
  GateGrad g{std::vector<double>(f.size()), std::vector<double>(f.size())};
  for (std::size_t n = 0; n < f.size(); ++n) {
    g.d_f[n] = grad[n] * v[n];
    g.d_v[n] = grad[n] * f[n];
  }
  return g;
}

std::vector<double> accumulate_phase(std::span<const double> f_hat,
                                     std::span<const double> offset) {
  if (!offset.empty()) require_same_length(f_hat.size(), offset.size(), "accumulate_phase");
  std::vector<double> phi(f_hat.size());
  double acc = 0.0;
  for (std::size_t n = 0; n < f_hat.size(); ++n) {
    acc += f_hat[n];
    phi[n] = offset.empty() ? acc : acc + offset[n];
  }
  return phi;
}

PhaseGrad accumulate_phase_vjp(std::span<const double> d_phi) {
  PhaseGrad g;
  g.d_offset.assign(d_phi.begin(), d_phi.end());
  g.d_f_hat.resize(d_phi.size());
  double acc = 0.0;
  for (std::size_t n = d_phi.size(); n-- > 0;) {
    acc += d_phi[n];
    g.d_f_hat[n] = acc;
  }
  return g;
}

std::vector<double> wavetable_lookup(std::span<const double> phi, std::span<const double> tau,
                                     const Wavetables& tables) {
  if (tables.empty()) throw std::invalid_argument("wavetable_lookup: empty tables");
  require_same_length(phi.size(), tau.size(), "wavetable_lookup");
  std::vector<double> out(phi.size());
  for (std::size_t n = 0; n < phi.size(); ++n) {
    const Cell c = locate(phi[n], tau[n], tables.rows, tables.cols);
    const double lo = (1.0 - c.q) * tables.at(c.k0, c.l0) + c.q * tables.at(c.k0, c.l1);
    const double hi = (1.0 - c.q) * tables.at(c.k1, c.l0) + c.q * tables.at(c.k1, c.l1);
    out[n] = (1.0 - c.p) * lo + c.p * hi;
  }
  return out;
}

LookupGrad wavetable_lookup_vjp(std::span<const double> grad, std::span<const double> phi,
                                std::span<const double> tau, const Wavetables& tables) {
  if (tables.empty()) throw std::invalid_argument("wavetable_lookup_vjp: empty tables");
  require_same_length(phi.size(), tau.size(), "wavetable_lookup_vjp");
  require_same_length(grad.size(), phi.size(), "wavetable_lookup_vjp");
  const auto cols = static_cast<double>(tables.cols);
  const auto row_scale = static_cast<double>(tables.rows - 1);
  LookupGrad g{std::vector<double>(phi.size()), std::vector<double>(phi.size())};
  for (std::size_t n = 0; n < phi.size(); ++n) {
    const Cell c = locate(phi[n], tau[n], tables.rows, tables.cols);
    const double d00 = tables.at(c.k0, c.l0), d01 = tables.at(c.k0, c.l1);
    const double d10 = tables.at(c.k1, c.l0), d11 = tables.at(c.k1, c.l1);
    const double dl = (1.0 - c.p) * (d01 - d00) + c.p * (d11 - d10);
    const double dk = ((1.0 - c.q) * d10 + c.q * d11) - ((1.0 - c.q) * d00 + c.q * d01);
    g.d_phi[n] = grad[n] * dl * cols;
    g.d_tau[n] = grad[n] * dk * row_scale;
  }
  return g;
}

std::size_t harmonic_count(double f_hat) {
  if (!(f_hat > 0.0)) return 0;
  std::size_t m = 0;
  while (static_cast<double>(m + 1) * f_hat < 0.5) ++m;
  return m;
}

std::vector<double> pulse_train(std::span<const double> phi, std::span<const double> f_hat) {
  require_same_length(phi.size(), f_hat.size(), "pulse_train");
  std::vector<double> out(phi.size(), 0.0);
  for (std::size_t n = 0; n < phi.size(); ++n) {
    const std::size_t count = harmonic_count(f_hat[n]);
    if (count == 0) continue;
    const double theta = 2.0 * std::numbers::pi * (phi[n] - std::floor(phi[n]));
    // cos(m theta) by the Chebyshev recurrence.
    const double c1 = std::cos(theta);
    double prev = 1.0, cur = c1, sum = c1;
    for (std::size_t m = 2; m <= count; ++m) {
      const double next = 2.0 * c1 * cur - prev;
      prev = cur;
      cur = next;
      sum += cur;
    }
    out[n] = sum / static_cast<double>(count);
  }
  return out;
}

std::vector<double> pulse_train(std::span<const double> f_hat) {
  const auto phi = accumulate_phase(f_hat);
  return pulse_train(phi, f_hat);
}

std::vector<double> pulse_train_vjp(std::span<const double> grad, std::span<const double> phi,
                                    std::span<const double> f_hat) {
  require_same_length(phi.size(), f_hat.size(), "pulse_train_vjp");
  require_same_length(grad.size(), phi.size(), "pulse_train_vjp");
  std::vector<double> d_phi(phi.size(), 0.0);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t n = 0; n < phi.size(); ++n) {
    const std::size_t count = harmonic_count(f_hat[n]);
    if (count == 0 || grad[n] == 0.0) continue;
    const double theta = two_pi * (phi[n] - std::floor(phi[n]));
    const std::complex<double> rot = std::polar(1.0, theta);
    std::complex<double> z = rot;
    double acc = 0.0;
    for (std::size_t m = 1; m <= count; ++m) {
      acc += static_cast<double>(m) * z.imag();
      z *= rot;
    }
    d_phi[n] = -grad[n] * two_pi * acc / static_cast<double>(count);
  }
  return d_phi;
}

}  // namespace golf

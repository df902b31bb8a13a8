#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "golf/filters.hpp"

namespace golf::test {

inline double rel_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

inline double rel_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double lo = -1.0,
                                         double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

inline std::vector<double> normal_vector(std::mt19937_64& rng, std::size_t n, double sigma = 1.0) {
  std::normal_distribution<double> d(0.0, sigma);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

/// Direct-form coefficients of a random stable all-pole filter of the given
/// order, built from explicit poles with radius below max_radius (conjugate
/// pairs plus one real pole for odd orders).
inline std::vector<double> random_stable_filter(std::mt19937_64& rng, std::size_t order,
                                                double max_radius = 0.9) {
  std::uniform_real_distribution<double> radius(0.0, max_radius);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::uniform_real_distribution<double> real_pole(-max_radius, max_radius);
  std::vector<double> poly{1.0};
  auto multiply = [&](double c1, double c2, bool quadratic) {
    const std::size_t add = quadratic ? 2 : 1;
    poly.resize(poly.size() + add, 0.0);
    for (std::size_t m = poly.size(); m-- > 1;) {
      poly[m] += c1 * poly[m - 1];
      if (quadratic && m >= 2) poly[m] += c2 * poly[m - 2];
    }
  };
  for (std::size_t i = 0; i + 1 < order; i += 2) {
    const double r = radius(rng), th = angle(rng);
    multiply(-2.0 * r * std::cos(th), r * r, true);
  }
  if (order % 2 == 1) multiply(-real_pole(rng), 0.0, false);
  return {poly.begin() + 1, poly.end()};
}

/// Central difference of a scalar function along direction d.
inline double directional_fd(const std::function<double(std::span<const double>)>& f,
                             std::span<const double> x, std::span<const double> d, double h) {
  std::vector<double> plus(x.begin(), x.end()), minus(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    plus[i] += h * d[i];
    minus[i] -= h * d[i];
  }
  return (f(plus) - f(minus)) / (2.0 * h);
}

/// Composite Simpson rule on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, std::size_t n) {
  if (n % 2 == 1) ++n;
  const double h = (b - a) / static_cast<double>(n);
  double s = f(a) + f(b);
  for (std::size_t i = 1; i < n; ++i) s += f(a + h * static_cast<double>(i)) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// Naive O(N^2) DFT magnitude spectrum, bins 0..N/2.
inline std::vector<double> dft_magnitude(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> mag(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t)
      acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * t % n) /
                                        static_cast<double>(n));
    mag[k] = std::abs(acc);
  }
  return mag;
}

}  // namespace golf::test

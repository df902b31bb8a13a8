#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace golf {

/// All-pole recursion s[n] = e[n] - sum_{i=1..M} a[i-1] * s[n-i] with zero
/// initial state. Throws FilterOverflow naming the first non-finite sample.
std::vector<double> lfilter_allpole(std::span<const double> e, std::span<const double> a);

/// Same recursion writing into a caller-provided buffer of e.size().
void lfilter_allpole(std::span<const double> e, std::span<const double> a, std::span<double> s);

/// Single-precision I/O; the recursion state is kept in double.
std::vector<float> lfilter_allpole(std::span<const float> e, std::span<const float> a);

/// dL/de: the same filter run over the time-reversed gradient.
std::vector<double> vjp_input(std::span<const double> grad, std::span<const double> a);

/// dL/da given the forward output s. One filtering pass gives the
/// sensitivity to a[0]; the others are shifted copies of it.
std::vector<double> vjp_coeffs(std::span<const double> grad, std::span<const double> s,
                               std::span<const double> a);

/// B equal-length sequences with one coefficient vector each, stored
/// row-major.
struct FilterBatch {
  std::size_t count = 0;   // B
  std::size_t length = 0;  // N
  std::size_t order = 0;   // M
  std::vector<double> inputs;  // B * N
  std::vector<double> coeffs;  // B * M

  std::span<const double> input(std::size_t b) const {
    return {inputs.data() + b * length, length};
  }
  std::span<const double> coeff(std::size_t b) const {
    return {coeffs.data() + b * order, order};
  }
};

/// Forward outputs, kept for the coefficient adjoint.
struct BatchOutput {
  std::size_t count = 0;
  std::size_t length = 0;
  std::vector<double> outputs;  // B * N

  std::span<const double> output(std::size_t b) const {
    return {outputs.data() + b * length, length};
  }
};

struct BatchGrad {
  std::vector<double> d_inputs;  // B * N
  std::vector<double> d_coeffs;  // B * M
};

/// Filters every sequence, one worker per sequence at most. Each result is
/// bit-identical to lfilter_allpole on that sequence alone.
BatchOutput filter_batch(const FilterBatch& batch);

/// grads is B * N, laid out like the outputs.
BatchGrad filter_batch_vjp(const FilterBatch& batch, const BatchOutput& forward,
                           std::span<const double> grads);

}  // namespace golf

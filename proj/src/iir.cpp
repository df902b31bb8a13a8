#include "golf/iir.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "golf/error.hpp"
#include "golf/parallel.hpp"

namespace golf {
namespace {

template <typename In, typename Out>
void run_allpole(std::span<const In> e, std::span<const double> a, std::span<Out> s,
                 std::vector<double>& state) {
  const std::size_t n_samples = e.size();
  const std::size_t order = a.size();
  state.assign(n_samples, 0.0);
  for (std::size_t n = 0; n < n_samples; ++n) {
    double acc = static_cast<double>(e[n]);
    const std::size_t taps = std::min(order, n);
    const double* past = state.data() + n;
    for (std::size_t i = 1; i <= taps; ++i) acc -= a[i - 1] * past[-static_cast<std::ptrdiff_t>(i)];
    state[n] = acc;
  }
  for (std::size_t n = 0; n < n_samples; ++n) {
    if (!std::isfinite(state[n]))
      throw FilterOverflow(n, "lfilter_allpole: non-finite output at index " + std::to_string(n));
    s[n] = static_cast<Out>(state[n]);
  }
}

}  // namespace

void lfilter_allpole(std::span<const double> e, std::span<const double> a, std::span<double> s) {
  if (s.size() != e.size()) throw ShapeError("lfilter_allpole: output length mismatch");
  const std::size_t n_samples = e.size();
  const std::size_t order = a.size();
  for (std::size_t n = 0; n < n_samples; ++n) {
    double acc = e[n];
    const std::size_t taps = std::min(order, n);
    for (std::size_t i = 1; i <= taps; ++i) acc -= a[i - 1] * s[n - i];
    s[n] = acc;
  }
  for (std::size_t n = 0; n < n_samples; ++n) {
    if (!std::isfinite(s[n]))
      throw FilterOverflow(n, "lfilter_allpole: non-finite output at index " + std::to_string(n));
  }
}

std::vector<double> lfilter_allpole(std::span<const double> e, std::span<const double> a) {
  std::vector<double> s(e.size());
  lfilter_allpole(e, a, s);
  return s;
}

std::vector<float> lfilter_allpole(std::span<const float> e, std::span<const float> a) {
  std::vector<double> coeffs(a.begin(), a.end());
  std::vector<float> s(e.size());
  std::vector<double> state;
  run_allpole<float, float>(e, coeffs, s, state);
  return s;
}

std::vector<double> vjp_input(std::span<const double> grad, std::span<const double> a) {
  std::vector<double> reversed(grad.rbegin(), grad.rend());
  std::vector<double> out(grad.size());
  lfilter_allpole(reversed, a, out);
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<double> vjp_coeffs(std::span<const double> grad, std::span<const double> s,
                               std::span<const double> a) {
  if (grad.size() != s.size()) throw ShapeError("vjp_coeffs: gradient/output length mismatch");
  const std::size_t n_samples = s.size();
  const std::size_t order = a.size();
  std::vector<double> result(order, 0.0);
  if (n_samples == 0 || order == 0) return result;

  // d[n] = ds[n]/da_1 = LPC(-s[n-1]); ds[n]/da_i = d[n-(i-1)].
  std::vector<double> shifted(n_samples, 0.0);
  for (std::size_t n = 1; n < n_samples; ++n) shifted[n] = -s[n - 1];
  const std::vector<double> d = lfilter_allpole(shifted, a);

  for (std::size_t i = 0; i < order && i < n_samples; ++i) {
    double acc = 0.0;
    for (std::size_t n = i; n < n_samples; ++n) acc += grad[n] * d[n - i];
    result[i] = acc;
  }
  return result;
}

namespace {
void check_batch(const FilterBatch& batch) {
  if (batch.inputs.size() != batch.count * batch.length)
    throw ShapeError("filter_batch: inputs size != count * length");
  if (batch.coeffs.size() != batch.count * batch.order)
    throw ShapeError("filter_batch: coeffs size != count * order");
}
}  // namespace

BatchOutput filter_batch(const FilterBatch& batch) {
  check_batch(batch);
  BatchOutput out;
  out.count = batch.count;
  out.length = batch.length;
  out.outputs.assign(batch.count * batch.length, 0.0);
  parallel_for(batch.count, [&](std::size_t b) {
    lfilter_allpole(batch.input(b), batch.coeff(b),
                    std::span<double>(out.outputs.data() + b * batch.length, batch.length));
  });
  return out;
}

BatchGrad filter_batch_vjp(const FilterBatch& batch, const BatchOutput& forward,
                           std::span<const double> grads) {
  check_batch(batch);
  if (forward.outputs.size() != batch.inputs.size() || grads.size() != batch.inputs.size())
    throw ShapeError("filter_batch_vjp: gradient shape mismatch");
  BatchGrad g;
  g.d_inputs.assign(batch.inputs.size(), 0.0);
  g.d_coeffs.assign(batch.coeffs.size(), 0.0);
  parallel_for(batch.count, [&](std::size_t b) {
    const auto grad = grads.subspan(b * batch.length, batch.length);
    const auto din = vjp_input(grad, batch.coeff(b));
    std::copy(din.begin(), din.end(), g.d_inputs.begin() + static_cast<std::ptrdiff_t>(b * batch.length));
    const auto dco = vjp_coeffs(grad, forward.output(b), batch.coeff(b));
    std::copy(dco.begin(), dco.end(), g.d_coeffs.begin() + static_cast<std::ptrdiff_t>(b * batch.order));
  });
  return g;
}

}  // namespace golf

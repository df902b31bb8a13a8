#include "golf/stft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

#include "golf/error.hpp"

namespace golf {
namespace {

struct Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

// FFTW planning is not thread-safe; executing a finished plan on new arrays
// is, so plans are created once per size under a lock and never destroyed.
Plans plans_for(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, Plans> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> real(n);
  std::vector<fftw_complex> spec(n / 2 + 1);
  const int size = static_cast<int>(n);
  Plans p;
  p.r2c = fftw_plan_dft_r2c_1d(size, real.data(), spec.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  p.c2r = fftw_plan_dft_c2r_1d(size, spec.data(), real.data(),
                               FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_DESTROY_INPUT);
  if (p.r2c == nullptr || p.c2r == nullptr) throw Error("FFTW planning failed");
  cache.emplace(n, p);
  return p;
}

}  // namespace

RealFft::RealFft(std::size_t size) : size_(size) {
  if (size < 2 || size % 2 != 0) throw std::invalid_argument("RealFft: size must be even and >= 2");
  const Plans p = plans_for(size);
  r2c_ = p.r2c;
  c2r_ = p.c2r;
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) const {
  if (in.size() != size_ || out.size() != bins()) throw ShapeError("RealFft::forward: bad sizes");
  std::vector<double> buffer(in.begin(), in.end());
  fftw_execute_dft_r2c(static_cast<fftw_plan>(r2c_), buffer.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFft::adjoint(std::span<const std::complex<double>> grad, std::span<double> out) const {
  if (grad.size() != bins() || out.size() != size_) throw ShapeError("RealFft::adjoint: bad sizes");
  // c2r evaluates G0 + 2 Re sum_{0<k<N/2} G_k e^{+i..} + G_{N/2}(-1)^n, so
  // the interior bins are halved to get Re sum_k G_k e^{+i..}.
  std::vector<std::complex<double>> buffer(grad.begin(), grad.end());
  for (std::size_t k = 1; k + 1 < buffer.size(); ++k) buffer[k] *= 0.5;
  fftw_execute_dft_c2r(static_cast<fftw_plan>(c2r_), reinterpret_cast<fftw_complex*>(buffer.data()),
                       out.data());
}

StftLayout stft_layout(std::size_t signal_length, std::size_t fft_size) {
  StftLayout l;
  l.fft_size = fft_size;
  l.hop = fft_size / 4;
  if (signal_length <= fft_size)
    l.frames = 1;
  else
    l.frames = 1 + (signal_length - fft_size + l.hop - 1) / l.hop;
  return l;
}

}  // namespace golf

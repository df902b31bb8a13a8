#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace golf {

/// Real-input DFT of a fixed size with its exact adjoint. Plans are shared
/// between instances and safe to use from several threads.
class RealFft {
 public:
  explicit RealFft(std::size_t size);

  std::size_t size() const { return size_; }
  std::size_t bins() const { return size_ / 2 + 1; }

  /// X[k] = sum_n x[n] exp(-2 pi i k n / N) for k = 0 .. N/2.
  void forward(std::span<const double> in, std::span<std::complex<double>> out) const;

  /// Given G[k] = dL/dRe X[k] + i dL/dIm X[k], writes dL/dx[n].
  void adjoint(std::span<const std::complex<double>> grad, std::span<double> out) const;

 private:
  std::size_t size_;
  void* r2c_;
  void* c2r_;
};

/// Magnitude STFT with a periodic Hann window and hop = size / 4. Frames
/// start at 0; the last frame is zero-padded past the end of the signal.
struct StftLayout {
  std::size_t fft_size = 0;
  std::size_t hop = 0;
  std::size_t frames = 0;
};
StftLayout stft_layout(std::size_t signal_length, std::size_t fft_size);

}  // namespace golf

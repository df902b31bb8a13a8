// wav_check MIX PART... TOL: exits 0 when the parts sum to MIX within TOL.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "golf/wav.hpp"

int main(int argc, char** argv) {
  if (argc < 4) {
    std::fprintf(stderr, "usage: wav_check MIX PART... TOL\n");
    return 2;
  }
  const double tol = std::atof(argv[argc - 1]);
  const auto mix = golf::read_wav(argv[1]).samples;
  std::vector<double> sum(mix.size(), 0.0);
  for (int i = 2; i < argc - 1; ++i) {
    const auto part = golf::read_wav(argv[i]).samples;
    if (part.size() != mix.size()) {
      std::fprintf(stderr, "length mismatch: %s\n", argv[i]);
      return 1;
    }
    for (std::size_t n = 0; n < mix.size(); ++n) sum[n] += part[n];
  }
  double worst = 0.0;
  for (std::size_t n = 0; n < mix.size(); ++n) worst = std::max(worst, std::abs(sum[n] - mix[n]));
  std::printf("max |sum - mix| = %.3e over %zu samples\n", worst, mix.size());
  return worst <= tol ? 0 : 1;
}

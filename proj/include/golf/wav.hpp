#pragma once

#include <filesystem>
#include <vector>

namespace golf {

struct Audio {
  double sample_rate = 24000.0;
  std::vector<double> samples;
};

/// Mono RIFF/WAVE reader accepting 16-bit PCM and 32-bit IEEE float
/// (plain or WAVE_FORMAT_EXTENSIBLE).
Audio read_wav(const std::filesystem::path& path);

/// Mono 32-bit float WAV.
void write_wav(const std::filesystem::path& path, const Audio& audio);

}  // namespace golf

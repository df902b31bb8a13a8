#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "golf/synth.hpp"

namespace golf {

inline constexpr int kParamsSchemaVersion = 1;

/// JSON parameter document: header fields schema_version, sample_rate, hop,
/// window, lpc_order, tau_stride, table_ref, then the arrays f, v, gamma,
/// beta, tau, and harmonic_filter / noise_filter as one array per frame.
std::string params_to_json(const SynthParams& params);
/// Parses and validates; bounded tracks are clamped on ingestion.
SynthParams params_from_json(const std::string& text);

void save_params(const SynthParams& params, const std::filesystem::path& path);
SynthParams load_params(const std::filesystem::path& path);

/// Phase-offset track: {"schema_version", "rate", "offsets": [...]}.
struct OffsetTrack {
  double rate = 20.0;
  std::vector<double> offsets;
};
void save_offsets(const OffsetTrack& track, const std::filesystem::path& path);
OffsetTrack load_offsets(const std::filesystem::path& path);

/// CSV with header "step,loss".
void save_loss_trace(const std::vector<double>& trace, const std::filesystem::path& path);

}  // namespace golf

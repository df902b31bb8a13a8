#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace golf {

inline constexpr double kRdMin = 0.3;
inline constexpr double kRdMax = 2.7;

/// LF glottal-flow-derivative parameters on a normalized period [0, 1).
struct LFParams {
  double rd = 1.0;
  double te = 0.0;  // instant of main excitation (negative peak)
  double tp = 0.0;  // instant of maximum flow
  double ta = 0.0;  // effective duration of the return phase
  double alpha = 0.0;
  double epsilon = 0.0;
  double ee = 1.0;
};

/// Maps the transformed-LF shape parameter onto LF timing and the two
/// implicit rates. rd outside [kRdMin, kRdMax] is clamped with a warning.
/// Throws SolverError if either implicit equation fails to converge.
LFParams rd_to_lf_params(double rd);

/// g'(t) for one normalized period. Throws std::domain_error for t outside
/// [0, 1); callers are expected to wrap phase first.
double lf_flow_derivative(double t, const LFParams& p);

/// Closed-form integral of g' over one period (zero for valid parameters).
double lf_net_flow(const LFParams& p);

/// K x L matrix of single-period glottal pulses, one row per Rd value.
struct Wavetables {
  std::size_t rows = 0;  // K
  std::size_t cols = 0;  // L
  std::size_t align_index = 0;
  std::vector<double> rd_values;  // ascending, length K
  std::vector<double> data;       // row-major, K * L

  std::span<const double> row(std::size_t k) const {
    return {data.data() + k * cols, cols};
  }
  double at(std::size_t k, std::size_t l) const { return data[k * cols + l]; }
  bool empty() const { return rows == 0 || cols == 0; }
};

/// Default column for the shared negative peak: ceil(0.65 * L).
std::size_t default_align_index(std::size_t l_count);

/// Builds a table of k_count log-spaced Rd values over [rd_min, rd_max].
/// Each row samples g' at t = j / L, has its sampling residual DC removed,
/// is scaled to unit L2 norm and circularly rotated so its minimum lands on
/// align_index (default_align_index(l_count) when not given).
Wavetables build_wavetables(std::size_t k_count = 100, std::size_t l_count = 2048,
                            double rd_min = kRdMin, double rd_max = kRdMax,
                            std::optional<std::size_t> align_index = std::nullopt);

/// Binary container: "GOLF", u32 version, u32 K, u32 L, u32 align_index,
/// K float64 rd values, K*L float64 samples, all little-endian.
void save_wavetables(const Wavetables& tables, const std::filesystem::path& path);
Wavetables load_wavetables(const std::filesystem::path& path);

/// One line per row: rd followed by the L samples.
void export_wavetables_csv(const Wavetables& tables, const std::filesystem::path& path);

}  // namespace golf

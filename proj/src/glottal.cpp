#include "golf/glottal.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "golf/error.hpp"
#include "golf/parallel.hpp"

namespace golf {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::uint32_t kTableVersion = 1;

// Return-phase decay: epsilon * ta = 1 - exp(-epsilon * (1 - te)).
// Convex in epsilon with f(1/ta) > 0, so Newton from 1/ta decreases
// monotonically onto the positive root.
double solve_epsilon(double te, double ta, double rd) {
  const double tc = 1.0 - te;
  double eps = 1.0 / ta;
  for (int it = 0; it < 64; ++it) {
    const double ex = std::exp(-eps * tc);
    const double f = eps * ta - 1.0 + ex;
    const double df = ta - tc * ex;
    const double step = f / df;
    eps -= step;
    if (std::abs(step) <= 1e-12 * std::abs(eps)) return eps;
  }
  std::ostringstream msg;
  msg << "epsilon solve did not converge for rd=" << rd;
  throw SolverError(msg.str());
}

double return_phase_integral(double te, double ta, double eps, double ee) {
  const double tc = 1.0 - te;
  const double ex = std::exp(-eps * tc);
  return -ee / (eps * ta) * ((1.0 - ex) / eps - tc * ex);
}

double open_phase_integral(double alpha, double te, double tp, double ee) {
  const double w = kPi / tp;
  const double swe = std::sin(w * te);
  const double cwe = std::cos(w * te);
  return -ee / swe * (alpha * swe - w * cwe + w * std::exp(-alpha * te)) /
         (alpha * alpha + w * w);
}

// Zero net flow over the period. The residual decreases with alpha, so the
// root is bracketed by geometric expansion and refined by Newton steps that
// fall back to bisection whenever they leave the bracket.
double solve_alpha(double te, double tp, double ta, double eps, double ee, double rd) {
  const double ret = return_phase_integral(te, ta, eps, ee);
  auto residual = [&](double a) { return open_phase_integral(a, te, tp, ee) + ret; };

  double lo = -1.0, hi = 1.0;
  double flo = residual(lo), fhi = residual(hi);
  for (int it = 0; it < 200 && flo * fhi > 0.0; ++it) {
    if (std::abs(flo) < std::abs(fhi)) {
      lo -= 2.0 * (hi - lo);
      flo = residual(lo);
    } else {
      hi += 2.0 * (hi - lo);
      fhi = residual(hi);
    }
  }
  if (flo * fhi > 0.0 || !std::isfinite(flo) || !std::isfinite(fhi)) {
    std::ostringstream msg;
    msg << "alpha bracket not found for rd=" << rd;
    throw SolverError(msg.str());
  }

  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double fx = residual(x);
    if (fx == 0.0) return x;
    if ((fx > 0.0) == (flo > 0.0)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
    }
    const double h = 1e-7 * std::max(1.0, std::abs(x));
    const double dfx = (residual(x + h) - residual(x - h)) / (2.0 * h);
    double next = x - fx / dfx;
    if (!(next > std::min(lo, hi) && next < std::max(lo, hi))) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-14 * std::max(1.0, std::abs(x))) return next;
    x = next;
  }
  std::ostringstream msg;
  msg << "alpha solve did not converge for rd=" << rd;
  throw SolverError(msg.str());
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(b, 4);
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  out.write(b, 8);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw Error("wavetable file truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw Error("wavetable file truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

}  // namespace

LFParams rd_to_lf_params(double rd) {
  if (!std::isfinite(rd)) throw std::invalid_argument("rd must be finite");
  if (rd < kRdMin || rd > kRdMax) {
    std::ostringstream msg;
    msg << "rd=" << rd << " outside [" << kRdMin << ", " << kRdMax << "], clamped";
    warn(msg.str());
    rd = std::clamp(rd, kRdMin, kRdMax);
  }

  const double ra = (-1.0 + 4.8 * rd) / 100.0;
  const double rk = (22.4 + 11.8 * rd) / 100.0;
  const double rg = rk / (4.0 * (0.11 * rd / (0.5 + 1.2 * rk) - ra));

  LFParams p;
  p.rd = rd;
  p.tp = 1.0 / (2.0 * rg);
  p.te = p.tp * (1.0 + rk);
  p.ta = ra;
  p.ee = 1.0;
  p.epsilon = solve_epsilon(p.te, p.ta, rd);
  p.alpha = solve_alpha(p.te, p.tp, p.ta, p.epsilon, p.ee, rd);
  return p;
}

double lf_flow_derivative(double t, const LFParams& p) {
  if (!(t >= 0.0 && t < 1.0)) throw std::domain_error("lf_flow_derivative: t outside [0, 1)");
  if (t <= p.te) {
    const double w = kPi / p.tp;
    return -p.ee * std::exp(p.alpha * (t - p.te)) * std::sin(w * t) / std::sin(w * p.te);
  }
  return -p.ee / (p.epsilon * p.ta) *
         (std::exp(-p.epsilon * (t - p.te)) - std::exp(-p.epsilon * (1.0 - p.te)));
}

double lf_net_flow(const LFParams& p) {
  return open_phase_integral(p.alpha, p.te, p.tp, p.ee) +
         return_phase_integral(p.te, p.ta, p.epsilon, p.ee);
}

std::size_t default_align_index(std::size_t l_count) {
  return static_cast<std::size_t>(std::ceil(0.65 * static_cast<double>(l_count))) % l_count;
}

Wavetables build_wavetables(std::size_t k_count, std::size_t l_count, double rd_min,
                            double rd_max, std::optional<std::size_t> align_index) {
  if (k_count < 2) throw std::invalid_argument("build_wavetables: k_count must be >= 2");
  if (l_count < 16) throw std::invalid_argument("build_wavetables: l_count must be >= 16");
  if (!(rd_min > 0.0 && rd_min < rd_max))
    throw std::invalid_argument("build_wavetables: require 0 < rd_min < rd_max");
  const std::size_t align = align_index.value_or(default_align_index(l_count));
  if (align >= l_count) throw std::invalid_argument("build_wavetables: align_index out of range");

  Wavetables tables;
  tables.rows = k_count;
  tables.cols = l_count;
  tables.align_index = align;
  tables.rd_values.resize(k_count);
  tables.data.assign(k_count * l_count, 0.0);

  const double log_min = std::log(rd_min);
  const double log_step = (std::log(rd_max) - log_min) / static_cast<double>(k_count - 1);
  for (std::size_t k = 0; k < k_count; ++k)
    tables.rd_values[k] = std::exp(log_min + log_step * static_cast<double>(k));
  tables.rd_values.front() = rd_min;
  tables.rd_values.back() = rd_max;

  parallel_for(k_count, [&](std::size_t k) {
    const LFParams p = rd_to_lf_params(tables.rd_values[k]);
    std::vector<double> period(l_count);
    for (std::size_t j = 0; j < l_count; ++j)
      period[j] = lf_flow_derivative(static_cast<double>(j) / static_cast<double>(l_count), p);

    // The left-endpoint sampling leaves a small DC residual; remove it so the
    // discrete period has zero net flow too.
    double mean = 0.0;
    for (double x : period) mean += x;
    mean /= static_cast<double>(l_count);
    double energy = 0.0;
    for (double& x : period) {
      x -= mean;
      energy += x * x;
    }
    const double scale = 1.0 / std::sqrt(energy);
    for (double& x : period) x *= scale;

    const auto peak = static_cast<std::size_t>(
        std::distance(period.begin(), std::min_element(period.begin(), period.end())));
    const std::size_t shift = (align + l_count - peak) % l_count;
    double* out = tables.data.data() + k * l_count;
    for (std::size_t j = 0; j < l_count; ++j) out[(j + shift) % l_count] = period[j];
  });
  return tables;
}

void save_wavetables(const Wavetables& tables, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write("GOLF", 4);
  put_u32(out, kTableVersion);
  put_u32(out, static_cast<std::uint32_t>(tables.rows));
  put_u32(out, static_cast<std::uint32_t>(tables.cols));
  put_u32(out, static_cast<std::uint32_t>(tables.align_index));
  for (double rd : tables.rd_values) put_f64(out, rd);
  for (double x : tables.data) put_f64(out, x);
  if (!out) throw Error("write failed: " + path.string());
}

Wavetables load_wavetables(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::string_view(magic, 4) != "GOLF")
    throw Error(path.string() + " is not a wavetable file");
  const std::uint32_t version = get_u32(in);
  if (version != kTableVersion)
    throw Error("unsupported wavetable version " + std::to_string(version));
  Wavetables tables;
  tables.rows = get_u32(in);
  tables.cols = get_u32(in);
  tables.align_index = get_u32(in);
  if (tables.rows == 0 || tables.cols == 0 || tables.align_index >= tables.cols)
    throw Error("corrupt wavetable header in " + path.string());
  tables.rd_values.resize(tables.rows);
  for (double& rd : tables.rd_values) rd = get_f64(in);
  tables.data.resize(tables.rows * tables.cols);
  for (double& x : tables.data) x = get_f64(in);
  return tables;
}

void export_wavetables_csv(const Wavetables& tables, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.precision(17);
  for (std::size_t k = 0; k < tables.rows; ++k) {
    out << tables.rd_values[k];
    for (double x : tables.row(k)) out << ',' << x;
    out << '\n';
  }
}

}  // namespace golf

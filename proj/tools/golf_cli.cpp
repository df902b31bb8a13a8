// golf: build wavetables, render, fit and benchmark from the command line.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "golf/error.hpp"
#include "golf/filters.hpp"
#include "golf/glottal.hpp"
#include "golf/opt.hpp"
#include "golf/oscillator.hpp"
#include "golf/parallel.hpp"
#include "golf/params_io.hpp"
#include "golf/synth.hpp"
#include "golf/wav.hpp"

namespace fs = std::filesystem;
using namespace golf;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Deletes registered outputs unless commit() is called.
class OutputGuard {
 public:
  OutputGuard() = default;
  OutputGuard(const OutputGuard&) = delete;
  OutputGuard& operator=(const OutputGuard&) = delete;
  ~OutputGuard() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& p : paths_) fs::remove(p, ec);
  }
  const fs::path& add(const fs::path& p) { return paths_.emplace_back(p); }
  void keep(const fs::path& p) { std::erase(paths_, p); }
  void commit() { committed_ = true; }

 private:
  std::vector<fs::path> paths_;
  bool committed_ = false;
};

void require_writable(const fs::path& out) {
  const fs::path dir = out.has_parent_path() ? out.parent_path() : fs::path(".");
  if (!fs::is_directory(dir)) throw UsageError("output directory does not exist: " + dir.string());
  if (fs::is_directory(out)) throw UsageError("output path is a directory: " + out.string());
}

void require_readable(const fs::path& in, const char* what) {
  if (!fs::is_regular_file(in)) throw UsageError(std::string(what) + " not found: " + in.string());
}

fs::path with_suffix(const fs::path& p, const std::string& suffix, const std::string& ext) {
  fs::path out = p;
  out.replace_filename(p.stem().string() + suffix + ext);
  return out;
}

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ----------------------------------------------------------------- tables

struct TablesArgs {
  std::size_t k = 100;
  std::size_t l = 2048;
  double rd_min = kRdMin;
  double rd_max = kRdMax;
  fs::path out;
  fs::path csv;
};

int cmd_tables(const TablesArgs& a) {
  if (!(a.rd_min < a.rd_max)) throw UsageError("--rd-min must be below --rd-max");
  if (a.rd_min <= 0.0) throw UsageError("--rd-min must be positive");
  if (a.k < 2 || a.l < 2) throw UsageError("--k and --l must be at least 2");
  require_writable(a.out);
  if (!a.csv.empty()) require_writable(a.csv);

  OutputGuard guard;
  const auto t0 = Clock::now();
  const Wavetables tables = build_wavetables(a.k, a.l, a.rd_min, a.rd_max);
  save_wavetables(tables, guard.add(a.out));
  if (!a.csv.empty()) export_wavetables_csv(tables, guard.add(a.csv));

  double e_min = INFINITY, e_max = 0.0, dc_max = 0.0;
  std::size_t aligned = 0;
  for (std::size_t k = 0; k < tables.rows; ++k) {
    const auto row = tables.row(k);
    double energy = 0.0, sum = 0.0;
    for (double x : row) {
      energy += x * x;
      sum += x;
    }
    e_min = std::min(e_min, energy);
    e_max = std::max(e_max, energy);
    dc_max = std::max(dc_max, std::abs(sum / static_cast<double>(row.size())));
    if (static_cast<std::size_t>(std::min_element(row.begin(), row.end()) - row.begin()) == tables.align_index)
      ++aligned;
  }
  std::printf("wrote %s: K=%zu L=%zu Rd [%g, %g] in %.2f s\n", a.out.string().c_str(), tables.rows,
              tables.cols, tables.rd_values.front(), tables.rd_values.back(), seconds_since(t0));
  std::printf("row energy   min %.12f  max %.12f\n", e_min, e_max);
  std::printf("row mean     max |mean| %.3e\n", dc_max);
  std::printf("alignment    %zu/%zu rows with minimum at column %zu\n", aligned, tables.rows,
              tables.align_index);
  guard.commit();
  return 0;
}

// ------------------------------------------------------------------ synth

struct SynthArgs {
  fs::path params;
  fs::path tables;
  fs::path out;
  fs::path offsets;
  std::uint64_t seed = 0;
  bool stems = false;
  std::string source = "wavetable";
};

RenderOptions render_options(const std::string& source) {
  RenderOptions o;
  o.source = source == "pulse" ? SourceKind::PulseTrain : SourceKind::Wavetable;
  return o;
}

int cmd_synth(const SynthArgs& a) {
  require_readable(a.params, "parameter file");
  require_readable(a.tables, "wavetable file");
  if (!a.offsets.empty()) require_readable(a.offsets, "offset file");
  require_writable(a.out);

  const SynthParams params = load_params(a.params);
  const Wavetables tables = load_wavetables(a.tables);
  RenderOptions options = render_options(a.source);

  OutputGuard guard;
  RenderOutput out;
  if (a.offsets.empty()) {
    out = render(params, tables, a.seed, options);
  } else {
    const OffsetTrack track = load_offsets(a.offsets);
    const double ratio = params.sample_rate / track.rate;
    if (!(track.rate > 0.0) || ratio != std::round(ratio))
      throw Error("sample-rate mismatch: offset rate " + std::to_string(track.rate) +
                  " Hz does not divide parameter sample rate " + std::to_string(params.sample_rate));
    options.offset_rate = track.rate;
    out = render_with_offset(params, tables, track.offsets, a.seed, options);
  }

  write_wav(guard.add(a.out), {params.sample_rate, out.audio});
  if (a.stems) {
    write_wav(guard.add(with_suffix(a.out, "_harmonic", ".wav")), {params.sample_rate, out.harmonic});
    write_wav(guard.add(with_suffix(a.out, "_noise", ".wav")), {params.sample_rate, out.noise});
  }
  double peak = 0.0;
  for (double x : out.audio) peak = std::max(peak, std::abs(x));
  std::printf("wrote %s: %zu samples (%zu frames x %zu) at %g Hz, peak %.4f\n", a.out.string().c_str(),
              out.audio.size(), params.frames(), params.hop, params.sample_rate, peak);
  guard.commit();
  return 0;
}

// -------------------------------------------------------------------- fit

struct FitArgs {
  fs::path target;
  fs::path tables;
  fs::path params;
  fs::path init;
  bool init_random = false;
  std::string mode = "params";
  std::size_t steps = 1000;
  double lr = 1e-3;
  std::size_t restarts = 1;
  std::uint64_t seed = 0;
  std::uint64_t init_seed = 0;
  double msstft_weight = 1.0;
  double l2_weight = 0.0;
  std::size_t lpc_order = 22;
  fs::path out;
  fs::path trace;
};

void write_trace(const fs::path& path, const std::vector<double>& trace,
                 const std::vector<std::string>& notes) {
  save_loss_trace(trace, path);
  if (notes.empty()) return;
  std::ofstream csv(path, std::ios::app);
  for (const auto& n : notes) csv << "# " << n << '\n';
  if (!csv) throw Error("write failed: " + path.string());
}

SynthParams random_params(std::size_t frames, const FitArgs& a, double sample_rate, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> log_f0(std::log(80.0), std::log(400.0));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> eta(0.0, 0.1);
  SynthParams p = make_flat_params(frames, std::exp(log_f0(rng)) / sample_rate, 1.0, 0.2 + 0.6 * unit(rng),
                                   0.05 + 0.2 * unit(rng), unit(rng), 120, 480, a.lpc_order, sample_rate);
  for (double& x : p.harmonic_filter) x = eta(rng);
  for (double& x : p.noise_filter) x = eta(rng);
  return p;
}

std::string loss_range(double lo, double hi) {
  std::ostringstream s;
  s.precision(9);
  s << "min_final_loss=" << lo << " max_final_loss=" << hi;
  return s.str();
}

int fit_phase(const FitArgs& a, const Audio& target, const Wavetables& tables, OutputGuard& guard) {
  if (a.params.empty()) throw UsageError("--mode phase needs --params");
  require_readable(a.params, "parameter file");
  const SynthParams params = load_params(a.params);
  if (params.sample_rate != target.sample_rate)
    throw Error("sample-rate mismatch: target " + std::to_string(target.sample_rate) + " Hz, parameters " +
                std::to_string(params.sample_rate) + " Hz");

  PhaseFitOptions options;
  options.noise_seed = a.seed;
  if (!a.init.empty()) {
    require_readable(a.init, "initial offset file");
    const OffsetTrack init = load_offsets(a.init);
    options.init = OffsetInit::Given;
    options.initial = init.offsets;
    options.render.offset_rate = init.rate;
  } else {
    options.init = a.init_random ? OffsetInit::Random : OffsetInit::Zero;
  }
  AdamConfig cfg;
  cfg.learning_rate = a.lr;
  cfg.steps = a.steps;

  try {
    const auto summary =
        fit_phase_offset_restarts(params, tables, target.samples, cfg, a.init_seed, a.restarts, options);
    const auto& best = summary.runs[summary.best];
    save_offsets({options.render.offset_rate, best.offsets}, guard.add(a.out));
    std::vector<std::string> notes;
    for (std::size_t r = 0; r < summary.runs.size(); ++r)
      std::printf("restart %zu: final loss %.9g\n", r, summary.runs[r].final_loss);
    if (a.restarts > 1) {
      notes.push_back("restarts=" + std::to_string(a.restarts) + " best=" + std::to_string(summary.best));
      notes.push_back(loss_range(summary.min_final_loss, summary.max_final_loss));
    }
    write_trace(guard.add(a.trace), best.loss_trace, notes);
    std::printf("final loss min %.9g max %.9g over %zu restart(s)\n", summary.min_final_loss,
                summary.max_final_loss, a.restarts);
  } catch (const PhaseFitAborted& e) {
    write_trace(a.trace, e.trace(), {"aborted: non-finite value"});
    throw;
  }
  return 0;
}

int fit_params_mode(const FitArgs& a, const Audio& target, const Wavetables& tables, OutputGuard& guard) {
  if (a.init.empty() && !a.init_random) throw UsageError("--mode params needs --init FILE or --init-random");
  if (!a.init_random && a.restarts > 1) throw UsageError("--restarts > 1 needs --init-random");

  std::optional<SynthParams> given;
  if (!a.init.empty()) {
    require_readable(a.init, "initial parameter file");
    given = load_params(a.init);
    if (given->sample_rate != target.sample_rate)
      throw Error("sample-rate mismatch: target " + std::to_string(target.sample_rate) + " Hz, parameters " +
                  std::to_string(given->sample_rate) + " Hz");
  } else if (target.samples.size() % 120 != 0) {
    throw Error("target length " + std::to_string(target.samples.size()) + " is not a multiple of the hop 120");
  }

  LossWeights weights;
  weights.msstft = a.msstft_weight;
  weights.l2 = a.l2_weight;
  AdamConfig cfg;
  cfg.learning_rate = a.lr;
  cfg.steps = a.steps;

  std::optional<ParamFitResult> best;
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t r = 0; r < a.restarts; ++r) {
    const SynthParams init = given ? *given
                                   : random_params(target.samples.size() / 120, a, target.sample_rate,
                                                   a.init_seed + r);
    try {
      auto result = fit_params(target.samples, init, tables, weights, cfg, a.seed);
      std::printf("restart %zu: final loss %.9g\n", r, result.final_loss);
      lo = std::min(lo, result.final_loss);
      hi = std::max(hi, result.final_loss);
      if (!best || result.final_loss < best->final_loss) best = std::move(result);
    } catch (const FitAborted& e) {
      write_trace(a.trace, e.trace(), {"aborted: non-finite value in restart " + std::to_string(r)});
      throw;
    }
  }
  save_params(best->params, guard.add(a.out));
  std::vector<std::string> notes;
  if (a.restarts > 1) notes.push_back(loss_range(lo, hi));
  write_trace(guard.add(a.trace), best->loss_trace, notes);
  std::printf("final loss min %.9g max %.9g over %zu restart(s)\n", lo, hi, a.restarts);
  return 0;
}

int cmd_fit(FitArgs a) {
  if (a.mode != "params" && a.mode != "phase") throw UsageError("--mode must be params or phase");
  if (a.restarts == 0) throw UsageError("--restarts must be at least 1");
  if (!(a.lr > 0.0)) throw UsageError("--lr must be positive");
  require_readable(a.target, "target");
  require_readable(a.tables, "wavetable file");
  require_writable(a.out);
  if (a.trace.empty()) a.trace = with_suffix(a.out, "_loss", ".csv");
  require_writable(a.trace);

  const Audio target = read_wav(a.target);
  const Wavetables tables = load_wavetables(a.tables);
  OutputGuard guard;
  const int rc = a.mode == "phase" ? fit_phase(a, target, tables, guard) : fit_params_mode(a, target, tables, guard);
  std::printf("wrote %s and %s\n", a.out.string().c_str(), a.trace.string().c_str());
  guard.commit();
  return rc;
}

// ------------------------------------------------------------------ bench

struct BenchArgs {
  fs::path tables;
  double duration = 10.0;
  std::size_t threads = 0;
  std::size_t repeats = 5;
  std::uint64_t seed = 0;
  fs::path json;
};

FrameCoeffs expand(const std::vector<double>& x, const SynthParams& p) {
  FrameCoeffs fc{p.lpc_order, p.hop, p.window, std::vector<double>(x.size())};
  parallel_for(p.frames(), [&](std::size_t k) {
    const auto a = direct_from_unconstrained(std::span(x.data() + k * p.lpc_order, p.lpc_order));
    std::copy(a.begin(), a.end(), fc.coeffs.begin() + static_cast<std::ptrdiff_t>(k * p.lpc_order));
  });
  return fc;
}

struct Stats {
  double min = 0.0, median = 0.0, max = 0.0;
};
Stats stats_of(const std::vector<double>& v) {
  return {*std::min_element(v.begin(), v.end()), median_of(v), *std::max_element(v.begin(), v.end())};
}

int cmd_bench(const BenchArgs& a) {
  if (!(a.duration > 0.0)) throw UsageError("--duration must be positive");
  if (a.repeats == 0) throw UsageError("--repeats must be at least 1");
  if (!a.json.empty()) require_writable(a.json);
  Wavetables tables;
  if (a.tables.empty()) {
    tables = build_wavetables();
  } else {
    require_readable(a.tables, "wavetable file");
    tables = load_wavetables(a.tables);
  }
  set_thread_count(a.threads);

  const double sr = 24000.0;
  const std::size_t frames = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(a.duration * sr / 120.0)));
  SynthParams p = make_flat_params(frames, 220.0 / sr, 1.0, 0.5, 0.5, 0.5);
  std::mt19937_64 rng(a.seed);
  std::normal_distribution<double> eta(0.0, 1.0);
  for (double& x : p.harmonic_filter) x = eta(rng);
  for (double& x : p.noise_filter) x = eta(rng);
  const double audio_seconds = static_cast<double>(p.samples()) / sr;

  std::vector<double> total, osc, hlpc, nlpc;
  const auto window = hann_window(p.window);
  for (std::size_t r = 0; r < a.repeats; ++r) {
    auto t0 = Clock::now();
    const auto out = render(p, tables, a.seed);
    total.push_back(seconds_since(t0) / audio_seconds);

    t0 = Clock::now();
    const std::size_t n = p.samples();
    const auto f_n = upsample_linear(p.f, p.hop, n);
    const auto v_n = upsample_linear(p.v, p.hop, n);
    const auto tau_n = upsample_linear(upsample_linear(p.tau, p.tau_stride, frames), p.hop, n);
    const auto source = wavetable_lookup(accumulate_phase(gate_frequency(f_n, v_n)), tau_n, tables);
    osc.push_back(seconds_since(t0) / audio_seconds);

    t0 = Clock::now();
    const auto gain = upsample_linear(p.gamma, p.hop, n);
    const auto h = framewise_lpc(source, gain, expand(p.harmonic_filter, p), window);
    hlpc.push_back(seconds_since(t0) / audio_seconds);

    t0 = Clock::now();
    const auto noise = gaussian_noise(a.seed, n);
    const auto nz = framewise_lpc(noise, upsample_linear(p.beta, p.hop, n), expand(p.noise_filter, p), window);
    nlpc.push_back(seconds_since(t0) / audio_seconds);
  }

  const Stats t = stats_of(total), o = stats_of(osc), hs = stats_of(hlpc), ns = stats_of(nlpc);
  std::printf("audio %.2f s at %g Hz, M=%zu, threads %zu, repeats %zu\n", audio_seconds, sr, p.lpc_order,
              thread_count(), a.repeats);
  std::printf("%-14s %10s %10s %10s\n", "stage (RTF)", "min", "median", "max");
  auto row = [](const char* name, const Stats& s) {
    std::printf("%-14s %10.5f %10.5f %10.5f\n", name, s.min, s.median, s.max);
  };
  row("total", t);
  row("oscillator", o);
  row("harmonic LPC", hs);
  row("noise LPC", ns);

  if (!a.json.empty()) {
    OutputGuard guard;
    auto j = [](const Stats& s) { return nlohmann::json{{"min", s.min}, {"median", s.median}, {"max", s.max}}; };
    const nlohmann::json doc{{"audio_seconds", audio_seconds},
                             {"sample_rate", sr},
                             {"lpc_order", p.lpc_order},
                             {"threads", thread_count()},
                             {"repeats", a.repeats},
                             {"rtf", j(t)},
                             {"stages", {{"oscillator", j(o)}, {"harmonic_lpc", j(hs)}, {"noise_lpc", j(ns)}}}};
    std::ofstream f(guard.add(a.json));
    f << doc.dump(2) << '\n';
    if (!f) throw Error("write failed: " + a.json.string());
    f.close();
    guard.commit();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentiable glottal-source vocoder tools"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = all cores)");
  app.fallthrough();

  TablesArgs ta;
  auto* tables = app.add_subcommand("tables", "build glottal wavetables");
  tables->add_option("--k", ta.k, "number of Rd rows")->capture_default_str();
  tables->add_option("--l", ta.l, "samples per period")->capture_default_str();
  tables->add_option("--rd-min", ta.rd_min)->capture_default_str();
  tables->add_option("--rd-max", ta.rd_max)->capture_default_str();
  tables->add_option("--out", ta.out, "binary table file")->required();
  tables->add_option("--csv", ta.csv, "also export rows as CSV");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "render a parameter file to WAV");
  synth->add_option("--params", sa.params, "parameter JSON")->required();
  synth->add_option("--tables", sa.tables, "wavetable file")->required();
  synth->add_option("--out", sa.out, "output WAV")->required();
  synth->add_option("--seed", sa.seed, "noise seed")->capture_default_str();
  synth->add_option("--offsets", sa.offsets, "phase-offset JSON");
  synth->add_flag("--stems", sa.stems, "also write <out>_harmonic.wav and <out>_noise.wav");
  synth->add_option("--source", sa.source)->check(CLI::IsMember({"wavetable", "pulse"}))->capture_default_str();

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "fit parameters or phase offsets to a target WAV");
  fit->add_option("--target", fa.target, "target WAV")->required();
  fit->add_option("--tables", fa.tables, "wavetable file")->required();
  fit->add_option("--params", fa.params, "control tracks for --mode phase");
  auto* init = fit->add_option("--init", fa.init, "initial parameters (params) or offsets (phase)");
  fit->add_flag("--init-random", fa.init_random, "random initialisation")->excludes(init);
  fit->add_option("--mode", fa.mode)->check(CLI::IsMember({"params", "phase"}))->capture_default_str();
  fit->add_option("--steps", fa.steps)->capture_default_str();
  fit->add_option("--lr", fa.lr)->capture_default_str();
  fit->add_option("--restarts", fa.restarts)->capture_default_str();
  fit->add_option("--seed", fa.seed, "noise seed")->capture_default_str();
  fit->add_option("--init-seed", fa.init_seed, "seed of restart 0")->capture_default_str();
  fit->add_option("--msstft-weight", fa.msstft_weight)->capture_default_str();
  fit->add_option("--l2-weight", fa.l2_weight)->capture_default_str();
  fit->add_option("--lpc-order", fa.lpc_order, "order for --init-random")->capture_default_str();
  fit->add_option("--out", fa.out, "fitted parameters or offsets")->required();
  fit->add_option("--trace", fa.trace, "loss CSV (default <out>_loss.csv)");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "real-time factor benchmark");
  bench->add_option("--tables", ba.tables, "wavetable file (default: build in memory)");
  bench->add_option("--duration", ba.duration, "seconds of audio")->capture_default_str();
  bench->add_option("--repeats", ba.repeats)->capture_default_str();
  bench->add_option("--seed", ba.seed)->capture_default_str();
  bench->add_option("--json", ba.json, "also write the report as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "golf: %s\n", e.what());
    return 2;
  }

  try {
    set_thread_count(threads);
    if (*tables) return cmd_tables(ta);
    if (*synth) return cmd_synth(sa);
    if (*fit) return cmd_fit(fa);
    ba.threads = threads;
    return cmd_bench(ba);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "golf: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "golf: %s\n", e.what());
    return 1;
  }
}

#include "golf/params_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "golf/error.hpp"

namespace golf {
namespace {

using nlohmann::json;

json frames_to_json(const std::vector<double>& flat, std::size_t order) {
  json rows = json::array();
  for (std::size_t k = 0; order > 0 && k < flat.size() / order; ++k)
    rows.push_back(std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(k * order),
                                       flat.begin() + static_cast<std::ptrdiff_t>((k + 1) * order)));
  return rows;
}

std::vector<double> frames_from_json(const json& rows, std::size_t order, const char* name) {
  std::vector<double> flat;
  for (const auto& row : rows) {
    const auto values = row.get<std::vector<double>>();
    if (values.size() != order)
      throw ShapeError(std::string(name) + ": every frame needs lpc_order values");
    flat.insert(flat.end(), values.begin(), values.end());
  }
  return flat;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace

std::string params_to_json(const SynthParams& p) {
  json doc;
  doc["schema_version"] = kParamsSchemaVersion;
  doc["sample_rate"] = p.sample_rate;
  doc["hop"] = p.hop;
  doc["window"] = p.window;
  doc["lpc_order"] = p.lpc_order;
  doc["tau_stride"] = p.tau_stride;
  doc["table_ref"] = p.table_ref;
  doc["f"] = p.f;
  doc["v"] = p.v;
  doc["gamma"] = p.gamma;
  doc["beta"] = p.beta;
  doc["tau"] = p.tau;
  doc["harmonic_filter"] = frames_to_json(p.harmonic_filter, p.lpc_order);
  doc["noise_filter"] = frames_to_json(p.noise_filter, p.lpc_order);
  return doc.dump(1);
}

SynthParams params_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("parameter file is not valid JSON: ") + e.what());
  }
  try {
    const int version = doc.at("schema_version").get<int>();
    if (version != kParamsSchemaVersion)
      throw Error("parameter schema_version " + std::to_string(version) + " unsupported (expected " +
                  std::to_string(kParamsSchemaVersion) + ")");
    SynthParams p;
    p.sample_rate = doc.at("sample_rate").get<double>();
    p.hop = doc.at("hop").get<std::size_t>();
    p.window = doc.value("window", 4 * p.hop);
    p.lpc_order = doc.at("lpc_order").get<std::size_t>();
    p.tau_stride = doc.at("tau_stride").get<std::size_t>();
    p.table_ref = doc.value("table_ref", std::string{});
    p.f = doc.at("f").get<std::vector<double>>();
    p.v = doc.at("v").get<std::vector<double>>();
    p.gamma = doc.at("gamma").get<std::vector<double>>();
    p.beta = doc.at("beta").get<std::vector<double>>();
    p.tau = doc.at("tau").get<std::vector<double>>();
    p.harmonic_filter = frames_from_json(doc.at("harmonic_filter"), p.lpc_order, "harmonic_filter");
    p.noise_filter = frames_from_json(doc.at("noise_filter"), p.lpc_order, "noise_filter");
    p.validate();
    p.clamp_ranges();
    return p;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed parameter file: ") + e.what());
  }
}

void save_params(const SynthParams& params, const std::filesystem::path& path) {
  write_file(path, params_to_json(params));
}

SynthParams load_params(const std::filesystem::path& path) {
  return params_from_json(read_file(path));
}

void save_offsets(const OffsetTrack& track, const std::filesystem::path& path) {
  json doc;
  doc["schema_version"] = kParamsSchemaVersion;
  doc["rate"] = track.rate;
  doc["offsets"] = track.offsets;
  write_file(path, doc.dump(1));
}

OffsetTrack load_offsets(const std::filesystem::path& path) {
  try {
    const json doc = json::parse(read_file(path));
    const int version = doc.at("schema_version").get<int>();
    if (version != kParamsSchemaVersion)
      throw Error("offset schema_version " + std::to_string(version) + " unsupported");
    OffsetTrack track;
    track.rate = doc.value("rate", 20.0);
    track.offsets = doc.at("offsets").get<std::vector<double>>();
    if (track.offsets.empty()) throw Error("offset track is empty");
    return track;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed offset file: ") + e.what());
  }
}

void save_loss_trace(const std::vector<double>& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.precision(17);
  out << "step,loss\n";
  for (std::size_t i = 0; i < trace.size(); ++i) out << i << ',' << trace[i] << '\n';
}

}  // namespace golf

#include <gtest/gtest.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "golf/error.hpp"
#include "golf/params_io.hpp"
#include "golf/wav.hpp"
#include "test_util.hpp"

namespace golf {
namespace {

namespace fs = std::filesystem;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("golf_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

SynthParams sample_params() {
  std::mt19937_64 rng(1);
  auto p = make_flat_params(13, 0.01, 1.0, 0.5, 0.1, 0.5, 120, 480, 4);
  p.f = test::random_vector(rng, 13, 0.0, 0.5);
  p.tau = test::random_vector(rng, p.tau.size(), 0.0, 1.0);
  p.harmonic_filter = test::random_vector(rng, 13 * 4, -3.0, 3.0);
  p.noise_filter = test::random_vector(rng, 13 * 4, -3.0, 3.0);
  p.table_ref = "tables.bin";
  return p;
}

void put_u32(std::ostream& o, std::uint32_t v) { o.write(reinterpret_cast<const char*>(&v), 4); }
void put_u16(std::ostream& o, std::uint16_t v) { o.write(reinterpret_cast<const char*>(&v), 2); }

void write_pcm16(const fs::path& path, std::uint16_t channels, std::uint32_t rate,
                 const std::vector<std::int16_t>& data) {
  std::ofstream o(path, std::ios::binary);
  const auto bytes = static_cast<std::uint32_t>(data.size() * 2);
  o.write("RIFF", 4);
  put_u32(o, 36 + bytes);
  o.write("WAVEfmt ", 8);
  put_u32(o, 16);
  put_u16(o, 1);
  put_u16(o, channels);
  put_u32(o, rate);
  put_u32(o, rate * 2 * channels);
  put_u16(o, static_cast<std::uint16_t>(2 * channels));
  put_u16(o, 16);
  o.write("LIST", 4);  // an unrelated chunk the reader must skip
  put_u32(o, 4);
  o.write("INFO", 4);
  o.write("data", 4);
  put_u32(o, bytes);
  o.write(reinterpret_cast<const char*>(data.data()), bytes);
}

TEST(ParamsJson, RoundTripIsExact) {
  const auto p = sample_params();
  const auto q = params_from_json(params_to_json(p));
  EXPECT_EQ(q.sample_rate, p.sample_rate);
  EXPECT_EQ(q.hop, p.hop);
  EXPECT_EQ(q.window, p.window);
  EXPECT_EQ(q.lpc_order, p.lpc_order);
  EXPECT_EQ(q.tau_stride, p.tau_stride);
  EXPECT_EQ(q.table_ref, p.table_ref);
  EXPECT_EQ(q.f, p.f);
  EXPECT_EQ(q.v, p.v);
  EXPECT_EQ(q.gamma, p.gamma);
  EXPECT_EQ(q.beta, p.beta);
  EXPECT_EQ(q.tau, p.tau);
  EXPECT_EQ(q.harmonic_filter, p.harmonic_filter);
  EXPECT_EQ(q.noise_filter, p.noise_filter);
}

TEST(ParamsJson, HeaderAndPerFrameFilters) {
  const auto j = nlohmann::json::parse(params_to_json(sample_params()));
  EXPECT_EQ(j.at("schema_version"), 1);
  EXPECT_EQ(j.at("sample_rate"), 24000.0);
  EXPECT_EQ(j.at("hop"), 120);
  EXPECT_EQ(j.at("lpc_order"), 4);
  EXPECT_EQ(j.at("tau_stride"), 10);
  EXPECT_EQ(j.at("table_ref"), "tables.bin");
  EXPECT_EQ(j.at("f").size(), 13u);
  ASSERT_EQ(j.at("harmonic_filter").size(), 13u);
  EXPECT_EQ(j.at("harmonic_filter")[0].size(), 4u);
}

TEST(ParamsJson, ClampsOnIngestion) {
  auto p = sample_params();
  p.f[0] = 0.8;
  p.v[1] = -0.5;
  p.beta[2] = -1.0;
  const auto q = params_from_json(params_to_json(p));
  EXPECT_EQ(q.f[0], 0.5);
  EXPECT_EQ(q.v[1], 0.0);
  EXPECT_EQ(q.beta[2], 0.0);
}

TEST(ParamsJson, RejectsBadDocuments) {
  EXPECT_THROW(params_from_json("{not json"), Error);
  auto text = params_to_json(sample_params());
  const auto at = text.find("\"schema_version\"");
  ASSERT_NE(at, std::string::npos);
  auto wrong = text;
  wrong.replace(text.find(':', at) + 1, 1, "7");
  EXPECT_THROW(params_from_json(wrong), Error);
  auto p = sample_params();
  p.gamma.pop_back();
  EXPECT_THROW(params_from_json(params_to_json(p)), Error);
}

TEST_F(TempDir, ParamsFileRoundTrip) {
  const auto p = sample_params();
  save_params(p, dir_ / "p.json");
  EXPECT_EQ(load_params(dir_ / "p.json").harmonic_filter, p.harmonic_filter);
  EXPECT_THROW(load_params(dir_ / "missing.json"), Error);
}

TEST_F(TempDir, OffsetsRoundTrip) {
  OffsetTrack t{20.0, {0.1, -0.25, 0.7}};
  save_offsets(t, dir_ / "o.json");
  const auto u = load_offsets(dir_ / "o.json");
  EXPECT_EQ(u.rate, 20.0);
  EXPECT_EQ(u.offsets, t.offsets);
  std::ofstream(dir_ / "empty.json") << R"({"schema_version":1,"rate":20,"offsets":[]})";
  EXPECT_THROW(load_offsets(dir_ / "empty.json"), Error);
}

TEST_F(TempDir, LossTraceCsv) {
  save_loss_trace({3.0, 1.5, 0.25}, dir_ / "t.csv");
  std::ifstream in(dir_ / "t.csv");
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), "step,loss\n0,3\n1,1.5\n2,0.25\n");
}

TEST_F(TempDir, FloatWavRoundTrip) {
  std::mt19937_64 rng(2);
  Audio a{24000.0, test::random_vector(rng, 1000)};
  for (double& x : a.samples) x = static_cast<float>(x);
  write_wav(dir_ / "a.wav", a);
  const auto b = read_wav(dir_ / "a.wav");
  EXPECT_EQ(b.sample_rate, 24000.0);
  EXPECT_EQ(b.samples, a.samples);
  EXPECT_EQ(fs::file_size(dir_ / "a.wav"), 44u + 4u * 1000u);
}

TEST_F(TempDir, Pcm16IsScaled) {
  write_pcm16(dir_ / "p.wav", 1, 16000, {0, 16384, -32768, 32767});
  const auto a = read_wav(dir_ / "p.wav");
  EXPECT_EQ(a.sample_rate, 16000.0);
  ASSERT_EQ(a.samples.size(), 4u);
  EXPECT_EQ(a.samples[0], 0.0);
  EXPECT_EQ(a.samples[1], 0.5);
  EXPECT_EQ(a.samples[2], -1.0);
}

TEST_F(TempDir, RejectsStereoAndGarbage) {
  write_pcm16(dir_ / "s.wav", 2, 24000, {1, 2, 3, 4});
  EXPECT_THROW(read_wav(dir_ / "s.wav"), Error);
  std::ofstream(dir_ / "g.wav") << "definitely not audio";
  EXPECT_THROW(read_wav(dir_ / "g.wav"), Error);
  EXPECT_THROW(read_wav(dir_ / "none.wav"), Error);
}

}  // namespace
}  // namespace golf

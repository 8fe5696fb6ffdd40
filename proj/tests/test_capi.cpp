// Exercises the shared library through its C interface only.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "motinv/motinv.h"

namespace {

namespace fs = std::filesystem;

struct Deleter {
  void operator()(motinv_clip* c) const { motinv_clip_free(c); }
  void operator()(motinv_flow* f) const { motinv_flow_free(f); }
  void operator()(motinv_bank* b) const { motinv_bank_free(b); }
};
using Clip = std::unique_ptr<motinv_clip, Deleter>;
using Flow = std::unique_ptr<motinv_flow, Deleter>;
using Bank = std::unique_ptr<motinv_bank, Deleter>;

std::pair<Clip, Flow> synth(double v1 = 1.0, size_t frames = 4, size_t side = 8, size_t channels = 1) {
  motinv_clip* c = nullptr;
  motinv_flow* f = nullptr;
  EXPECT_EQ(motinv_clip_synthesize(MOTINV_PATTERN_RANDOM_TEXTURE, 3, 5, channels, v1, 0, frames, side, side, &c, &f),
            MOTINV_OK)
      << motinv_last_error();
  return {Clip(c), Flow(f)};
}

Bank bank(size_t n, size_t m, uint64_t seed, double scale, motinv_mode mode = MOTINV_MODE_SOFTMAX) {
  motinv_bank* b = nullptr;
  EXPECT_EQ(motinv_bank_init(n, m, 3, mode, seed, scale, &b), MOTINV_OK) << motinv_last_error();
  return Bank(b);
}

double evaluate(const motinv_bank* b, const motinv_clip* c, const motinv_flow* f, const motinv_action_options& o) {
  motinv_breakdown out{};
  EXPECT_EQ(motinv_action_evaluate(b, nullptr, c, f, &o, &out, nullptr), MOTINV_OK) << motinv_last_error();
  return out.action;
}

TEST(CApi, VersionIsSemantic) {
  const std::string v = motinv_version();
  EXPECT_EQ(std::count(v.begin(), v.end(), '.'), 2);
}

TEST(CApi, SynthesizedClipHasRequestedShape) {
  auto [clip, flow] = synth(1.0, 5, 6, 3);
  size_t t = 0, h = 0, w = 0, m = 0;
  ASSERT_EQ(motinv_clip_shape(clip.get(), &t, &h, &w, &m), MOTINV_OK);
  EXPECT_EQ(t, 5u);
  EXPECT_EQ(h, 6u);
  EXPECT_EQ(w, 6u);
  EXPECT_EQ(m, 3u);
  const double* data = motinv_clip_data(clip.get());
  for (size_t k = 0; k < t * h * w * m; ++k) {
    EXPECT_GE(data[k], 0.0);
    EXPECT_LE(data[k], 1.0);
  }
  const double* v = motinv_flow_data(flow.get());
  EXPECT_EQ(v[0], 1.0);
  EXPECT_EQ(v[1], 0.0);
}

TEST(CApi, InvalidArgumentsReportErrors) {
  motinv_clip* c = nullptr;
  motinv_flow* f = nullptr;
  EXPECT_EQ(motinv_clip_synthesize(MOTINV_PATTERN_CHECKERBOARD, 4, 0, 1, 0, 0, 1, 8, 8, &c, &f),
            MOTINV_ERR_INVALID_ARGUMENT);
  EXPECT_GT(std::strlen(motinv_last_error()), 0u);
  EXPECT_EQ(c, nullptr);
  EXPECT_EQ(motinv_clip_synthesize(MOTINV_PATTERN_CHECKERBOARD, 4, 0, 1, 0, 0, 4, 8, 8, nullptr, &f),
            MOTINV_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(motinv_clip_synthesize(static_cast<motinv_pattern>(9), 4, 0, 1, 0, 0, 4, 8, 8, &c, &f),
            MOTINV_ERR_INVALID_ARGUMENT);
  motinv_bank* b = nullptr;
  EXPECT_EQ(motinv_bank_init(1, 1, 3, MOTINV_MODE_SOFTMAX, 1, 0.1, &b), MOTINV_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(motinv_bank_init(2, 1, 2, MOTINV_MODE_SOFTMAX, 1, 0.1, &b), MOTINV_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(b, nullptr);
  EXPECT_EQ(motinv_clip_load("/nonexistent/f_{t}.pgm", &c), MOTINV_ERR_IO);
  EXPECT_NE(std::string(motinv_last_error()).find("/nonexistent/f_0000.pgm"), std::string::npos);
  EXPECT_EQ(motinv_clip_data(nullptr), nullptr);
  motinv_clip_free(nullptr);
}

TEST(CApi, ZeroBankOnUniformClipHasZeroAction) {
  auto [clip, flow] = synth(0.0);
  motinv_bank* raw = nullptr;
  ASSERT_EQ(motinv_bank_init(4, 1, 3, MOTINV_MODE_SOFTMAX, 1, 0.0, &raw), MOTINV_OK);
  Bank zero(raw);
  const motinv_action_options o{1, 1, 1, 0, 1, MOTINV_SCHEME_TRANSPORT};
  motinv_breakdown out{};
  std::vector<double> g(36, 1.0);
  ASSERT_EQ(motinv_action_evaluate(zero.get(), nullptr, clip.get(), flow.get(), &o, &out, g.data()), MOTINV_OK);
  EXPECT_NEAR(out.marginal_entropy, std::log(4.0), 1e-12);
  EXPECT_NEAR(out.conditional_entropy, std::log(4.0), 1e-12);
  EXPECT_NEAR(out.action, 0.0, 1e-12);
  for (double v : g) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(CApi, GradientMatchesFiniteDifferences) {
  auto [clip, flow] = synth(1.0);
  auto b = bank(3, 1, 4, 0.5, MOTINV_MODE_LINEAR_PENALTY);
  const motinv_action_options o{1.0, 0.1, 0.0, 1.0, 1.0, MOTINV_SCHEME_EULERIAN};
  motinv_breakdown out{};
  std::vector<double> g(27);
  ASSERT_EQ(motinv_action_evaluate(b.get(), nullptr, clip.get(), flow.get(), &o, &out, g.data()), MOTINV_OK);
  double* taps = motinv_bank_taps(b.get());
  for (size_t k = 0; k < g.size(); ++k) {
    const double keep = taps[k];
    taps[k] = keep + 1e-5;
    const double up = evaluate(b.get(), clip.get(), flow.get(), o);
    taps[k] = keep - 1e-5;
    const double down = evaluate(b.get(), clip.get(), flow.get(), o);
    taps[k] = keep;
    EXPECT_NEAR(g[k], (up - down) / 2e-5, 1e-5 * (1 + std::abs(g[k])));
  }
}

TEST(CApi, PrevBankFeedsTemporalTerm) {
  auto [clip, flow] = synth(1.0);
  auto now = bank(3, 1, 4, 0.5);
  auto prev = bank(3, 1, 4, 0.5);
  motinv_bank_taps(prev.get())[0] -= 0.5;
  const motinv_action_options o{0, 0, 1, 0, 0.5, MOTINV_SCHEME_TRANSPORT};
  motinv_breakdown with{}, without{};
  ASSERT_EQ(motinv_action_evaluate(now.get(), prev.get(), clip.get(), flow.get(), &o, &with, nullptr), MOTINV_OK);
  ASSERT_EQ(motinv_action_evaluate(now.get(), nullptr, clip.get(), flow.get(), &o, &without, nullptr), MOTINV_OK);
  EXPECT_DOUBLE_EQ(with.temporal, 0.5 * (0.5 / 0.5) * (0.5 / 0.5));
  EXPECT_EQ(without.temporal, 0.0);
}

TEST(CApi, DimensionErrors) {
  auto [clip, flow] = synth(1.0, 4, 8, 1);
  auto [other, other_flow] = synth(1.0, 4, 6, 1);
  auto b = bank(3, 2, 1, 0.1);
  const motinv_action_options o{1, 0, 0, 0, 1, MOTINV_SCHEME_TRANSPORT};
  motinv_breakdown out{};
  EXPECT_EQ(motinv_action_evaluate(b.get(), nullptr, clip.get(), flow.get(), &o, &out, nullptr), MOTINV_ERR_DIMENSION);
  auto b1 = bank(3, 1, 1, 0.1);
  EXPECT_EQ(motinv_action_evaluate(b1.get(), nullptr, clip.get(), other_flow.get(), &o, &out, nullptr),
            MOTINV_ERR_DIMENSION);
}

TEST(CApi, FilesRoundTrip) {
  const fs::path dir = fs::temp_directory_path() / "motinv_capi_files";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto b = bank(3, 2, 7, 1.0);
  ASSERT_EQ(motinv_bank_save(b.get(), (dir / "b.txt").c_str()), MOTINV_OK);
  motinv_bank* raw = nullptr;
  ASSERT_EQ(motinv_bank_load((dir / "b.txt").c_str(), &raw), MOTINV_OK);
  Bank back(raw);
  size_t n = 0, m = 0, k = 0;
  ASSERT_EQ(motinv_bank_shape(back.get(), &n, &m, &k), MOTINV_OK);
  EXPECT_EQ(n * m * k * k, 54u);
  EXPECT_EQ(std::memcmp(motinv_bank_taps(back.get()), motinv_bank_taps(b.get()), 54 * sizeof(double)), 0);

  auto [clip, flow] = synth(0.5);
  ASSERT_EQ(motinv_flow_write(flow.get(), (dir / "f.bin").c_str()), MOTINV_OK);
  motinv_flow* f = nullptr;
  ASSERT_EQ(motinv_flow_read((dir / "f.bin").c_str(), &f), MOTINV_OK);
  Flow read(f);
  EXPECT_EQ(std::memcmp(motinv_flow_data(read.get()), motinv_flow_data(flow.get()), 4 * 8 * 8 * 2 * sizeof(double)), 0);

  motinv_flow* hs = nullptr;
  ASSERT_EQ(motinv_flow_horn_schunck(clip.get(), 1.0, 10, &hs), MOTINV_OK);
  motinv_flow_free(hs);
  EXPECT_EQ(motinv_flow_horn_schunck(clip.get(), 0.0, 10, &hs), MOTINV_ERR_INVALID_ARGUMENT);
  fs::remove_all(dir);
}

TEST(CApi, RunReportsConfigAndCommandErrors) {
  const fs::path dir = fs::temp_directory_path() / "motinv_capi_run";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "bad.ini") << "[layer1]\nsteps = -3\n";
  std::ofstream(dir / "ok.ini") << "[data]\nframes = 3\nheight = 6\nwidth = 6\n[layer1]\nsteps = 2\n"
                                   "[check-grad]\ninstances = 2\n";
  motinv_run_options opt{};
  const std::string bad = (dir / "bad.ini").string(), ok = (dir / "ok.ini").string(), out = (dir / "out").string();
  opt.config_path = bad.c_str();
  EXPECT_EQ(motinv_run("train", &opt), MOTINV_ERR_CONFIG);
  EXPECT_NE(std::string(motinv_last_error()).find("steps"), std::string::npos);
  opt.config_path = ok.c_str();
  opt.out_dir = out.c_str();
  EXPECT_EQ(motinv_run("dance", &opt), MOTINV_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(motinv_run("train", nullptr), MOTINV_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(motinv_run("train", &opt), MOTINV_OK) << motinv_last_error();
  EXPECT_TRUE(fs::exists(dir / "out" / "layer1_bank.txt"));
  EXPECT_EQ(motinv_run("eval", &opt), MOTINV_OK) << motinv_last_error();
  EXPECT_EQ(motinv_run("check-grad", &opt), MOTINV_OK) << motinv_last_error();
  fs::remove_all(dir);
}

}  // namespace

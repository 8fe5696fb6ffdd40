#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "motinv/error.hpp"
#include "motinv/flow.hpp"
#include "motinv/video.hpp"

namespace motinv {
namespace {

namespace fs = std::filesystem;

double spatial_variance(const VelocityField& f, std::size_t t) {
  double sum[2] = {0, 0}, sq[2] = {0, 0};
  const double n = static_cast<double>(f.height() * f.width());
  for (std::size_t r = 0; r < f.height(); ++r)
    for (std::size_t c = 0; c < f.width(); ++c)
      for (std::size_t k = 0; k < 2; ++k) {
        sum[k] += f(t, r, c, k);
        sq[k] += f(t, r, c, k) * f(t, r, c, k);
      }
  return (sq[0] - sum[0] * sum[0] / n) / n + (sq[1] - sum[1] * sum[1] / n) / n;
}

TEST(ConstantFlow, FillsEverySample) {
  const auto zero = constant_flow({0, 0}, 3, 4, 5);
  for (double v : zero.data()) EXPECT_EQ(v, 0.0);
  const auto f = constant_flow({1, -2}, 3, 4, 5);
  EXPECT_EQ(f.shape(), (Shape{3, 4, 5, 2}));
  for (std::size_t k = 0; k < f.data().size(); k += 2) {
    EXPECT_EQ(f.data()[k], 1.0);
    EXPECT_EQ(f.data()[k + 1], -2.0);
  }
}

TEST(ConstantFlow, DomainMismatchIsReported) {
  const auto f = constant_flow({1, 0}, 3, 4, 5);
  EXPECT_NO_THROW(check_flow_matches(f, Shape{3, 4, 5, 1}));
  EXPECT_NO_THROW(check_flow_matches(f, Shape{3, 4, 5, 3}));
  EXPECT_THROW(check_flow_matches(f, Shape{4, 4, 5, 1}), DimensionMismatch);
  EXPECT_THROW(check_flow_matches(f, Shape{3, 5, 4, 1}), DimensionMismatch);
}

TEST(HornSchunck, StaticClipGivesZeroFlow) {
  auto [clip, truth] = synth_translating_clip({PatternKind::kRandomTexture, 4, 3, 1}, {0, 0}, 4, 16, 16);
  const auto f = horn_schunck(clip, 1.0, 50);
  for (double v : f.data()) EXPECT_EQ(v, 0.0);
}

TEST(HornSchunck, UniformBrightnessGivesZeroFlow) {
  VideoClip clip(Shape{3, 8, 8, 1});
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t k = 0; k < 64; ++k) clip.data()[t * 64 + k] = 0.2 + 0.3 * static_cast<double>(t);
  const auto f = horn_schunck(clip, 1.0, 100);
  for (double v : f.data()) EXPECT_EQ(v, 0.0);
}

TEST(HornSchunck, RecoversTranslationOfTexture) {
  // Fine texture: with [0,1] intensities and alpha = 1, coarser textures have
  // too little gradient for 200 iterations to propagate the estimate.
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto [clip, truth] = synth_translating_clip({PatternKind::kRandomTexture, 3, seed, 1}, {1, 0}, 4, 32, 32);
    const auto f = horn_schunck(clip, 1.0, 200);
    for (std::size_t t = 0; t < clip.frames(); ++t) {
      double v1 = 0, v2 = 0, count = 0;
      for (std::size_t r = 4; r + 4 < f.height(); ++r)
        for (std::size_t c = 4; c + 4 < f.width(); ++c) {
          v1 += f(t, r, c, 0);
          v2 += std::abs(f(t, r, c, 1));
          ++count;
        }
      v1 /= count;
      v2 /= count;
      EXPECT_GE(v1, 0.7) << "frame " << t;
      EXPECT_LE(v1, 1.3) << "frame " << t;
      EXPECT_LT(v2, 0.3) << "frame " << t;
    }
  }
}

TEST(HornSchunck, LastFrameCopiesPenultimate) {
  auto [clip, truth] = synth_translating_clip({PatternKind::kSinusoid, 6, 0, 1}, {0.5, 0.25}, 3, 12, 12);
  const auto f = horn_schunck(clip, 0.5, 20);
  for (std::size_t k = 0; k < f.frame(1).size(); ++k) EXPECT_EQ(f.frame(2)[k], f.frame(1)[k]);
}

TEST(HornSchunck, ChannelPermutationDoesNotChangeFlow) {
  auto [clip, truth] = synth_translating_clip({PatternKind::kRandomTexture, 5, 4, 3}, {0.5, -0.5}, 3, 12, 14);
  VideoClip permuted(clip.shape());
  for (std::size_t t = 0; t < clip.frames(); ++t)
    for (std::size_t r = 0; r < clip.height(); ++r)
      for (std::size_t c = 0; c < clip.width(); ++c)
        for (std::size_t j = 0; j < 3; ++j) permuted(t, r, c, j) = clip(t, r, c, (j + 1) % 3);
  const auto a = horn_schunck(clip, 1.0, 30);
  const auto b = horn_schunck(permuted, 1.0, 30);
  for (std::size_t k = 0; k < a.data().size(); ++k) EXPECT_EQ(a.data()[k], b.data()[k]);
}

TEST(HornSchunck, DoublingAlphaDoesNotIncreaseVariance) {
  // A property of the converged minimizer, so iterate to convergence.
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    auto [clip, truth] = synth_translating_clip({PatternKind::kRandomTexture, 3, seed, 1}, {0.5, 0.5}, 2, 24, 24);
    double alpha = 0.25;
    double previous = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 4; ++k, alpha *= 2) {
      const auto f = horn_schunck(clip, alpha, 3000);
      const double var = spatial_variance(f, 0);
      EXPECT_LE(var, previous * (1 + 1e-9)) << "seed " << seed << " alpha " << alpha;
      previous = var;
    }
  }
}

TEST(HornSchunck, RejectsBadParameters) {
  auto [clip, truth] = synth_translating_clip({PatternKind::kCheckerboard, 4, 0, 1}, {0, 0}, 2, 8, 8);
  EXPECT_THROW(horn_schunck(clip, 0.0, 10), InvalidArgument);
  EXPECT_THROW(horn_schunck(clip, -1.0, 10), InvalidArgument);
  EXPECT_THROW(horn_schunck(clip, 1.0, 0), InvalidArgument);
}

TEST(FlowFile, RoundTripIsBitExact) {
  const fs::path p = fs::temp_directory_path() / "motinv_flow_roundtrip.bin";
  VelocityField f(Shape{2, 3, 4, 2});
  double x = 1e-300;
  for (double& v : f.data()) {
    v = x;
    x *= -3.7;
  }
  f.data()[5] = std::numeric_limits<double>::denorm_min();
  write_flow(p, f);
  const auto back = read_flow(p);
  EXPECT_EQ(back.shape(), f.shape());
  for (std::size_t k = 0; k < f.data().size(); ++k)
    EXPECT_EQ(std::bit_cast<std::uint64_t>(back.data()[k]), std::bit_cast<std::uint64_t>(f.data()[k]));
  fs::remove(p);
}

TEST(FlowFile, HeaderAndLayoutAreDocumented) {
  const fs::path p = fs::temp_directory_path() / "motinv_flow_layout.bin";
  write_flow(p, constant_flow({1, -2}, 1, 1, 2));
  std::ifstream in(p, std::ios::binary);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "FLOW v1 1 1 2");
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  // 1.0 little-endian: 00 .. 00 f0 3f
  EXPECT_EQ(bytes[0], 0x00);
  EXPECT_EQ(bytes[6], 0xf0);
  EXPECT_EQ(bytes[7], 0x3f);
  fs::remove(p);
}

TEST(FlowFile, MalformedFilesFail) {
  const fs::path p = fs::temp_directory_path() / "motinv_flow_bad.bin";
  {
    std::ofstream out(p, std::ios::binary);
    out << "FLOW v2 1 1 1\n";
  }
  EXPECT_THROW(read_flow(p), IoError);
  {
    std::ofstream out(p, std::ios::binary);
    out << "FLOW v1 1 1 1\n1234";
  }
  EXPECT_THROW(read_flow(p), IoError);
  fs::remove(p);
  EXPECT_THROW(read_flow(p), IoError);
}

}  // namespace
}  // namespace motinv

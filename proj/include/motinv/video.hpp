#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>

#include "motinv/grid.hpp"

namespace motinv {

using Vec2 = std::array<double, 2>;  // (x1, x2) = (column, row)

enum class PatternKind { kCheckerboard, kSinusoid, kRandomTexture };

PatternKind parse_pattern_kind(std::string_view name);
std::string_view to_string(PatternKind kind);

struct PatternSpec {
  PatternKind kind = PatternKind::kCheckerboard;
  double period = 8.0;  // pixels, >= 2
  std::uint64_t seed = 0;  // random-texture only
  std::size_t channels = 1;
};

// Frame 0 of a pattern on an H x W retina, toroidal.
VideoClip render_pattern(const PatternSpec& pattern, std::size_t height, std::size_t width);

// Frame t is frame 0 translated by t * velocity (wrap-around, bilinear for
// sub-pixel offsets). The returned flow is `velocity` everywhere.
std::pair<VideoClip, VelocityField> synth_translating_clip(const PatternSpec& pattern,
                                                           const Vec2& velocity,
                                                           std::size_t frames,
                                                           std::size_t height,
                                                           std::size_t width);

// Throws unless every sample of `clip` lies in [0,1] and T >= 2.
void validate_clip(const Grid& clip);

// --- PGM / PPM ------------------------------------------------------------

// One 8-bit frame: channels() is 1 (P5) or 3 (P6).
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> pixels;  // row-major, interleaved channels
};

Image read_pnm(const std::filesystem::path& path);
void write_pnm(const std::filesystem::path& path, const Image& image);

// Replaces `{t}` with the zero-padded four digit frame index.
std::string expand_frame_pattern(std::string_view pattern, std::size_t t);

// Loads frames 0, 1, ... of `pattern` until the first missing index.
VideoClip load_image_sequence(std::string_view pattern);

// Writes every frame of `clip` as P5 (m=1) or P6 (m=3).
void save_image_sequence(const VideoClip& clip, std::string_view pattern);

// One P5 image per feature channel and frame: `feat{i}_t{tttt}.pgm`.
void save_feature_maps(const Grid& field, const std::filesystem::path& directory);

std::uint8_t quantize(double v) noexcept;

}  // namespace motinv

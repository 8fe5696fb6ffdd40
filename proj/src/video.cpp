#include "motinv/video.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "motinv/error.hpp"
#include "motinv/rng.hpp"

namespace motinv {

PatternKind parse_pattern_kind(std::string_view name) {
  if (name == "checkerboard") return PatternKind::kCheckerboard;
  if (name == "sinusoid") return PatternKind::kSinusoid;
  if (name == "random-texture") return PatternKind::kRandomTexture;
  throw InvalidArgument("unknown pattern kind '" + std::string(name) + "'");
}

std::string_view to_string(PatternKind kind) {
  switch (kind) {
    case PatternKind::kCheckerboard: return "checkerboard";
    case PatternKind::kSinusoid: return "sinusoid";
    case PatternKind::kRandomTexture: return "random-texture";
  }
  return "?";
}

namespace {

double smoothstep(double a) { return a * a * (3.0 - 2.0 * a); }

// Periodic value noise: random lattice values every `period` pixels, blended
// with a C1 smoothstep so the texture has no flat or discontinuous regions.
void render_random_texture(const PatternSpec& p, VideoClip& out) {
  const std::size_t h = out.height(), w = out.width(), m = out.channels();
  const auto cells = [&](std::size_t extent) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(extent / p.period)));
  };
  const std::size_t lx = cells(w), ly = cells(h);
  Rng rng(p.seed);
  std::vector<double> lattice(lx * ly * m);
  for (double& v : lattice) v = rng.unit();

  for (std::size_t row = 0; row < h; ++row) {
    const double u = static_cast<double>(row) * ly / h;
    const auto r0 = static_cast<std::size_t>(u) % ly;
    const auto r1 = (r0 + 1) % ly;
    const double wr = smoothstep(u - std::floor(u));
    for (std::size_t col = 0; col < w; ++col) {
      const double s = static_cast<double>(col) * lx / w;
      const auto c0 = static_cast<std::size_t>(s) % lx;
      const auto c1 = (c0 + 1) % lx;
      const double wc = smoothstep(s - std::floor(s));
      for (std::size_t j = 0; j < m; ++j) {
        const auto at = [&](std::size_t r, std::size_t c) { return lattice[(r * lx + c) * m + j]; };
        const double top = (1 - wc) * at(r0, c0) + wc * at(r0, c1);
        const double bottom = (1 - wc) * at(r1, c0) + wc * at(r1, c1);
        out(0, row, col, j) = (1 - wr) * top + wr * bottom;
      }
    }
  }
}

}  // namespace

VideoClip render_pattern(const PatternSpec& p, std::size_t height, std::size_t width) {
  if (!(p.period >= 2.0)) throw InvalidArgument("pattern period must be >= 2");
  if (p.channels == 0) throw InvalidArgument("pattern needs at least one channel");
  if (height == 0 || width == 0) throw InvalidArgument("zero-sized retina");

  VideoClip out(Shape{1, height, width, p.channels});
  if (p.kind == PatternKind::kRandomTexture) {
    render_random_texture(p, out);
    return out;
  }
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t row = 0; row < height; ++row) {
    for (std::size_t col = 0; col < width; ++col) {
      for (std::size_t j = 0; j < p.channels; ++j) {
        double v = 0.0;
        if (p.kind == PatternKind::kCheckerboard) {
          const auto cx = static_cast<long long>(std::floor(2.0 * col / p.period));
          const auto cy = static_cast<long long>(std::floor(2.0 * row / p.period));
          v = static_cast<double>((cx + cy) % 2);
          if (j % 2 == 1) v = 1.0 - v;
        } else {
          const double phase = two_pi * static_cast<double>(j) / 3.0;
          v = 0.5 + 0.25 * std::sin(two_pi * col / p.period + phase) +
              0.25 * std::sin(two_pi * row / p.period + phase);
        }
        out(0, row, col, j) = v;
      }
    }
  }
  return out;
}

std::pair<VideoClip, VelocityField> synth_translating_clip(const PatternSpec& pattern,
                                                           const Vec2& velocity,
                                                           std::size_t frames,
                                                           std::size_t height,
                                                           std::size_t width) {
  if (frames < 2) throw InvalidArgument("a clip needs at least 2 frames");
  if (height == 0 || width == 0) throw InvalidArgument("zero-sized retina");
  if (!std::isfinite(velocity[0]) || !std::isfinite(velocity[1]))
    throw InvalidArgument("velocity must be finite");
  const double limit = static_cast<double>(std::min(height, width)) / static_cast<double>(frames);
  if (std::abs(velocity[0]) >= limit || std::abs(velocity[1]) >= limit)
    throw InvalidArgument("velocity components must have magnitude < min(H,W)/T");

  const VideoClip base = render_pattern(pattern, height, width);
  VideoClip clip(Shape{frames, height, width, pattern.channels});
  for (std::size_t t = 0; t < frames; ++t) {
    const double dx = static_cast<double>(t) * velocity[0];
    const double dy = static_cast<double>(t) * velocity[1];
    for (std::size_t row = 0; row < height; ++row)
      for (std::size_t col = 0; col < width; ++col)
        for (std::size_t j = 0; j < pattern.channels; ++j)
          clip(t, row, col, j) = sample_bilinear(base, 0, col - dx, row - dy, j);
  }

  VelocityField flow(Shape{frames, height, width, 2});
  auto d = flow.data();
  for (std::size_t k = 0; k < d.size(); k += 2) {
    d[k] = velocity[0];
    d[k + 1] = velocity[1];
  }
  return {std::move(clip), std::move(flow)};
}

void validate_clip(const Grid& clip) {
  if (clip.frames() < 2) throw InvalidArgument("a clip needs at least 2 frames");
  if (clip.height() == 0 || clip.width() == 0 || clip.channels() == 0)
    throw InvalidArgument("zero-sized clip");
  for (double v : clip.data())
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("clip sample outside [0,1]");
}

// --- PGM / PPM ------------------------------------------------------------

namespace {

// Reads one header integer, skipping whitespace and '#' comments.
std::size_t read_header_int(std::istream& in, const std::filesystem::path& path) {
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (std::isspace(ch)) {
      ch = in.get();
    } else {
      break;
    }
  }
  if (ch == EOF || !std::isdigit(ch)) throw IoError(path.string() + ": malformed PNM header");
  std::size_t value = 0;
  while (ch != EOF && std::isdigit(ch)) {
    value = value * 10 + static_cast<std::size_t>(ch - '0');
    if (value > (1u << 24)) throw IoError(path.string() + ": PNM header value too large");
    ch = in.get();
  }
  // exactly one whitespace byte terminates the field
  if (ch == EOF || !std::isspace(ch)) throw IoError(path.string() + ": malformed PNM header");
  return value;
}

}  // namespace

Image read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open");
  char magic[2] = {};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6'))
    throw IoError(path.string() + ": not a binary PGM (P5) or PPM (P6) file");
  Image img;
  img.channels = magic[1] == '5' ? 1 : 3;
  img.width = read_header_int(in, path);
  img.height = read_header_int(in, path);
  const std::size_t maxval = read_header_int(in, path);
  if (maxval != 255) throw IoError(path.string() + ": only maxval 255 is supported");
  if (img.width == 0 || img.height == 0) throw IoError(path.string() + ": zero-sized image");
  img.pixels.resize(img.width * img.height * img.channels);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
    throw IoError(path.string() + ": truncated pixel data");
  return img;
}

void write_pnm(const std::filesystem::path& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3)
    throw InvalidArgument("PNM output needs 1 or 3 channels");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << (image.channels == 1 ? "P5" : "P6") << '\n'
      << image.width << ' ' << image.height << '\n'
      << 255 << '\n';
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) throw IoError(path.string() + ": write failed");
}

std::string expand_frame_pattern(std::string_view pattern, std::size_t t) {
  const auto pos = pattern.find("{t}");
  if (pos == std::string_view::npos)
    throw InvalidArgument("path pattern '" + std::string(pattern) + "' has no {t} placeholder");
  char digits[32];
  std::snprintf(digits, sizeof digits, "%04zu", t);
  std::string out(pattern.substr(0, pos));
  out += digits;
  out += pattern.substr(pos + 3);
  return out;
}

VideoClip load_image_sequence(std::string_view pattern) {
  std::vector<Image> frames;
  for (std::size_t t = 0;; ++t) {
    const std::filesystem::path path = expand_frame_pattern(pattern, t);
    if (!std::filesystem::exists(path)) {
      if (t == 0) throw IoError(path.string() + ": no such file");
      break;
    }
    Image img = read_pnm(path);
    if (!frames.empty()) {
      const Image& first = frames.front();
      if (img.channels != first.channels)
        throw IoError(path.string() + ": mixes PGM and PPM frames");
      if (img.width != first.width || img.height != first.height)
        throw IoError(path.string() + ": dimensions differ from frame 0");
    }
    frames.push_back(std::move(img));
  }
  if (frames.size() < 2)
    throw IoError(expand_frame_pattern(pattern, 1) + ": a clip needs at least 2 frames");

  const Image& f0 = frames.front();
  VideoClip clip(Shape{frames.size(), f0.height, f0.width, f0.channels});
  auto out = clip.data();
  std::size_t k = 0;
  for (const Image& img : frames)
    for (std::uint8_t b : img.pixels) out[k++] = b / 255.0;
  return clip;
}

std::uint8_t quantize(double v) noexcept {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(255.0 * c));
}

void save_image_sequence(const VideoClip& clip, std::string_view pattern) {
  Image img;
  img.height = clip.height();
  img.width = clip.width();
  img.channels = clip.channels();
  for (std::size_t t = 0; t < clip.frames(); ++t) {
    const auto src = clip.frame(t);
    img.pixels.resize(src.size());
    std::transform(src.begin(), src.end(), img.pixels.begin(), quantize);
    write_pnm(expand_frame_pattern(pattern, t), img);
  }
}

void save_feature_maps(const Grid& field, const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec || !std::filesystem::is_directory(directory))
    throw IoError(directory.string() + ": cannot create output directory");

  Image img;
  img.height = field.height();
  img.width = field.width();
  img.channels = 1;
  img.pixels.resize(img.height * img.width);
  for (std::size_t i = 0; i < field.channels(); ++i) {
    for (std::size_t t = 0; t < field.frames(); ++t) {
      for (std::size_t row = 0; row < img.height; ++row)
        for (std::size_t col = 0; col < img.width; ++col)
          img.pixels[row * img.width + col] = quantize(field(t, row, col, i));
      const std::string name = "feat" + std::to_string(i) + "_t{t}.pgm";
      write_pnm(directory / expand_frame_pattern(name, t), img);
    }
  }
}

}  // namespace motinv

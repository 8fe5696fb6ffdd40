#include "motinv/flow.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "motinv/error.hpp"

namespace motinv {

VelocityField constant_flow(const Vec2& v, std::size_t frames, std::size_t height, std::size_t width) {
  if (!std::isfinite(v[0]) || !std::isfinite(v[1])) throw InvalidArgument("velocity must be finite");
  if (frames == 0 || height == 0 || width == 0) throw InvalidArgument("zero-sized flow field");
  VelocityField flow(Shape{frames, height, width, 2});
  auto d = flow.data();
  for (std::size_t k = 0; k < d.size(); k += 2) {
    d[k] = v[0];
    d[k + 1] = v[1];
  }
  return flow;
}

void check_flow_matches(const VelocityField& flow, const Shape& shape) {
  if (flow.channels() != 2 || !flow.shape().same_domain(shape))
    throw DimensionMismatch("flow field " + flow.shape().to_string() +
                            " does not cover the clip domain " + shape.to_string());
}

namespace {

// Channel mean, summed in sorted order so that permuting channels leaves
// the result bit-identical.
std::vector<double> luminance(const VideoClip& clip, std::size_t t) {
  const std::size_t m = clip.channels();
  const auto src = clip.frame(t);
  std::vector<double> out(clip.height() * clip.width());
  std::vector<double> px(m);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(k * m), m, px.begin());
    std::sort(px.begin(), px.end());
    double s = 0.0;
    for (double v : px) s += v;
    out[k] = s / static_cast<double>(m);
  }
  return out;
}

}  // namespace

VelocityField horn_schunck(const VideoClip& clip, double alpha, std::size_t iters) {
  if (!(alpha > 0.0)) throw InvalidArgument("Horn-Schunck alpha must be > 0");
  if (iters == 0) throw InvalidArgument("Horn-Schunck needs at least one iteration");
  if (clip.frames() < 2) throw InvalidArgument("flow estimation needs at least 2 frames");

  const std::size_t h = clip.height(), w = clip.width(), np = h * w;
  const auto at = [w](std::size_t row, std::size_t col) { return row * w + col; };
  const auto left = [w](std::size_t col) { return col == 0 ? w - 1 : col - 1; };
  const auto right = [w](std::size_t col) { return col + 1 == w ? 0 : col + 1; };
  const auto up = [h](std::size_t row) { return row == 0 ? h - 1 : row - 1; };
  const auto down = [h](std::size_t row) { return row + 1 == h ? 0 : row + 1; };
  const double alpha2 = alpha * alpha;

  VelocityField flow(Shape{clip.frames(), h, w, 2});
  std::vector<double> ix(np), iy(np), it(np), u(np), v(np), ubar(np), vbar(np);
  std::vector<double> lum1 = luminance(clip, 0);
  for (std::size_t t = 0; t + 1 < clip.frames(); ++t) {
    std::vector<double> lum2 = luminance(clip, t + 1);
    for (std::size_t row = 0; row < h; ++row) {
      for (std::size_t col = 0; col < w; ++col) {
        const std::size_t k = at(row, col);
        const auto dx = [&](const std::vector<double>& f) {
          return 0.5 * (f[at(row, right(col))] - f[at(row, left(col))]);
        };
        const auto dy = [&](const std::vector<double>& f) {
          return 0.5 * (f[at(down(row), col)] - f[at(up(row), col)]);
        };
        ix[k] = 0.5 * (dx(lum1) + dx(lum2));
        iy[k] = 0.5 * (dy(lum1) + dy(lum2));
        it[k] = lum2[k] - lum1[k];
      }
    }
    std::fill(u.begin(), u.end(), 0.0);
    std::fill(v.begin(), v.end(), 0.0);
    for (std::size_t iter = 0; iter < iters; ++iter) {
      for (std::size_t row = 0; row < h; ++row) {
        for (std::size_t col = 0; col < w; ++col) {
          const std::size_t k = at(row, col);
          const std::size_t l = at(row, left(col)), r = at(row, right(col));
          const std::size_t a = at(up(row), col), b = at(down(row), col);
          ubar[k] = 0.25 * (u[l] + u[r] + u[a] + u[b]);
          vbar[k] = 0.25 * (v[l] + v[r] + v[a] + v[b]);
        }
      }
      for (std::size_t k = 0; k < np; ++k) {
        const double common =
            (ix[k] * ubar[k] + iy[k] * vbar[k] + it[k]) / (alpha2 + ix[k] * ix[k] + iy[k] * iy[k]);
        u[k] = ubar[k] - ix[k] * common;
        v[k] = vbar[k] - iy[k] * common;
      }
    }
    for (std::size_t row = 0; row < h; ++row) {
      for (std::size_t col = 0; col < w; ++col) {
        flow(t, row, col, 0) = u[at(row, col)];
        flow(t, row, col, 1) = v[at(row, col)];
      }
    }
    lum1 = std::move(lum2);
  }
  const std::size_t last = clip.frames() - 1;
  for (std::size_t row = 0; row < h; ++row)
    for (std::size_t col = 0; col < w; ++col)
      for (std::size_t c = 0; c < 2; ++c) flow(last, row, col, c) = flow(last - 1, row, col, c);
  return flow;
}

namespace {

std::uint64_t to_little_endian(std::uint64_t x) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(x);
  return x;
}

}  // namespace

void write_flow(const std::filesystem::path& path, const VelocityField& flow) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << "FLOW v1 " << flow.frames() << ' ' << flow.height() << ' ' << flow.width() << '\n';
  for (double d : flow.data()) {
    const std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(d));
    out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  if (!out) throw IoError(path.string() + ": write failed");
}

VelocityField read_flow(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open");
  std::string header;
  if (!std::getline(in, header)) throw IoError(path.string() + ": empty flow file");
  std::istringstream hs(header);
  std::string magic, version;
  std::size_t t = 0, h = 0, w = 0;
  if (!(hs >> magic >> version >> t >> h >> w) || magic != "FLOW" || version != "v1")
    throw IoError(path.string() + ": bad flow header '" + header + "'");
  VelocityField flow(Shape{t, h, w, 2});
  for (double& d : flow.data()) {
    std::uint64_t bits = 0;
    in.read(reinterpret_cast<char*>(&bits), sizeof bits);
    if (!in) throw IoError(path.string() + ": truncated flow data");
    d = std::bit_cast<double>(to_little_endian(bits));
    if (!std::isfinite(d)) throw IoError(path.string() + ": non-finite flow sample");
  }
  return flow;
}

}  // namespace motinv

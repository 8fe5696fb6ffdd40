#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace motinv {

// Extents of a dense (frames, rows, columns, channels) sample grid.
struct Shape {
  std::size_t frames = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;

  std::size_t size() const noexcept { return frames * height * width * channels; }
  std::size_t pixels() const noexcept { return height * width; }
  bool same_domain(const Shape& o) const noexcept {
    return frames == o.frames && height == o.height && width == o.width;
  }
  bool operator==(const Shape&) const = default;
  std::string to_string() const;
};

// Row-major (t, row, col, channel) storage. The retina coordinate x1 is the
// column index and x2 the row index, origin at the top-left pixel.
class Grid {
 public:
  Grid() = default;
  explicit Grid(Shape shape, double fill = 0.0) : shape_(shape), data_(shape.size(), fill) {}
  Grid(Shape shape, std::vector<double> data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t frames() const noexcept { return shape_.frames; }
  std::size_t height() const noexcept { return shape_.height; }
  std::size_t width() const noexcept { return shape_.width; }
  std::size_t channels() const noexcept { return shape_.channels; }

  std::size_t index(std::size_t t, std::size_t row, std::size_t col, std::size_t c) const noexcept {
    return ((t * shape_.height + row) * shape_.width + col) * shape_.channels + c;
  }
  double& operator()(std::size_t t, std::size_t row, std::size_t col, std::size_t c) noexcept {
    return data_[index(t, row, col, c)];
  }
  double operator()(std::size_t t, std::size_t row, std::size_t col, std::size_t c) const noexcept {
    return data_[index(t, row, col, c)];
  }

  // Contiguous samples of frame t.
  std::span<const double> frame(std::size_t t) const noexcept {
    const std::size_t n = shape_.height * shape_.width * shape_.channels;
    return {data_.data() + t * n, n};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

 private:
  Shape shape_{};
  std::vector<double> data_;
};

// Strongly typed views of a Grid. The tag only distinguishes roles at
// compile time; all share the same storage layout.
template <class Tag>
class Field : public Grid {
 public:
  Field() = default;
  explicit Field(Shape shape, double fill = 0.0) : Grid(shape, fill) {}
  Field(Shape shape, std::vector<double> data) : Grid(shape, std::move(data)) {}
  explicit Field(Grid g) : Grid(std::move(g)) {}
};

struct ClipTag {};
struct VelocityTag {};
struct ActivationTag {};
struct FeatureTag {};

// The color field C_j(x,t); samples in [0,1].
using VideoClip = Field<ClipTag>;
// Per-pixel (v1, v2) in pixels/frame; channels() == 2.
using VelocityField = Field<VelocityTag>;
// Raw feature-map activations before the probabilistic constraints.
using ActivationField = Field<ActivationTag>;
// Per-pixel probability vector over the n symbols.
using FeatureField = Field<FeatureTag>;

// Wraps an integer coordinate onto [0, extent).
inline std::size_t wrap(long long v, std::size_t extent) noexcept {
  const long long e = static_cast<long long>(extent);
  long long r = v % e;
  return static_cast<std::size_t>(r < 0 ? r + e : r);
}

// Bilinear sample of channel c of frame t at real position (col, row),
// toroidal boundary.
double sample_bilinear(const Grid& g, std::size_t t, double col, double row, std::size_t c) noexcept;

}  // namespace motinv

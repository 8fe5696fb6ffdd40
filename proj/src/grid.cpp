#include "motinv/grid.hpp"

#include <cmath>

#include "motinv/error.hpp"

namespace motinv {

std::string Shape::to_string() const {
  return "(T=" + std::to_string(frames) + ", H=" + std::to_string(height) +
         ", W=" + std::to_string(width) + ", C=" + std::to_string(channels) + ")";
}

Grid::Grid(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.size())
    throw DimensionMismatch("grid data holds " + std::to_string(data_.size()) +
                            " samples, shape " + shape_.to_string() + " needs " +
                            std::to_string(shape_.size()));
}

double sample_bilinear(const Grid& g, std::size_t t, double col, double row, std::size_t c) noexcept {
  const double fc = std::floor(col);
  const double fr = std::floor(row);
  const double ac = col - fc;
  const double ar = row - fr;
  const auto c0 = wrap(static_cast<long long>(fc), g.width());
  const auto c1 = wrap(static_cast<long long>(fc) + 1, g.width());
  const auto r0 = wrap(static_cast<long long>(fr), g.height());
  const auto r1 = wrap(static_cast<long long>(fr) + 1, g.height());
  const double top = (1.0 - ac) * g(t, r0, c0, c) + ac * g(t, r0, c1, c);
  const double bottom = (1.0 - ac) * g(t, r1, c0, c) + ac * g(t, r1, c1, c);
  return (1.0 - ar) * top + ar * bottom;
}

}  // namespace motinv

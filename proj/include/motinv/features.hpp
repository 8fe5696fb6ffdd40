#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "motinv/grid.hpp"

namespace motinv {

// How the probabilistic constraints (normalization, positivity) are enforced
// on the activations.
enum class ConstraintMode {
  kSoftmax,        // p = softmax(a); simplex holds by construction
  kLinearPenalty,  // p = a; constraint violations are penalized in the action
};

ConstraintMode parse_constraint_mode(std::string_view name);
std::string_view to_string(ConstraintMode mode);

// Floor used when projecting linear-penalty activations onto the simplex.
inline constexpr double kProjectionFloor = 1e-6;

// Translation-invariant filters phi_ij(a, b): n outputs x m inputs x K x K
// taps, offsets a (along x1 / columns) and b (along x2 / rows) in
// [-(K-1)/2, (K-1)/2]. Taps are stored in (i, j, a, b) lexicographic order.
class FilterBank {
 public:
  FilterBank(std::size_t n, std::size_t inputs, std::size_t kernel, ConstraintMode mode,
             std::size_t layer = 1);
  FilterBank(std::size_t n, std::size_t inputs, std::size_t kernel, ConstraintMode mode,
             std::size_t layer, std::vector<double> taps);

  std::size_t outputs() const noexcept { return n_; }
  std::size_t inputs() const noexcept { return m_; }
  std::size_t kernel() const noexcept { return k_; }
  int radius() const noexcept { return static_cast<int>(k_ / 2); }
  ConstraintMode mode() const noexcept { return mode_; }
  std::size_t layer() const noexcept { return layer_; }

  std::size_t index(std::size_t i, std::size_t j, int a, int b) const noexcept {
    const int r = radius();
    return ((i * m_ + j) * k_ + static_cast<std::size_t>(a + r)) * k_ + static_cast<std::size_t>(b + r);
  }
  double& tap(std::size_t i, std::size_t j, int a, int b) noexcept { return taps_[index(i, j, a, b)]; }
  double tap(std::size_t i, std::size_t j, int a, int b) const noexcept { return taps_[index(i, j, a, b)]; }

  std::span<double> taps() noexcept { return taps_; }
  std::span<const double> taps() const noexcept { return taps_; }

  // Same dimensions, mode and layer.
  bool same_layout(const FilterBank& o) const noexcept {
    return n_ == o.n_ && m_ == o.m_ && k_ == o.k_ && mode_ == o.mode_;
  }
  bool operator==(const FilterBank&) const = default;

 private:
  std::size_t n_, m_, k_;
  ConstraintMode mode_;
  std::size_t layer_;
  std::vector<double> taps_;
};

// a_i(x,t) = 1/n + sum_j sum_(a,b) phi_ij(a,b) C_j(x - (a,b), t), wrap-around.
// `input` is a clip (layer 1) or the previous layer's feature field.
ActivationField convolve_features(const FilterBank& bank, const Grid& input);

// Adjoint of convolve_features with respect to the taps:
// g(i,j,a,b) = sum_(t,x) upstream_i(x,t) C_j(x - (a,b), t).
std::vector<double> tap_gradient(const FilterBank& bank, const Grid& input, const Grid& upstream);

// Unrestricted kernel phi_ij(x, y) over a small retina, stored as
// table[((i * m + j) * P + x) * P + y] with P = H*W pixel indices (row-major).
struct DenseKernel {
  std::size_t n = 0, m = 0, height = 0, width = 0;
  std::vector<double> table;
};

inline constexpr std::size_t kDenseKernelMaxSide = 8;

// Embeds a translation-invariant bank into a dense table on an H x W torus.
DenseKernel dense_from_bank(const FilterBank& bank, std::size_t height, std::size_t width);

// a_i(x,t) = 1/n + sum_j sum_y phi_ij(x,y) C_j(y,t). Cost O((HW)^2); the
// retina is limited to 8 x 8.
ActivationField dense_kernel_oracle(const DenseKernel& kernel, const Grid& input);

// Softmax (max-subtracted) or clamp-to-[eps,1] and renormalize.
FeatureField to_probabilities(const ActivationField& act, ConstraintMode mode);

// Layer z consumes layer z-1's feature field; layer 1 consumes the clip.
std::vector<FeatureField> stack_layers(std::span<const FilterBank> banks, const Grid& clip);

// Text format: header "n m K mode layer", then one tap per line in
// (i,j,a,b) order, printed with 17 significant digits.
void write_bank(std::ostream& out, const FilterBank& bank);
FilterBank read_bank(std::istream& in, std::string_view source = "<stream>");
void save_bank(const std::filesystem::path& path, const FilterBank& bank);
FilterBank load_bank(const std::filesystem::path& path);

}  // namespace motinv

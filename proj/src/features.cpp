#include "motinv/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "motinv/error.hpp"

namespace motinv {

ConstraintMode parse_constraint_mode(std::string_view name) {
  if (name == "softmax") return ConstraintMode::kSoftmax;
  if (name == "linear-penalty") return ConstraintMode::kLinearPenalty;
  throw InvalidArgument("unknown constraint mode '" + std::string(name) + "'");
}

std::string_view to_string(ConstraintMode mode) {
  return mode == ConstraintMode::kSoftmax ? "softmax" : "linear-penalty";
}

FilterBank::FilterBank(std::size_t n, std::size_t inputs, std::size_t kernel, ConstraintMode mode,
                       std::size_t layer)
    : FilterBank(n, inputs, kernel, mode, layer, std::vector<double>(n * inputs * kernel * kernel, 0.0)) {}

FilterBank::FilterBank(std::size_t n, std::size_t inputs, std::size_t kernel, ConstraintMode mode,
                       std::size_t layer, std::vector<double> taps)
    : n_(n), m_(inputs), k_(kernel), mode_(mode), layer_(layer), taps_(std::move(taps)) {
  if (n_ < 2) throw InvalidArgument("a filter bank needs n >= 2 output symbols");
  if (m_ == 0) throw InvalidArgument("a filter bank needs at least one input channel");
  if (k_ == 0 || k_ % 2 == 0) throw InvalidArgument("kernel side K must be odd");
  if (layer_ == 0) throw InvalidArgument("layer index starts at 1");
  if (taps_.size() != n_ * m_ * k_ * k_)
    throw DimensionMismatch("filter bank expects " + std::to_string(n_ * m_ * k_ * k_) +
                            " taps, got " + std::to_string(taps_.size()));
  for (double v : taps_)
    if (!std::isfinite(v)) throw InvalidArgument("filter taps must be finite");
}

namespace {

void check_input(const FilterBank& bank, const Grid& input) {
  if (input.channels() != bank.inputs())
    throw DimensionMismatch("layer " + std::to_string(bank.layer()) + " bank expects " +
                            std::to_string(bank.inputs()) + " input channels, input has " +
                            std::to_string(input.channels()));
}

}  // namespace

ActivationField convolve_features(const FilterBank& bank, const Grid& input) {
  check_input(bank, input);
  const std::size_t n = bank.outputs(), m = bank.inputs();
  const std::size_t h = input.height(), w = input.width();
  const int r = bank.radius();
  const double bias = 1.0 / static_cast<double>(n);
  ActivationField act(Shape{input.frames(), h, w, n});

  for (std::size_t t = 0; t < input.frames(); ++t) {
    for (std::size_t row = 0; row < h; ++row) {
      for (std::size_t col = 0; col < w; ++col) {
        for (std::size_t i = 0; i < n; ++i) {
          double s = 0.0;
          for (std::size_t j = 0; j < m; ++j) {
            for (int a = -r; a <= r; ++a) {
              const std::size_t src_col = wrap(static_cast<long long>(col) - a, w);
              for (int b = -r; b <= r; ++b) {
                const std::size_t src_row = wrap(static_cast<long long>(row) - b, h);
                s += bank.tap(i, j, a, b) * input(t, src_row, src_col, j);
              }
            }
          }
          act(t, row, col, i) = bias + s;
        }
      }
    }
  }
  return act;
}

std::vector<double> tap_gradient(const FilterBank& bank, const Grid& input, const Grid& upstream) {
  check_input(bank, input);
  if (upstream.channels() != bank.outputs() || !upstream.shape().same_domain(input.shape()))
    throw DimensionMismatch("upstream gradient " + upstream.shape().to_string() +
                            " does not match the layer input " + input.shape().to_string());
  const std::size_t n = bank.outputs(), m = bank.inputs();
  const std::size_t h = input.height(), w = input.width();
  const int r = bank.radius();
  std::vector<double> g(bank.taps().size(), 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      for (int a = -r; a <= r; ++a) {
        for (int b = -r; b <= r; ++b) {
          double s = 0.0;
          for (std::size_t t = 0; t < input.frames(); ++t) {
            for (std::size_t row = 0; row < h; ++row) {
              const std::size_t src_row = wrap(static_cast<long long>(row) - b, h);
              for (std::size_t col = 0; col < w; ++col) {
                const std::size_t src_col = wrap(static_cast<long long>(col) - a, w);
                s += upstream(t, row, col, i) * input(t, src_row, src_col, j);
              }
            }
          }
          g[bank.index(i, j, a, b)] = s;
        }
      }
    }
  }
  return g;
}

DenseKernel dense_from_bank(const FilterBank& bank, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0 || height > kDenseKernelMaxSide || width > kDenseKernelMaxSide)
    throw InvalidArgument("dense kernels are limited to retinas of at most 8 x 8");
  DenseKernel k{bank.outputs(), bank.inputs(), height, width, {}};
  const std::size_t p = height * width;
  k.table.assign(k.n * k.m * p * p, 0.0);
  const int r = bank.radius();
  for (std::size_t i = 0; i < k.n; ++i)
    for (std::size_t j = 0; j < k.m; ++j)
      for (std::size_t row = 0; row < height; ++row)
        for (std::size_t col = 0; col < width; ++col)
          for (int a = -r; a <= r; ++a)
            for (int b = -r; b <= r; ++b) {
              const std::size_t x = row * width + col;
              const std::size_t y = wrap(static_cast<long long>(row) - b, height) * width +
                                    wrap(static_cast<long long>(col) - a, width);
              k.table[((i * k.m + j) * p + x) * p + y] += bank.tap(i, j, a, b);
            }
  return k;
}

ActivationField dense_kernel_oracle(const DenseKernel& kernel, const Grid& input) {
  if (kernel.height > kDenseKernelMaxSide || kernel.width > kDenseKernelMaxSide)
    throw InvalidArgument("dense kernels are limited to retinas of at most 8 x 8");
  if (input.height() != kernel.height || input.width() != kernel.width || input.channels() != kernel.m)
    throw DimensionMismatch("dense kernel does not match input " + input.shape().to_string());
  const std::size_t p = kernel.height * kernel.width;
  if (kernel.table.size() != kernel.n * kernel.m * p * p)
    throw DimensionMismatch("dense kernel table has the wrong size");

  ActivationField act(Shape{input.frames(), kernel.height, kernel.width, kernel.n});
  const double bias = 1.0 / static_cast<double>(kernel.n);
  for (std::size_t t = 0; t < input.frames(); ++t) {
    const auto frame = input.frame(t);
    for (std::size_t x = 0; x < p; ++x) {
      for (std::size_t i = 0; i < kernel.n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < kernel.m; ++j)
          for (std::size_t y = 0; y < p; ++y)
            s += kernel.table[((i * kernel.m + j) * p + x) * p + y] * frame[y * kernel.m + j];
        act.data()[(t * p + x) * kernel.n + i] = bias + s;
      }
    }
  }
  return act;
}

FeatureField to_probabilities(const ActivationField& act, ConstraintMode mode) {
  const std::size_t n = act.channels();
  FeatureField p(act.shape());
  const auto src = act.data();
  auto dst = p.data();
  for (std::size_t base = 0; base < src.size(); base += n) {
    const auto a = src.subspan(base, n);
    const auto q = dst.subspan(base, n);
    for (double v : a)
      if (!std::isfinite(v)) throw InvalidArgument("non-finite activation");
    double total = 0.0;
    if (mode == ConstraintMode::kSoftmax) {
      const double peak = *std::max_element(a.begin(), a.end());
      for (std::size_t i = 0; i < n; ++i) total += (q[i] = std::exp(a[i] - peak));
    } else {
      for (std::size_t i = 0; i < n; ++i) total += (q[i] = std::clamp(a[i], kProjectionFloor, 1.0));
    }
    for (double& v : q) v /= total;
  }
  return p;
}

std::vector<FeatureField> stack_layers(std::span<const FilterBank> banks, const Grid& clip) {
  std::vector<FeatureField> fields;
  fields.reserve(banks.size());
  for (std::size_t z = 0; z < banks.size(); ++z) {
    const Grid& input = z == 0 ? clip : static_cast<const Grid&>(fields.back());
    if (banks[z].inputs() != input.channels())
      throw DimensionMismatch("layer " + std::to_string(z + 1) + " bank expects " +
                              std::to_string(banks[z].inputs()) + " input channels, " +
                              (z == 0 ? std::string("clip") : "layer " + std::to_string(z)) +
                              " provides " + std::to_string(input.channels()));
    fields.push_back(to_probabilities(convolve_features(banks[z], input), banks[z].mode()));
  }
  return fields;
}

void write_bank(std::ostream& out, const FilterBank& bank) {
  out << bank.outputs() << ' ' << bank.inputs() << ' ' << bank.kernel() << ' '
      << to_string(bank.mode()) << ' ' << bank.layer() << '\n';
  char buf[64];
  for (double v : bank.taps()) {
    std::snprintf(buf, sizeof buf, "%.17g\n", v);
    out << buf;
  }
}

FilterBank read_bank(std::istream& in, std::string_view source) {
  const auto fail = [&](const std::string& what) {
    return IoError(std::string(source) + ": " + what);
  };
  std::string header;
  if (!std::getline(in, header)) throw fail("empty filter bank file");
  std::istringstream hs(header);
  std::size_t n = 0, m = 0, k = 0, layer = 0;
  std::string mode;
  if (!(hs >> n >> m >> k >> mode >> layer))
    throw fail("bad header '" + header + "', expected 'n m K mode layer'");
  std::vector<double> taps;
  taps.reserve(n * m * k * k);
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    if (ec != std::errc{} || ptr != line.data() + line.size())
      throw fail("line " + std::to_string(lineno) + ": not a number '" + line + "'");
    taps.push_back(v);
  }
  try {
    return FilterBank(n, m, k, parse_constraint_mode(mode), layer, std::move(taps));
  } catch (const Error& e) {
    throw fail(e.what());
  }
}

void save_bank(const std::filesystem::path& path, const FilterBank& bank) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  write_bank(out, bank);
  if (!out) throw IoError(path.string() + ": write failed");
}

FilterBank load_bank(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string() + ": cannot open");
  return read_bank(in, path.string());
}

}  // namespace motinv

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "motinv/action.hpp"
#include "motinv/features.hpp"
#include "motinv/grid.hpp"

namespace motinv {

// Choice of h(t) over a window of frames.
struct Weighting {
  enum class Kind { kUniform, kExponential };
  Kind kind = Kind::kUniform;
  double gamma = 0.9;  // exponential discount

  TemporalWeights over(std::size_t frames) const;
};

struct TrainConfig {
  double eta = 0.1;                // step size
  std::size_t steps = 100;
  std::optional<double> dtau;      // defaults to eta
  Multipliers lambda;
  MotionScheme scheme = MotionScheme::kTransport;
  Weighting weighting;
  std::size_t window = 0;          // leading frames used for training; 0 = all
  std::uint64_t seed = 1;
  double init_scale = 0.1;

  double step_length() const { return dtau.value_or(eta); }
  ActionSettings settings() const { return {lambda, step_length(), scheme}; }
};

struct TrainTrace {
  std::vector<ActionBreakdown> steps;  // evaluated before each update
  std::vector<double> gradient_max_norm;
  FilterBank final_bank;
};

// Taps i.i.d. uniform on [-scale, scale] drawn from Rng(seed).
FilterBank init_bank(std::size_t n, std::size_t inputs, std::size_t kernel, ConstraintMode mode,
                     std::uint64_t seed, double scale, std::size_t layer = 1);

// First `count` frames of a grid.
Grid leading_frames(const Grid& g, std::size_t count);

// Plain gradient descent: bank <- bank - eta * dA/dtaps, with the previous
// iterate feeding the temporal parsimony term. Throws Diverged when the action
// or gradient stops being finite.
TrainTrace train_layer(const FilterBank& bank, const Grid& input, const VelocityField& v,
                       const TrainConfig& config);

struct LayerSpec {
  std::size_t n = 4;
  std::size_t kernel = 3;
  ConstraintMode mode = ConstraintMode::kSoftmax;
  TrainConfig train;
};

// Greedy layer-wise training: layer z starts from init_bank(seed of its
// config) and trains on the feature field of the frozen layer z-1.
std::vector<TrainTrace> train_deep(const Grid& clip, const VelocityField& v, std::span<const LayerSpec> layers);

// The starting bank train_deep uses for a layer.
FilterBank initial_bank(const LayerSpec& spec, std::size_t inputs, std::size_t layer);

// Action of a frozen bank (bank_prev = bank, so K = 0) over the training
// window of `config`.
ActionBreakdown evaluate_frozen(const FilterBank& bank, const Grid& input, const VelocityField& v,
                                const TrainConfig& config);

// Central differences of the action, one tap at a time.
std::vector<double> finite_diff_gradient(const FilterBank& bank, const FilterBank& prev, const Grid& input,
                                         const VelocityField& v, const TemporalWeights& w,
                                         const ActionSettings& settings, double eps);

}  // namespace motinv

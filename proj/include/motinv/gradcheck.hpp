#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "motinv/action.hpp"
#include "motinv/features.hpp"
#include "motinv/grid.hpp"

namespace motinv {

// A randomized action instance used to compare the analytic gradient with
// central differences.
struct GradientInstance {
  std::string label;
  FilterBank bank;
  FilterBank prev;
  Grid input;
  VelocityField flow;
  TemporalWeights weights;
  ActionSettings settings;
};

// Instance `index` of the suite seeded by `seed`: retina at most 8 x 8,
// T in [2, 6], n in [2, 4], K = 3. Even indices use softmax, odd ones the
// linear-penalty mode; the motion scheme alternates every two instances.
GradientInstance make_gradient_instance(std::uint64_t seed, std::size_t index);

// Which multipliers are active: all of them, or a single term next to -I.
enum class TermSelection { kAll, kInformation, kMotion, kSpatial, kTemporal, kConstraint };
std::string_view to_string(TermSelection term);
ActionSettings select_terms(const ActionSettings& settings, TermSelection term);

// max_k |analytic_k - numeric_k| / (1 + |analytic_k|)
double gradient_relative_error(std::span<const double> analytic, std::span<const double> numeric);

struct GradientCheckResult {
  std::string label;
  TermSelection term;
  double max_relative_error;
};

struct GradientCheckReport {
  std::vector<GradientCheckResult> results;
  double max_relative_error = 0.0;
};

// Every instance is checked with all terms jointly and with each term alone.
GradientCheckReport run_gradient_suite(std::uint64_t seed, std::size_t instances, double eps);

}  // namespace motinv

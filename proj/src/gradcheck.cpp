#include "motinv/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "motinv/error.hpp"
#include "motinv/optimizer.hpp"
#include "motinv/rng.hpp"

namespace motinv {

namespace {

// Central differences need every activation clear of the clamp kinks, and
// unclamped ones clear of the floor where p ln p has huge higher derivatives.
bool well_conditioned(const ActivationField& act) {
  for (double a : act.data()) {
    const bool clamped_low = a < kProjectionFloor - 1e-4;
    const bool interior = a > 1e-2 && a < 1.0 - 1e-4;
    const bool clamped_high = a > 1.0 + 1e-4;
    if (!(clamped_low || interior || clamped_high)) return false;
  }
  return true;
}

GradientInstance draw_instance(Rng& rng, std::size_t index) {
  const auto pick = [&](std::size_t lo, std::size_t hi) { return lo + rng.bits() % (hi - lo + 1); };
  const std::size_t h = pick(3, 8), w = pick(3, 8), frames = pick(2, 6);
  const std::size_t n = pick(2, 4), m = pick(1, 3);
  const ConstraintMode mode = index % 2 == 0 ? ConstraintMode::kSoftmax : ConstraintMode::kLinearPenalty;
  const MotionScheme scheme = (index / 2) % 2 == 0 ? MotionScheme::kTransport : MotionScheme::kEulerian;

  Grid input(Shape{frames, h, w, m});
  for (double& v : input.data()) v = rng.unit();
  VelocityField flow(Shape{frames, h, w, 2});
  for (double& v : flow.data()) v = rng.uniform(-1.5, 1.5);
  std::vector<double> hweights(frames);
  for (double& v : hweights) v = rng.uniform(0.2, 1.0);

  const double scale = mode == ConstraintMode::kSoftmax ? 0.5 : 0.1;
  FilterBank bank(n, m, 3, mode);
  for (double& v : bank.taps()) v = rng.uniform(-scale, scale);
  FilterBank prev = bank;
  for (double& v : prev.taps()) v += rng.uniform(-0.05, 0.05);

  ActionSettings s;
  s.lambda = {rng.uniform(0.5, 2.0), rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0), rng.uniform(0.5, 2.0)};
  s.dtau = rng.uniform(0.5, 2.0);
  s.scheme = scheme;

  std::string label = "#" + std::to_string(index) + " " + std::to_string(frames) + "x" + std::to_string(h) +
                      "x" + std::to_string(w) + " n=" + std::to_string(n) + " m=" + std::to_string(m) + " " +
                      std::string(to_string(mode)) + "/" + std::string(to_string(scheme));
  return {std::move(label), std::move(bank),  std::move(prev), std::move(input),
          std::move(flow),  TemporalWeights(std::move(hweights)), s};
}

}  // namespace

GradientInstance make_gradient_instance(std::uint64_t seed, std::size_t index) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng(seed + 0x9E3779B97F4A7C15ull * (index + 1) + (attempt << 40));
    GradientInstance inst = draw_instance(rng, index);
    if (inst.bank.mode() == ConstraintMode::kSoftmax ||
        well_conditioned(convolve_features(inst.bank, inst.input)))
      return inst;
  }
}

std::string_view to_string(TermSelection term) {
  switch (term) {
    case TermSelection::kAll: return "all";
    case TermSelection::kInformation: return "information";
    case TermSelection::kMotion: return "motion";
    case TermSelection::kSpatial: return "spatial";
    case TermSelection::kTemporal: return "temporal";
    case TermSelection::kConstraint: return "constraint";
  }
  return "?";
}

ActionSettings select_terms(const ActionSettings& settings, TermSelection term) {
  if (term == TermSelection::kAll) return settings;
  ActionSettings s = settings;
  s.lambda = {};
  switch (term) {
    case TermSelection::kMotion: s.lambda.motion = settings.lambda.motion; break;
    case TermSelection::kSpatial: s.lambda.spatial = settings.lambda.spatial; break;
    case TermSelection::kTemporal: s.lambda.temporal = settings.lambda.temporal; break;
    case TermSelection::kConstraint: s.lambda.constraint = settings.lambda.constraint; break;
    default: break;
  }
  return s;
}

double gradient_relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  if (analytic.size() != numeric.size()) throw DimensionMismatch("gradient sizes differ");
  double worst = 0.0;
  for (std::size_t k = 0; k < analytic.size(); ++k)
    worst = std::max(worst, std::abs(analytic[k] - numeric[k]) / (1.0 + std::abs(analytic[k])));
  return worst;
}

GradientCheckReport run_gradient_suite(std::uint64_t seed, std::size_t instances, double eps) {
  GradientCheckReport report;
  for (std::size_t k = 0; k < instances; ++k) {
    const GradientInstance inst = make_gradient_instance(seed, k);
    std::vector<TermSelection> terms = {TermSelection::kAll, TermSelection::kInformation, TermSelection::kMotion,
                                        TermSelection::kSpatial, TermSelection::kTemporal};
    if (inst.bank.mode() == ConstraintMode::kLinearPenalty) terms.push_back(TermSelection::kConstraint);
    for (TermSelection term : terms) {
      const ActionSettings s = select_terms(inst.settings, term);
      const auto analytic = action_gradient(inst.bank, inst.prev, inst.input, inst.flow, inst.weights, s);
      const auto numeric = finite_diff_gradient(inst.bank, inst.prev, inst.input, inst.flow, inst.weights, s, eps);
      const double err = gradient_relative_error(analytic, numeric);
      report.results.push_back({inst.label, term, err});
      report.max_relative_error = std::max(report.max_relative_error, err);
    }
  }
  return report;
}

}  // namespace motinv

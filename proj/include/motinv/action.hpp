#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "motinv/features.hpp"
#include "motinv/grid.hpp"

namespace motinv {

// Per-frame factor h(t) of the space-time measure
//   dmu(x,t) = h(t) / (sum_t h(t) * H * W).
// Only ratios of h matter; the measure always integrates to one.
class TemporalWeights {
 public:
  explicit TemporalWeights(std::vector<double> h);
  static TemporalWeights uniform(std::size_t frames);
  // h(t) = gamma^(T-1-t): the most recent frame weighs most.
  static TemporalWeights exponential(std::size_t frames, double gamma);

  std::size_t frames() const noexcept { return h_.size(); }
  std::span<const double> values() const noexcept { return h_; }

  // Per-pixel measure of each frame over the full horizon.
  std::vector<double> measure(std::size_t pixels) const;
  // Same, renormalized over frames 0..T-2 (where a motion residual exists).
  std::vector<double> residual_measure(std::size_t pixels) const;

 private:
  std::vector<double> h_;
};

struct Multipliers {
  double motion = 0.0;      // lambda_M
  double spatial = 0.0;     // lambda_P
  double temporal = 0.0;    // lambda_K
  double constraint = 0.0;  // lambda_C, linear-penalty mode only
};

// Discretization of the transport condition d_t a + v . grad a = 0.
enum class MotionScheme {
  // r = a(x + v, t+1) - a(x, t), bilinear wrap-around sampling. Exact (zero)
  // for integer translations.
  kTransport,
  // r = a(t+1) - a(t) + v1 D1 a + v2 D2 a, central differences with wrap.
  kEulerian,
};

MotionScheme parse_motion_scheme(std::string_view name);
std::string_view to_string(MotionScheme scheme);

struct ActionBreakdown {
  double marginal_entropy = 0.0;     // S(Y)
  double conditional_entropy = 0.0;  // S(Y|X,T,F)
  double information = 0.0;          // I = S(Y) - S(Y|X,T,F)
  double motion = 0.0;               // M
  double spatial = 0.0;              // P
  double temporal = 0.0;             // K
  double constraint = 0.0;           // C_pen, 0 in softmax mode
  double action = 0.0;               // A
};

struct ActionSettings {
  Multipliers lambda;
  double dtau = 1.0;  // optimizer-step length used by the temporal parsimony term
  MotionScheme scheme = MotionScheme::kTransport;
};

// -sum dmu sum_i p_i ln p_i, with 0 ln 0 = 0.
double conditional_entropy(const FeatureField& field, const TemporalWeights& w);
// -sum_i q_i ln q_i with q_i = sum dmu p_i.
double marginal_entropy(const FeatureField& field, const TemporalWeights& w);
double information_index(const FeatureField& field, const TemporalWeights& w);

// Residual on frames 0..T-2; shape (T-1, H, W, n).
Grid motion_residual(const ActivationField& act, const VelocityField& v, MotionScheme scheme);
double motion_term(const ActivationField& act, const VelocityField& v, const TemporalWeights& w,
                   MotionScheme scheme);

// 1/2 sum of squared first differences between in-support neighbours of a
// rows x cols tap plane (no wrap across the kernel edge).
double tap_roughness(std::span<const double> plane, std::size_t rows, std::size_t cols);
double spatial_parsimony(const FilterBank& bank);
double temporal_parsimony(const FilterBank& now, const FilterBank& prev, double dtau);

// sum dmu [(sum_i a_i - 1)^2 + sum_i (max(0,-a_i)^2 + max(0,a_i-1)^2)]
double constraint_penalty(const ActivationField& act, const TemporalWeights& w);

ActionBreakdown cognitive_action(const FilterBank& bank, const FilterBank& prev, const Grid& input,
                                 const VelocityField& v, const TemporalWeights& w,
                                 const ActionSettings& settings);

// dA/dtaps, same layout as FilterBank::taps(). `prev` is held constant.
std::vector<double> action_gradient(const FilterBank& bank, const FilterBank& prev, const Grid& input,
                                    const VelocityField& v, const TemporalWeights& w,
                                    const ActionSettings& settings);

struct ActionEvaluation {
  ActionBreakdown breakdown;
  std::vector<double> gradient;
};

// Value and gradient sharing one forward pass.
ActionEvaluation evaluate_action(const FilterBank& bank, const FilterBank& prev, const Grid& input,
                                 const VelocityField& v, const TemporalWeights& w,
                                 const ActionSettings& settings);

// CSV row "step,S_Y,S_cond,I,M,P,K,C_pen,A" with 17 significant digits.
inline constexpr std::string_view kBreakdownCsvHeader = "step,S_Y,S_cond,I,M,P,K,C_pen,A";
std::string breakdown_csv_fields(const ActionBreakdown& b);
std::string breakdown_csv_row(long long step, const ActionBreakdown& b);
// Parses the eight value columns that follow any leading key columns.
ActionBreakdown parse_breakdown_fields(std::span<const std::string> fields);

}  // namespace motinv

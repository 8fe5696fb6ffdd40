#include "motinv/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "motinv/error.hpp"
#include "motinv/flow.hpp"
#include "motinv/rng.hpp"

namespace motinv {

TemporalWeights Weighting::over(std::size_t frames) const {
  return kind == Kind::kUniform ? TemporalWeights::uniform(frames)
                                : TemporalWeights::exponential(frames, gamma);
}

FilterBank init_bank(std::size_t n, std::size_t inputs, std::size_t kernel, ConstraintMode mode,
                     std::uint64_t seed, double scale, std::size_t layer) {
  if (!(scale >= 0.0) || !std::isfinite(scale)) throw InvalidArgument("init scale must be >= 0");
  FilterBank bank(n, inputs, kernel, mode, layer);
  Rng rng(seed);
  for (double& tap : bank.taps()) tap = rng.uniform(-scale, scale);
  return bank;
}

Grid leading_frames(const Grid& g, std::size_t count) {
  if (count > g.frames()) throw InvalidArgument("window exceeds the number of frames");
  Shape s = g.shape();
  s.frames = count;
  const auto src = g.data().first(s.size());
  return Grid(s, std::vector<double>(src.begin(), src.end()));
}

namespace {

void check_config(const TrainConfig& c, std::size_t frames) {
  if (!(c.eta > 0.0) || !std::isfinite(c.eta)) throw InvalidArgument("step size eta must be > 0");
  if (!(c.step_length() > 0.0)) throw InvalidArgument("dtau must be > 0");
  if (c.window > frames) throw InvalidArgument("training window longer than the clip");
  if (c.window == 1) throw InvalidArgument("training window needs at least 2 frames");
}

bool all_finite(const ActionBreakdown& b) {
  for (double v : {b.marginal_entropy, b.conditional_entropy, b.information, b.motion, b.spatial,
                   b.temporal, b.constraint, b.action})
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace

TrainTrace train_layer(const FilterBank& bank, const Grid& input, const VelocityField& v,
                       const TrainConfig& config) {
  check_config(config, input.frames());
  check_flow_matches(v, input.shape());
  const std::size_t frames = config.window == 0 ? input.frames() : config.window;
  const Grid window = frames == input.frames() ? input : leading_frames(input, frames);
  const VelocityField flow = frames == v.frames() ? v : VelocityField(leading_frames(v, frames));
  const TemporalWeights weights = config.weighting.over(frames);
  const ActionSettings settings = config.settings();

  TrainTrace trace{{}, {}, bank};
  trace.steps.reserve(config.steps);
  trace.gradient_max_norm.reserve(config.steps);
  FilterBank prev = bank;
  for (std::size_t step = 0; step < config.steps; ++step) {
    ActionEvaluation e = evaluate_action(trace.final_bank, prev, window, flow, weights, settings);
    double gmax = 0.0;
    for (double g : e.gradient) {
      if (!std::isfinite(g)) throw Diverged("non-finite gradient at step " + std::to_string(step), step);
      gmax = std::max(gmax, std::abs(g));
    }
    if (!all_finite(e.breakdown)) throw Diverged("non-finite action at step " + std::to_string(step), step);
    trace.steps.push_back(e.breakdown);
    trace.gradient_max_norm.push_back(gmax);

    prev = trace.final_bank;
    auto taps = trace.final_bank.taps();
    for (std::size_t k = 0; k < taps.size(); ++k) taps[k] -= config.eta * e.gradient[k];
  }
  return trace;
}

std::vector<TrainTrace> train_deep(const Grid& clip, const VelocityField& v, std::span<const LayerSpec> layers) {
  std::vector<TrainTrace> traces;
  traces.reserve(layers.size());
  Grid input = clip;
  for (std::size_t z = 0; z < layers.size(); ++z) {
    const LayerSpec& spec = layers[z];
    const std::string where = "layer " + std::to_string(z + 1) + ": ";
    try {
      const FilterBank start = initial_bank(spec, input.channels(), z + 1);
      traces.push_back(train_layer(start, input, v, spec.train));
    } catch (const Diverged& e) {
      throw Diverged(where + e.what(), e.step());
    } catch (const DimensionMismatch& e) {
      throw DimensionMismatch(where + e.what());
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(where + e.what());
    }
    if (z + 1 < layers.size()) {
      const FilterBank& frozen = traces.back().final_bank;
      input = to_probabilities(convolve_features(frozen, input), frozen.mode());
    }
  }
  return traces;
}

FilterBank initial_bank(const LayerSpec& spec, std::size_t inputs, std::size_t layer) {
  return init_bank(spec.n, inputs, spec.kernel, spec.mode, spec.train.seed, spec.train.init_scale, layer);
}

ActionBreakdown evaluate_frozen(const FilterBank& bank, const Grid& input, const VelocityField& v,
                                const TrainConfig& config) {
  check_config(config, input.frames());
  check_flow_matches(v, input.shape());
  const std::size_t frames = config.window == 0 ? input.frames() : config.window;
  if (frames == input.frames())
    return cognitive_action(bank, bank, input, v, config.weighting.over(frames), config.settings());
  return cognitive_action(bank, bank, leading_frames(input, frames), VelocityField(leading_frames(v, frames)),
                          config.weighting.over(frames), config.settings());
}

std::vector<double> finite_diff_gradient(const FilterBank& bank, const FilterBank& prev, const Grid& input,
                                         const VelocityField& v, const TemporalWeights& w,
                                         const ActionSettings& settings, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("finite-difference step must be > 0");
  std::vector<double> g(bank.taps().size());
  FilterBank probe = bank;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double saved = probe.taps()[k];
    probe.taps()[k] = saved + eps;
    const double up = cognitive_action(probe, prev, input, v, w, settings).action;
    probe.taps()[k] = saved - eps;
    const double down = cognitive_action(probe, prev, input, v, w, settings).action;
    probe.taps()[k] = saved;
    g[k] = (up - down) / (2.0 * eps);
  }
  return g;
}

}  // namespace motinv

#include "motinv/action.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "motinv/error.hpp"
#include "motinv/flow.hpp"

namespace motinv {

// --- measure --------------------------------------------------------------

TemporalWeights::TemporalWeights(std::vector<double> h) : h_(std::move(h)) {
  if (h_.empty()) throw InvalidArgument("temporal weights need at least one frame");
  double total = 0.0;
  for (double v : h_) {
    if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("temporal weights must be finite and >= 0");
    total += v;
  }
  if (!(total > 0.0)) throw InvalidArgument("temporal weights are all zero");
}

TemporalWeights TemporalWeights::uniform(std::size_t frames) {
  return TemporalWeights(std::vector<double>(frames, 1.0));
}

TemporalWeights TemporalWeights::exponential(std::size_t frames, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("discount gamma must be > 0");
  std::vector<double> h(frames);
  for (std::size_t t = 0; t < frames; ++t) h[t] = std::pow(gamma, static_cast<double>(frames - 1 - t));
  return TemporalWeights(std::move(h));
}

namespace {

std::vector<double> per_pixel(std::span<const double> h, std::size_t pixels, std::size_t count) {
  double total = 0.0;
  for (std::size_t t = 0; t < count; ++t) total += h[t];
  if (!(total > 0.0)) throw InvalidArgument("temporal weights vanish on every residual frame");
  std::vector<double> mu(count);
  for (std::size_t t = 0; t < count; ++t) mu[t] = h[t] / (total * static_cast<double>(pixels));
  return mu;
}

}  // namespace

std::vector<double> TemporalWeights::measure(std::size_t pixels) const {
  return per_pixel(h_, pixels, h_.size());
}

std::vector<double> TemporalWeights::residual_measure(std::size_t pixels) const {
  if (h_.size() < 2) throw InvalidArgument("a motion residual needs at least 2 frames");
  return per_pixel(h_, pixels, h_.size() - 1);
}

MotionScheme parse_motion_scheme(std::string_view name) {
  if (name == "transport") return MotionScheme::kTransport;
  if (name == "eulerian") return MotionScheme::kEulerian;
  throw InvalidArgument("unknown motion scheme '" + std::string(name) + "'");
}

std::string_view to_string(MotionScheme scheme) {
  return scheme == MotionScheme::kTransport ? "transport" : "eulerian";
}

// --- information terms ----------------------------------------------------

namespace {

double xlogx(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

void check_weights(const Grid& field, const TemporalWeights& w) {
  if (w.frames() != field.frames())
    throw DimensionMismatch("temporal weights cover " + std::to_string(w.frames()) +
                            " frames, field has " + std::to_string(field.frames()));
}

// q_i = sum_(t,x) dmu p_i(x,t); accumulated frame by frame.
std::vector<double> symbol_marginals(const FeatureField& field, const TemporalWeights& w) {
  check_weights(field, w);
  const std::size_t n = field.channels();
  const auto mu = w.measure(field.shape().pixels());
  std::vector<double> q(n, 0.0), frame_sum(n);
  for (std::size_t t = 0; t < field.frames(); ++t) {
    std::fill(frame_sum.begin(), frame_sum.end(), 0.0);
    const auto f = field.frame(t);
    for (std::size_t k = 0; k < f.size(); k += n)
      for (std::size_t i = 0; i < n; ++i) frame_sum[i] += f[k + i];
    for (std::size_t i = 0; i < n; ++i) q[i] += mu[t] * frame_sum[i];
  }
  const double total = std::accumulate(q.begin(), q.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9)
    throw InvalidArgument("feature field is not normalized: symbol marginals sum to " + std::to_string(total));
  return q;
}

}  // namespace

double conditional_entropy(const FeatureField& field, const TemporalWeights& w) {
  check_weights(field, w);
  const auto mu = w.measure(field.shape().pixels());
  double s = 0.0;
  for (std::size_t t = 0; t < field.frames(); ++t) {
    double frame_sum = 0.0;
    for (double p : field.frame(t)) frame_sum -= xlogx(p);
    s += mu[t] * frame_sum;
  }
  return s;
}

double marginal_entropy(const FeatureField& field, const TemporalWeights& w) {
  double s = 0.0;
  for (double q : symbol_marginals(field, w)) s -= xlogx(q);
  return s;
}

double information_index(const FeatureField& field, const TemporalWeights& w) {
  return marginal_entropy(field, w) - conditional_entropy(field, w);
}

// --- motion ---------------------------------------------------------------

namespace {

struct BilinearStencil {
  std::size_t row[4];
  std::size_t col[4];
  double weight[4];
};

BilinearStencil bilinear_stencil(double col, double row, std::size_t h, std::size_t w) {
  const double fc = std::floor(col), fr = std::floor(row);
  const double ac = col - fc, ar = row - fr;
  const auto c0 = wrap(static_cast<long long>(fc), w), c1 = wrap(static_cast<long long>(fc) + 1, w);
  const auto r0 = wrap(static_cast<long long>(fr), h), r1 = wrap(static_cast<long long>(fr) + 1, h);
  return {{r0, r0, r1, r1},
          {c0, c1, c0, c1},
          {(1 - ar) * (1 - ac), (1 - ar) * ac, ar * (1 - ac), ar * ac}};
}

void check_motion_inputs(const ActivationField& act, const VelocityField& v) {
  check_flow_matches(v, act.shape());
  if (act.frames() < 2) throw InvalidArgument("a motion residual needs at least 2 frames");
}

// Accumulates dM/da scaled by `scale` into `grad`, given the residual.
void motion_adjoint(const ActivationField& act, const VelocityField& v, const Grid& residual,
                    std::span<const double> mu, MotionScheme scheme, double scale, Grid& grad) {
  const std::size_t h = act.height(), w = act.width(), n = act.channels();
  for (std::size_t t = 0; t + 1 < act.frames(); ++t) {
    for (std::size_t row = 0; row < h; ++row) {
      for (std::size_t col = 0; col < w; ++col) {
        const double v1 = v(t, row, col, 0), v2 = v(t, row, col, 1);
        for (std::size_t i = 0; i < n; ++i) {
          const double c = scale * 2.0 * mu[t] * residual(t, row, col, i);
          grad(t, row, col, i) -= c;
          if (scheme == MotionScheme::kTransport) {
            const auto s = bilinear_stencil(col + v1, row + v2, h, w);
            for (int k = 0; k < 4; ++k) grad(t + 1, s.row[k], s.col[k], i) += s.weight[k] * c;
          } else {
            grad(t + 1, row, col, i) += c;
            grad(t, row, col + 1 == w ? 0 : col + 1, i) += 0.5 * v1 * c;
            grad(t, row, col == 0 ? w - 1 : col - 1, i) -= 0.5 * v1 * c;
            grad(t, row + 1 == h ? 0 : row + 1, col, i) += 0.5 * v2 * c;
            grad(t, row == 0 ? h - 1 : row - 1, col, i) -= 0.5 * v2 * c;
          }
        }
      }
    }
  }
}

double squared_residual_integral(const Grid& residual, std::span<const double> mu) {
  double m = 0.0;
  for (std::size_t t = 0; t < residual.frames(); ++t) {
    double frame_sum = 0.0;
    for (double r : residual.frame(t)) frame_sum += r * r;
    m += mu[t] * frame_sum;
  }
  return m;
}

}  // namespace

Grid motion_residual(const ActivationField& act, const VelocityField& v, MotionScheme scheme) {
  check_motion_inputs(act, v);
  const std::size_t h = act.height(), w = act.width(), n = act.channels();
  Grid r(Shape{act.frames() - 1, h, w, n});
  for (std::size_t t = 0; t + 1 < act.frames(); ++t) {
    for (std::size_t row = 0; row < h; ++row) {
      for (std::size_t col = 0; col < w; ++col) {
        const double v1 = v(t, row, col, 0), v2 = v(t, row, col, 1);
        for (std::size_t i = 0; i < n; ++i) {
          double value;
          if (scheme == MotionScheme::kTransport) {
            value = sample_bilinear(act, t + 1, col + v1, row + v2, i) - act(t, row, col, i);
          } else {
            const double d1 = 0.5 * (act(t, row, col + 1 == w ? 0 : col + 1, i) -
                                     act(t, row, col == 0 ? w - 1 : col - 1, i));
            const double d2 = 0.5 * (act(t, row + 1 == h ? 0 : row + 1, col, i) -
                                     act(t, row == 0 ? h - 1 : row - 1, col, i));
            value = act(t + 1, row, col, i) - act(t, row, col, i) + v1 * d1 + v2 * d2;
          }
          r(t, row, col, i) = value;
        }
      }
    }
  }
  return r;
}

double motion_term(const ActivationField& act, const VelocityField& v, const TemporalWeights& w,
                   MotionScheme scheme) {
  check_weights(act, w);
  const Grid r = motion_residual(act, v, scheme);
  return squared_residual_integral(r, w.residual_measure(act.shape().pixels()));
}

// --- parsimony ------------------------------------------------------------

double tap_roughness(std::span<const double> plane, std::size_t rows, std::size_t cols) {
  if (plane.size() != rows * cols) throw DimensionMismatch("tap plane size does not match its extents");
  double s = 0.0;
  for (std::size_t a = 0; a < rows; ++a) {
    for (std::size_t b = 0; b < cols; ++b) {
      const double here = plane[a * cols + b];
      if (a + 1 < rows) {
        const double d = plane[(a + 1) * cols + b] - here;
        s += d * d;
      }
      if (b + 1 < cols) {
        const double d = plane[a * cols + b + 1] - here;
        s += d * d;
      }
    }
  }
  return 0.5 * s;
}

double spatial_parsimony(const FilterBank& bank) {
  const std::size_t k = bank.kernel(), plane = k * k;
  const auto taps = bank.taps();
  double p = 0.0;
  for (std::size_t off = 0; off < taps.size(); off += plane) p += tap_roughness(taps.subspan(off, plane), k, k);
  return p;
}

namespace {

void check_prev(const FilterBank& now, const FilterBank& prev) {
  if (!now.same_layout(prev))
    throw DimensionMismatch("previous filter bank differs in layout from the current one");
}

void check_dtau(double dtau) {
  if (!(dtau > 0.0) || !std::isfinite(dtau)) throw InvalidArgument("temporal step dtau must be > 0");
}

}  // namespace

double temporal_parsimony(const FilterBank& now, const FilterBank& prev, double dtau) {
  check_prev(now, prev);
  check_dtau(dtau);
  const auto a = now.taps(), b = prev.taps();
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double rate = (a[k] - b[k]) / dtau;
    s += rate * rate;
  }
  return 0.5 * s;
}

double constraint_penalty(const ActivationField& act, const TemporalWeights& w) {
  check_weights(act, w);
  const std::size_t n = act.channels();
  const auto mu = w.measure(act.shape().pixels());
  double c = 0.0;
  for (std::size_t t = 0; t < act.frames(); ++t) {
    const auto f = act.frame(t);
    double frame_sum = 0.0;
    for (std::size_t k = 0; k < f.size(); k += n) {
      double total = 0.0, bounds = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double a = f[k + i];
        total += a;
        const double lo = std::max(0.0, -a), hi = std::max(0.0, a - 1.0);
        bounds += lo * lo + hi * hi;
      }
      frame_sum += (total - 1.0) * (total - 1.0) + bounds;
    }
    c += mu[t] * frame_sum;
  }
  return c;
}

// --- composite ------------------------------------------------------------

namespace {

void check_settings(const ActionSettings& s) {
  const Multipliers& l = s.lambda;
  for (double v : {l.motion, l.spatial, l.temporal, l.constraint})
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("multipliers must be finite and >= 0");
  check_dtau(s.dtau);
}

void check_action_inputs(const FilterBank& bank, const FilterBank& prev, const Grid& input,
                         const VelocityField& v, const TemporalWeights& w, const ActionSettings& s) {
  check_settings(s);
  check_prev(bank, prev);
  check_flow_matches(v, input.shape());
  check_weights(input, w);
}

ActionBreakdown breakdown_from(const FilterBank& bank, const FilterBank& prev, const ActivationField& act,
                               const FeatureField& p, const Grid& residual, const TemporalWeights& w,
                               const ActionSettings& s) {
  ActionBreakdown b;
  b.marginal_entropy = marginal_entropy(p, w);
  b.conditional_entropy = conditional_entropy(p, w);
  b.information = b.marginal_entropy - b.conditional_entropy;
  b.motion = squared_residual_integral(residual, w.residual_measure(act.shape().pixels()));
  b.spatial = spatial_parsimony(bank);
  b.temporal = temporal_parsimony(bank, prev, s.dtau);
  b.constraint = bank.mode() == ConstraintMode::kLinearPenalty ? constraint_penalty(act, w) : 0.0;
  b.action = -b.information + s.lambda.motion * b.motion + s.lambda.spatial * b.spatial +
             s.lambda.temporal * b.temporal + s.lambda.constraint * b.constraint;
  return b;
}

// d(-I)/da, through either the softmax or the clamp-and-renormalize map.
void information_adjoint(const ActivationField& act, const FeatureField& p, const TemporalWeights& w,
                         ConstraintMode mode, Grid& grad) {
  const std::size_t n = act.channels();
  const auto mu = w.measure(act.shape().pixels());
  const auto q = symbol_marginals(p, w);
  std::vector<double> log_q(n), gp(n);
  for (std::size_t i = 0; i < n; ++i) log_q[i] = q[i] > 0.0 ? std::log(q[i]) : 0.0;

  const auto a = act.data();
  const auto prob = p.data();
  auto g = grad.data();
  const std::size_t per_frame = act.shape().pixels() * n;
  for (std::size_t base = 0; base < a.size(); base += n) {
    const double m = mu[base / per_frame];
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double pi = prob[base + i];
      // d(-I)/dp_i = dmu (ln q_i - ln p_i)
      gp[i] = pi > 0.0 ? m * (log_q[i] - std::log(pi)) : 0.0;
      mean += pi * gp[i];
    }
    if (mode == ConstraintMode::kSoftmax) {
      for (std::size_t i = 0; i < n; ++i) g[base + i] += prob[base + i] * (gp[i] - mean);
    } else {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) total += std::clamp(a[base + i], kProjectionFloor, 1.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double ai = a[base + i];
        if (ai > kProjectionFloor && ai < 1.0) g[base + i] += (gp[i] - mean) / total;
      }
    }
  }
}

void penalty_adjoint(const ActivationField& act, const TemporalWeights& w, double scale, Grid& grad) {
  const std::size_t n = act.channels();
  const auto mu = w.measure(act.shape().pixels());
  const auto a = act.data();
  auto g = grad.data();
  const std::size_t per_frame = act.shape().pixels() * n;
  for (std::size_t base = 0; base < a.size(); base += n) {
    const double c = scale * mu[base / per_frame];
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += a[base + i];
    for (std::size_t i = 0; i < n; ++i) {
      const double ai = a[base + i];
      g[base + i] += c * 2.0 * ((total - 1.0) - std::max(0.0, -ai) + std::max(0.0, ai - 1.0));
    }
  }
}

void roughness_adjoint(std::span<const double> plane, std::size_t rows, std::size_t cols, double scale,
                       std::span<double> g) {
  for (std::size_t a = 0; a < rows; ++a) {
    for (std::size_t b = 0; b < cols; ++b) {
      const std::size_t here = a * cols + b;
      if (a + 1 < rows) {
        const std::size_t there = here + cols;
        const double d = scale * (plane[there] - plane[here]);
        g[there] += d;
        g[here] -= d;
      }
      if (b + 1 < cols) {
        const std::size_t there = here + 1;
        const double d = scale * (plane[there] - plane[here]);
        g[there] += d;
        g[here] -= d;
      }
    }
  }
}

ActionEvaluation evaluate(const FilterBank& bank, const FilterBank& prev, const Grid& input,
                          const VelocityField& v, const TemporalWeights& w, const ActionSettings& s,
                          bool with_gradient) {
  check_action_inputs(bank, prev, input, v, w, s);
  const ActivationField act = convolve_features(bank, input);
  const FeatureField p = to_probabilities(act, bank.mode());
  const Grid residual = motion_residual(act, v, s.scheme);

  ActionEvaluation out;
  out.breakdown = breakdown_from(bank, prev, act, p, residual, w, s);
  if (!with_gradient) return out;

  Grid upstream(act.shape());
  information_adjoint(act, p, w, bank.mode(), upstream);
  if (s.lambda.motion != 0.0)
    motion_adjoint(act, v, residual, w.residual_measure(act.shape().pixels()), s.scheme, s.lambda.motion,
                   upstream);
  if (bank.mode() == ConstraintMode::kLinearPenalty && s.lambda.constraint != 0.0)
    penalty_adjoint(act, w, s.lambda.constraint, upstream);

  out.gradient = tap_gradient(bank, input, upstream);
  const std::size_t k = bank.kernel(), plane = k * k;
  const auto taps = bank.taps();
  std::span<double> g(out.gradient);
  if (s.lambda.spatial != 0.0)
    for (std::size_t off = 0; off < taps.size(); off += plane)
      roughness_adjoint(taps.subspan(off, plane), k, k, s.lambda.spatial, g.subspan(off, plane));
  if (s.lambda.temporal != 0.0) {
    const auto before = prev.taps();
    const double scale = s.lambda.temporal / (s.dtau * s.dtau);
    for (std::size_t idx = 0; idx < taps.size(); ++idx) g[idx] += scale * (taps[idx] - before[idx]);
  }
  return out;
}

}  // namespace

ActionBreakdown cognitive_action(const FilterBank& bank, const FilterBank& prev, const Grid& input,
                                 const VelocityField& v, const TemporalWeights& w,
                                 const ActionSettings& settings) {
  return evaluate(bank, prev, input, v, w, settings, false).breakdown;
}

std::vector<double> action_gradient(const FilterBank& bank, const FilterBank& prev, const Grid& input,
                                    const VelocityField& v, const TemporalWeights& w,
                                    const ActionSettings& settings) {
  return evaluate(bank, prev, input, v, w, settings, true).gradient;
}

ActionEvaluation evaluate_action(const FilterBank& bank, const FilterBank& prev, const Grid& input,
                                 const VelocityField& v, const TemporalWeights& w,
                                 const ActionSettings& settings) {
  return evaluate(bank, prev, input, v, w, settings, true);
}

// --- CSV ------------------------------------------------------------------

std::string breakdown_csv_fields(const ActionBreakdown& b) {
  std::string out;
  char buf[40];
  bool first = true;
  for (double v : {b.marginal_entropy, b.conditional_entropy, b.information, b.motion, b.spatial,
                   b.temporal, b.constraint, b.action}) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    if (!first) out += ',';
    out += buf;
    first = false;
  }
  return out;
}

std::string breakdown_csv_row(long long step, const ActionBreakdown& b) {
  return std::to_string(step) + "," + breakdown_csv_fields(b);
}

ActionBreakdown parse_breakdown_fields(std::span<const std::string> fields) {
  if (fields.size() < 8) throw IoError("breakdown row needs 8 value columns");
  const auto values = fields.last(8);
  double v[8];
  for (std::size_t k = 0; k < 8; ++k) {
    const std::string& s = values[k];
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v[k]);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw IoError("bad breakdown value '" + s + "'");
  }
  return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]};
}

}  // namespace motinv

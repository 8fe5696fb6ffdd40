#include "motinv/motinv.h"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <memory>
#include <new>
#include <string>

#include "motinv/action.hpp"
#include "motinv/config.hpp"
#include "motinv/error.hpp"
#include "motinv/experiment.hpp"
#include "motinv/flow.hpp"
#include "motinv/optimizer.hpp"
#include "motinv/video.hpp"

struct motinv_clip {
  motinv::VideoClip clip;
};

struct motinv_flow {
  motinv::VelocityField flow;
};

struct motinv_bank {
  motinv::FilterBank bank;
};

namespace {

thread_local std::string last_error;

motinv_status fail(motinv_status status, const char* what) {
  last_error = what;
  return status;
}

// Runs `f`, translating exceptions into status codes.
template <class F>
motinv_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return MOTINV_OK;
  } catch (const motinv::ConfigError& e) {
    return fail(MOTINV_ERR_CONFIG, e.what());
  } catch (const motinv::Diverged& e) {
    return fail(MOTINV_ERR_DIVERGED, e.what());
  } catch (const motinv::DimensionMismatch& e) {
    return fail(MOTINV_ERR_DIMENSION, e.what());
  } catch (const motinv::IoError& e) {
    return fail(MOTINV_ERR_IO, e.what());
  } catch (const motinv::InvalidArgument& e) {
    return fail(MOTINV_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(MOTINV_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MOTINV_ERR_INTERNAL, e.what());
  }
}

void require(const void* p, const char* name) {
  if (!p) throw motinv::InvalidArgument(std::string(name) + " must not be NULL");
}

motinv::ConstraintMode to_mode(motinv_mode m) {
  switch (m) {
    case MOTINV_MODE_SOFTMAX: return motinv::ConstraintMode::kSoftmax;
    case MOTINV_MODE_LINEAR_PENALTY: return motinv::ConstraintMode::kLinearPenalty;
  }
  throw motinv::InvalidArgument("unknown constraint mode");
}

motinv::PatternKind to_pattern(motinv_pattern p) {
  switch (p) {
    case MOTINV_PATTERN_CHECKERBOARD: return motinv::PatternKind::kCheckerboard;
    case MOTINV_PATTERN_SINUSOID: return motinv::PatternKind::kSinusoid;
    case MOTINV_PATTERN_RANDOM_TEXTURE: return motinv::PatternKind::kRandomTexture;
  }
  throw motinv::InvalidArgument("unknown pattern kind");
}

motinv::MotionScheme to_scheme(motinv_scheme s) {
  switch (s) {
    case MOTINV_SCHEME_TRANSPORT: return motinv::MotionScheme::kTransport;
    case MOTINV_SCHEME_EULERIAN: return motinv::MotionScheme::kEulerian;
  }
  throw motinv::InvalidArgument("unknown motion scheme");
}

}  // namespace

extern "C" {

const char* motinv_last_error(void) { return last_error.c_str(); }

const char* motinv_version(void) { return "0.1.0"; }

motinv_status motinv_clip_synthesize(motinv_pattern pattern, double period, uint64_t seed, size_t channels,
                                     double v1, double v2, size_t frames, size_t height, size_t width,
                                     motinv_clip** out_clip, motinv_flow** out_flow) {
  return guarded([&] {
    require(out_clip, "out_clip");
    motinv::PatternSpec spec{to_pattern(pattern), period, seed, channels};
    auto [clip, flow] = motinv::synth_translating_clip(spec, {v1, v2}, frames, height, width);
    auto c = std::make_unique<motinv_clip>(motinv_clip{std::move(clip)});
    if (out_flow) *out_flow = new motinv_flow{std::move(flow)};
    *out_clip = c.release();
  });
}

motinv_status motinv_clip_load(const char* path_pattern, motinv_clip** out_clip) {
  return guarded([&] {
    require(path_pattern, "path_pattern");
    require(out_clip, "out_clip");
    *out_clip = new motinv_clip{motinv::load_image_sequence(path_pattern)};
  });
}

motinv_status motinv_clip_shape(const motinv_clip* clip, size_t* frames, size_t* height, size_t* width,
                                size_t* channels) {
  return guarded([&] {
    require(clip, "clip");
    const auto& s = clip->clip.shape();
    if (frames) *frames = s.frames;
    if (height) *height = s.height;
    if (width) *width = s.width;
    if (channels) *channels = s.channels;
  });
}

const double* motinv_clip_data(const motinv_clip* clip) { return clip ? clip->clip.data().data() : nullptr; }

void motinv_clip_free(motinv_clip* clip) { delete clip; }

motinv_status motinv_flow_horn_schunck(const motinv_clip* clip, double alpha, size_t iters, motinv_flow** out_flow) {
  return guarded([&] {
    require(clip, "clip");
    require(out_flow, "out_flow");
    *out_flow = new motinv_flow{motinv::horn_schunck(clip->clip, alpha, iters)};
  });
}

motinv_status motinv_flow_read(const char* path, motinv_flow** out_flow) {
  return guarded([&] {
    require(path, "path");
    require(out_flow, "out_flow");
    *out_flow = new motinv_flow{motinv::read_flow(path)};
  });
}

motinv_status motinv_flow_write(const motinv_flow* flow, const char* path) {
  return guarded([&] {
    require(flow, "flow");
    require(path, "path");
    motinv::write_flow(path, flow->flow);
  });
}

const double* motinv_flow_data(const motinv_flow* flow) { return flow ? flow->flow.data().data() : nullptr; }

void motinv_flow_free(motinv_flow* flow) { delete flow; }

motinv_status motinv_bank_init(size_t n, size_t inputs, size_t kernel, motinv_mode mode, uint64_t seed, double scale,
                               motinv_bank** out_bank) {
  return guarded([&] {
    require(out_bank, "out_bank");
    *out_bank = new motinv_bank{motinv::init_bank(n, inputs, kernel, to_mode(mode), seed, scale)};
  });
}

motinv_status motinv_bank_load(const char* path, motinv_bank** out_bank) {
  return guarded([&] {
    require(path, "path");
    require(out_bank, "out_bank");
    *out_bank = new motinv_bank{motinv::load_bank(path)};
  });
}

motinv_status motinv_bank_save(const motinv_bank* bank, const char* path) {
  return guarded([&] {
    require(bank, "bank");
    require(path, "path");
    motinv::save_bank(path, bank->bank);
  });
}

motinv_status motinv_bank_shape(const motinv_bank* bank, size_t* n, size_t* inputs, size_t* kernel) {
  return guarded([&] {
    require(bank, "bank");
    if (n) *n = bank->bank.outputs();
    if (inputs) *inputs = bank->bank.inputs();
    if (kernel) *kernel = bank->bank.kernel();
  });
}

double* motinv_bank_taps(motinv_bank* bank) { return bank ? bank->bank.taps().data() : nullptr; }

void motinv_bank_free(motinv_bank* bank) { delete bank; }

motinv_status motinv_action_evaluate(const motinv_bank* bank, const motinv_bank* prev, const motinv_clip* clip,
                                     const motinv_flow* flow, const motinv_action_options* options,
                                     motinv_breakdown* out, double* gradient) {
  return guarded([&] {
    require(bank, "bank");
    require(clip, "clip");
    require(flow, "flow");
    require(options, "options");
    require(out, "out");
    const motinv::FilterBank& before = prev ? prev->bank : bank->bank;
    motinv::ActionSettings s;
    s.lambda = {options->lambda_motion, options->lambda_spatial, options->lambda_temporal, options->lambda_constraint};
    s.dtau = options->dtau;
    s.scheme = to_scheme(options->scheme);
    const auto w = motinv::TemporalWeights::uniform(clip->clip.frames());
    const auto e = motinv::evaluate_action(bank->bank, before, clip->clip, flow->flow, w, s);
    const auto& b = e.breakdown;
    *out = {b.marginal_entropy, b.conditional_entropy, b.information, b.motion,
            b.spatial,          b.temporal,            b.constraint,  b.action};
    if (gradient) std::copy(e.gradient.begin(), e.gradient.end(), gradient);
  });
}

motinv_status motinv_run(const char* command, const motinv_run_options* options) {
  bool check_failed = false;
  const motinv_status status = guarded([&] {
    require(command, "command");
    require(options, "options");
    require(options->config_path, "config_path");
    motinv::ExperimentConfig cfg = motinv::load_config(options->config_path);
    if (options->out_dir) cfg.output_dir = options->out_dir;
    if (options->has_seed) motinv::apply_seed(cfg, options->seed);
    if (options->flow_alpha < 0.0 || std::isnan(options->flow_alpha))
      throw motinv::InvalidArgument("flow_alpha must be > 0");
    if (options->flow_alpha > 0.0) cfg.flow.alpha = options->flow_alpha;
    if (options->flow_iters > 0) cfg.flow.iters = options->flow_iters;

    const std::string cmd = command;
    if (cmd == "synth") {
      motinv::cmd_synth(cfg);
    } else if (cmd == "train") {
      motinv::cmd_train(cfg);
    } else if (cmd == "eval") {
      motinv::cmd_eval(cfg);
    } else if (cmd == "check-grad") {
      const auto report = motinv::cmd_check_grad(cfg, std::cout);
      check_failed = !(report.max_relative_error <= motinv::kGradientTolerance);
    } else {
      throw motinv::InvalidArgument("unknown command '" + cmd + "'");
    }
  });
  if (status == MOTINV_OK && check_failed)
    return fail(MOTINV_ERR_CHECK_FAILED, "gradient check exceeded the 1e-5 relative tolerance");
  return status;
}

}  // extern "C"

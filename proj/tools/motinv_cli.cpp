// Command-line driver: synth, train, eval and check-grad over an experiment
// config. Links only against the C API.
//
// Exit codes: 0 success, 1 config error, 2 runtime error (including
// divergence and a failed gradient check).

#include <cstddef>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "motinv/motinv.h"

namespace {

int exit_code(motinv_status status) {
  switch (status) {
    case MOTINV_OK: return 0;
    case MOTINV_ERR_CONFIG: return 1;
    default: return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised motion-invariant feature learning from video"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(motinv_version()));

  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  double flow_alpha = 0.0;
  std::size_t flow_iters = 0;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Experiment config file")->required();
    sub->add_option("--out", out, "Output directory (overrides [experiment] out)");
    sub->add_option("--seed", seed, "Experiment seed (overrides [experiment] seed)");
    sub->add_option("--threads", threads, "Worker thread hint; outputs do not depend on it");
    sub->add_option("--flow-alpha", flow_alpha, "Horn-Schunck smoothness (overrides [flow] alpha)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--flow-iters", flow_iters, "Horn-Schunck iterations (overrides [flow] iters)")
        ->check(CLI::PositiveNumber);
  };
  add_common(app.add_subcommand("synth", "Write a synthetic clip and its ground-truth flow"));
  add_common(app.add_subcommand("train", "Train every configured layer"));
  add_common(app.add_subcommand("eval", "Evaluate trained banks and export feature maps"));
  add_common(app.add_subcommand("check-grad", "Compare analytic and finite-difference gradients"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  motinv_run_options options{};
  options.config_path = config.c_str();
  options.out_dir = out.empty() ? nullptr : out.c_str();
  options.has_seed = seed.has_value();
  options.seed = seed.value_or(0);
  options.threads = threads;
  options.flow_alpha = flow_alpha;
  options.flow_iters = flow_iters;

  const motinv_status status = motinv_run(command.c_str(), &options);
  if (status != MOTINV_OK) std::cerr << "motinv " << command << ": " << motinv_last_error() << '\n';
  return exit_code(status);
}

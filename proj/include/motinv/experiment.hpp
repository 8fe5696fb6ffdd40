#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "motinv/action.hpp"
#include "motinv/config.hpp"
#include "motinv/gradcheck.hpp"
#include "motinv/optimizer.hpp"

namespace motinv {

struct ExperimentInputs {
  VideoClip clip;
  VelocityField flow;
};

// Synthesizes or loads the clip and obtains the flow the config asks for.
ExperimentInputs load_inputs(const ExperimentConfig& config);

// Holds `<dir>/.motinv.lock` for the lifetime of the object; a second run
// against the same directory fails instead of interleaving outputs.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::filesystem::path path_;
};

// frame_{t}.pgm (m=1) or frame_{t}.ppm, plus flow.bin.
void cmd_synth(const ExperimentConfig& config);

// layer{z}_trace.csv, layer{z}_bank.txt and summary.csv.
std::vector<TrainTrace> cmd_train(const ExperimentConfig& config);

// Reads layer{z}_bank.txt from the bank directory, writes eval.csv and, when
// enabled, feature maps under layer{z}_maps/.
std::vector<ActionBreakdown> cmd_eval(const ExperimentConfig& config);

// Runs the finite-difference suite and writes one line per check to `log`.
GradientCheckReport cmd_check_grad(const ExperimentConfig& config, std::ostream& log);

// Pass/fail threshold applied by `check-grad`.
inline constexpr double kGradientTolerance = 1e-5;

}  // namespace motinv

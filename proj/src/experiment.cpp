#include "motinv/experiment.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>

#include "motinv/error.hpp"
#include "motinv/flow.hpp"

namespace motinv {

namespace fs = std::filesystem;

ExperimentInputs load_inputs(const ExperimentConfig& config) {
  validate_paths(config);
  ExperimentInputs in;
  VelocityField truth;
  if (config.data.kind == DataSource::Kind::kSynth) {
    PatternSpec pattern = config.data.pattern;
    pattern.seed = config.texture_seed();
    auto [clip, flow] = synth_translating_clip(pattern, config.data.velocity, config.data.frames,
                                               config.data.height, config.data.width);
    in.clip = std::move(clip);
    truth = std::move(flow);
  } else {
    in.clip = load_image_sequence(config.data.path.string());
  }
  const Shape& s = in.clip.shape();
  switch (config.flow.kind) {
    case FlowSource::Kind::kGroundTruth: in.flow = std::move(truth); break;
    case FlowSource::Kind::kHornSchunck: in.flow = horn_schunck(in.clip, config.flow.alpha, config.flow.iters); break;
    case FlowSource::Kind::kConstant: in.flow = constant_flow(config.flow.velocity, s.frames, s.height, s.width); break;
    case FlowSource::Kind::kFile: in.flow = read_flow(config.flow.path); break;
  }
  check_flow_matches(in.flow, s);
  return in;
}

OutputLock::OutputLock(const fs::path& dir) : path_(dir / ".motinv.lock") {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError(dir.string() + ": cannot create output directory");
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST) throw IoError(path_.string() + ": output directory is in use by another run");
    throw IoError(path_.string() + ": " + std::strerror(errno));
  }
  ::close(fd);
}

OutputLock::~OutputLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

namespace {

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  return out;
}

void close_output(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw IoError(path.string() + ": write failed");
}

std::string layer_file(std::size_t z, std::string_view suffix) {
  return "layer" + std::to_string(z) + std::string(suffix);
}

}  // namespace

void cmd_synth(const ExperimentConfig& config) {
  if (config.data.kind != DataSource::Kind::kSynth)
    throw ConfigError("synth: [data] source must be synth");
  const ExperimentInputs in = load_inputs(config);
  OutputLock lock(config.output_dir);
  const char* ext = in.clip.channels() == 1 ? "pgm" : "ppm";
  save_image_sequence(in.clip, (config.output_dir / (std::string("frame_{t}.") + ext)).string());
  write_flow(config.output_dir / "flow.bin", in.flow);
}

std::vector<TrainTrace> cmd_train(const ExperimentConfig& config) {
  if (config.layers.empty()) throw ConfigError("train: no [layer1] section");
  const ExperimentInputs in = load_inputs(config);
  OutputLock lock(config.output_dir);

  std::vector<TrainTrace> traces = train_deep(in.clip, in.flow, config.layers);

  const fs::path summary_path = config.output_dir / "summary.csv";
  std::ofstream summary = open_output(summary_path);
  summary << "layer,stage," << kBreakdownCsvHeader << '\n';
  Grid input = in.clip;
  for (std::size_t z = 0; z < traces.size(); ++z) {
    const TrainTrace& trace = traces[z];
    const TrainConfig& tc = config.layers[z].train;

    const fs::path trace_path = config.output_dir / layer_file(z + 1, "_trace.csv");
    std::ofstream out = open_output(trace_path);
    out << kBreakdownCsvHeader << '\n';
    for (std::size_t k = 0; k < trace.steps.size(); ++k) out << breakdown_csv_row(static_cast<long long>(k), trace.steps[k]) << '\n';
    close_output(out, trace_path);
    save_bank(config.output_dir / layer_file(z + 1, "_bank.txt"), trace.final_bank);

    const FilterBank start = initial_bank(config.layers[z], input.channels(), z + 1);
    const ActionBreakdown initial = evaluate_frozen(start, input, in.flow, tc);
    const ActionBreakdown frozen = evaluate_frozen(trace.final_bank, input, in.flow, tc);
    summary << z + 1 << ",initial," << breakdown_csv_row(0, initial) << '\n';
    summary << z + 1 << ",final," << breakdown_csv_row(static_cast<long long>(tc.steps), frozen) << '\n';

    if (z + 1 < traces.size()) input = to_probabilities(convolve_features(trace.final_bank, input), trace.final_bank.mode());
  }
  close_output(summary, summary_path);
  return traces;
}

std::vector<ActionBreakdown> cmd_eval(const ExperimentConfig& config) {
  const fs::path bank_dir = config.bank_dir.value_or(config.output_dir);
  std::vector<FilterBank> banks;
  for (std::size_t z = 1; fs::exists(bank_dir / layer_file(z, "_bank.txt")); ++z)
    banks.push_back(load_bank(bank_dir / layer_file(z, "_bank.txt")));
  if (banks.empty()) throw IoError((bank_dir / layer_file(1, "_bank.txt")).string() + ": no such file");
  if (banks.size() > config.layers.size())
    throw ConfigError("eval: " + std::to_string(banks.size()) + " bank files but only " +
                      std::to_string(config.layers.size()) + " [layer] sections");

  const ExperimentInputs in = load_inputs(config);
  OutputLock lock(config.output_dir);
  const std::vector<FeatureField> fields = stack_layers(banks, in.clip);

  std::vector<ActionBreakdown> rows;
  const fs::path eval_path = config.output_dir / "eval.csv";
  std::ofstream out = open_output(eval_path);
  out << "layer," << kBreakdownCsvHeader << '\n';
  for (std::size_t z = 0; z < banks.size(); ++z) {
    const Grid& input = z == 0 ? static_cast<const Grid&>(in.clip) : fields[z - 1];
    rows.push_back(evaluate_frozen(banks[z], input, in.flow, config.layers[z].train));
    out << z + 1 << ',' << breakdown_csv_row(0, rows.back()) << '\n';
    if (config.feature_maps) save_feature_maps(fields[z], config.output_dir / layer_file(z + 1, "_maps"));
  }
  close_output(out, eval_path);
  return rows;
}

GradientCheckReport cmd_check_grad(const ExperimentConfig& config, std::ostream& log) {
  GradientCheckReport report = run_gradient_suite(config.seed, config.gradcheck_instances, config.gradcheck_eps);
  char buf[64];
  for (const auto& r : report.results) {
    std::snprintf(buf, sizeof buf, "%.3e", r.max_relative_error);
    log << r.label << " [" << to_string(r.term) << "] max relative error " << buf << '\n';
  }
  std::snprintf(buf, sizeof buf, "%.3e", report.max_relative_error);
  log << "max relative error " << buf << " (tolerance 1e-05)\n";
  return report;
}

}  // namespace motinv

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "motinv/optimizer.hpp"
#include "motinv/video.hpp"

namespace motinv {

struct DataSource {
  enum class Kind { kSynth, kImages };
  Kind kind = Kind::kSynth;
  PatternSpec pattern;
  std::optional<std::uint64_t> pattern_seed;  // defaults to the experiment seed
  Vec2 velocity{1.0, 0.0};
  std::size_t frames = 16, height = 32, width = 32;
  std::filesystem::path path;  // images: pattern containing {t}
};

struct FlowSource {
  enum class Kind { kGroundTruth, kHornSchunck, kConstant, kFile };
  Kind kind = Kind::kGroundTruth;
  double alpha = 1.0;
  std::size_t iters = 200;
  Vec2 velocity{0.0, 0.0};
  std::filesystem::path path;
};

// One experiment: where the data and motion come from, how each layer is
// trained, and where outputs go. See README for the file format.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";
  DataSource data;
  FlowSource flow;
  MotionScheme scheme = MotionScheme::kTransport;
  Weighting weighting;
  std::vector<LayerSpec> layers;
  bool feature_maps = true;
  std::optional<std::filesystem::path> bank_dir;  // eval: defaults to output_dir
  std::size_t gradcheck_instances = 20;
  double gradcheck_eps = 1e-5;

  // Seeds: the texture uses `seed` (unless overridden), layer z uses seed ^ z.
  std::uint64_t layer_seed(std::size_t z) const { return seed ^ static_cast<std::uint64_t>(z); }
  std::uint64_t texture_seed() const { return data.pattern_seed.value_or(seed); }
};

// Flat `[section]` / `key = value` format. Relative paths resolve against
// `base_dir`. Throws ConfigError naming the line or key at fault.
ExperimentConfig parse_config(std::istream& in, std::string_view source,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

// Re-derives the per-layer seeds after `seed` changes (e.g. --seed).
void apply_seed(ExperimentConfig& config, std::uint64_t seed);

// Referenced input files exist.
void validate_paths(const ExperimentConfig& config);

}  // namespace motinv

#include "motinv/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <set>

#include "motinv/error.hpp"

namespace motinv {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

struct Entry {
  std::string value;
  std::size_t line = 0;
  bool used = false;
};

using Section = std::map<std::string, Entry>;

// Typed access to one section; every failure names the key and its line.
class SectionReader {
 public:
  SectionReader(std::string name, Section* section, std::string_view source)
      : name_(std::move(name)), section_(section), source_(source) {}

  bool has(const std::string& key) const { return section_ && section_->count(key); }

  std::string str(const std::string& key, std::string fallback) {
    Entry* e = find(key);
    return e ? e->value : fallback;
  }

  double real(const std::string& key, double fallback) {
    Entry* e = find(key);
    return e ? to_real(*e, key) : fallback;
  }

  std::uint64_t integer(const std::string& key, std::uint64_t fallback) {
    Entry* e = find(key);
    if (!e) return fallback;
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
    if (ec != std::errc{} || ptr != e->value.data() + e->value.size())
      throw error(*e, key, "expected a non-negative integer, got '" + e->value + "'");
    return v;
  }

  bool boolean(const std::string& key, bool fallback) {
    Entry* e = find(key);
    if (!e) return fallback;
    if (e->value == "true" || e->value == "1" || e->value == "yes") return true;
    if (e->value == "false" || e->value == "0" || e->value == "no") return false;
    throw error(*e, key, "expected true or false, got '" + e->value + "'");
  }

  Vec2 vec2(const std::string& key, Vec2 fallback) {
    Entry* e = find(key);
    if (!e) return fallback;
    const auto comma = e->value.find(',');
    if (comma == std::string::npos) throw error(*e, key, "expected 'v1,v2', got '" + e->value + "'");
    Entry a{std::string(trim(std::string_view(e->value).substr(0, comma))), e->line, true};
    Entry b{std::string(trim(std::string_view(e->value).substr(comma + 1))), e->line, true};
    return {to_real(a, key), to_real(b, key)};
  }

  // Converts library validation errors into diagnostics naming the key.
  template <class F>
  auto guarded(const std::string& key, F&& f) {
    try {
      return f();
    } catch (const InvalidArgument& ex) {
      Entry* e = section_ ? lookup(key) : nullptr;
      if (e) throw error(*e, key, ex.what());
      throw ConfigError(std::string(source_) + ": [" + name_ + "] " + key + ": " + ex.what());
    }
  }

  ConfigError error(const Entry& e, const std::string& key, const std::string& what) const {
    return ConfigError(std::string(source_) + ":" + std::to_string(e.line) + ": [" + name_ + "] " + key +
                       ": " + what);
  }

 private:
  Entry* lookup(const std::string& key) {
    auto it = section_->find(key);
    return it == section_->end() ? nullptr : &it->second;
  }

  Entry* find(const std::string& key) {
    if (!section_) return nullptr;
    Entry* e = lookup(key);
    if (e) e->used = true;
    return e;
  }

  double to_real(const Entry& e, const std::string& key) const {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
    if (ec != std::errc{} || ptr != e.value.data() + e.value.size() || !std::isfinite(v))
      throw error(e, key, "expected a finite number, got '" + e.value + "'");
    return v;
  }

  std::string name_;
  Section* section_;
  std::string_view source_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

ExperimentConfig parse_config(std::istream& in, std::string_view source, const std::filesystem::path& base_dir) {
  std::map<std::string, Section> sections;
  std::string current;
  std::string raw;
  std::size_t lineno = 0;
  const auto fail = [&](const std::string& what) {
    return ConfigError(std::string(source) + ":" + std::to_string(lineno) + ": " + what);
  };
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw fail("unterminated section header");
      current = std::string(trim(line.substr(1, line.size() - 2)));
      if (current.empty()) throw fail("empty section name");
      if (sections.count(current)) throw fail("duplicate section [" + current + "]");
      sections[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw fail("expected 'key = value'");
    if (current.empty()) throw fail("key outside of any [section]");
    std::string key(trim(line.substr(0, eq)));
    std::string_view value = trim(line.substr(eq + 1));
    // trailing comment
    if (const auto hash = value.find(" #"); hash != std::string_view::npos) value = trim(value.substr(0, hash));
    if (key.empty()) throw fail("empty key");
    auto& sec = sections[current];
    if (sec.count(key)) throw fail("duplicate key '" + key + "' in [" + current + "]");
    sec[key] = Entry{std::string(value), lineno, false};
  }

  static const std::set<std::string> known_fixed = {"experiment", "data", "flow", "action", "report", "eval",
                                                    "check-grad"};
  for (const auto& [name, sec] : sections) {
    if (known_fixed.count(name)) continue;
    if (name.rfind("layer", 0) == 0) {
      const std::string digits = name.substr(5);
      if (!digits.empty() && digits.find_first_not_of("0123456789") == std::string::npos && digits != "0" &&
          digits.front() != '0')
        continue;
    }
    throw ConfigError(std::string(source) + ": unknown section [" + name + "]");
  }

  const auto reader = [&](const std::string& name) {
    auto it = sections.find(name);
    return SectionReader(name, it == sections.end() ? nullptr : &it->second, source);
  };

  ExperimentConfig cfg;
  {
    auto s = reader("experiment");
    cfg.seed = s.integer("seed", cfg.seed);
    cfg.output_dir = resolve(base_dir, s.str("out", cfg.output_dir.string()));
  }
  {
    auto s = reader("data");
    const std::string kind = s.str("source", "synth");
    if (kind == "synth") {
      cfg.data.kind = DataSource::Kind::kSynth;
    } else if (kind == "images") {
      cfg.data.kind = DataSource::Kind::kImages;
    } else {
      throw ConfigError(std::string(source) + ": [data] source: expected synth or images, got '" + kind + "'");
    }
    cfg.data.pattern.kind = s.guarded("pattern", [&] { return parse_pattern_kind(s.str("pattern", "random-texture")); });
    cfg.data.pattern.period = s.real("period", cfg.data.pattern.period);
    if (s.has("seed")) cfg.data.pattern_seed = s.integer("seed", 0);
    cfg.data.pattern.channels = s.integer("channels", cfg.data.pattern.channels);
    cfg.data.velocity = s.vec2("velocity", cfg.data.velocity);
    cfg.data.frames = s.integer("frames", cfg.data.frames);
    cfg.data.height = s.integer("height", cfg.data.height);
    cfg.data.width = s.integer("width", cfg.data.width);
    if (s.has("path")) cfg.data.path = resolve(base_dir, s.str("path", ""));
    if (cfg.data.kind == DataSource::Kind::kImages && cfg.data.path.empty())
      throw ConfigError(std::string(source) + ": [data] path: required when source = images");
  }
  {
    auto s = reader("flow");
    const std::string kind = s.str("source", "ground-truth");
    if (kind == "ground-truth") {
      cfg.flow.kind = FlowSource::Kind::kGroundTruth;
      if (cfg.data.kind != DataSource::Kind::kSynth)
        throw ConfigError(std::string(source) + ": [flow] source: ground-truth flow needs synthetic data");
    } else if (kind == "horn-schunck") {
      cfg.flow.kind = FlowSource::Kind::kHornSchunck;
    } else if (kind == "constant") {
      cfg.flow.kind = FlowSource::Kind::kConstant;
    } else if (kind == "file") {
      cfg.flow.kind = FlowSource::Kind::kFile;
    } else {
      throw ConfigError(std::string(source) + ": [flow] source: unknown flow source '" + kind + "'");
    }
    cfg.flow.alpha = s.real("alpha", cfg.flow.alpha);
    cfg.flow.iters = s.integer("iters", cfg.flow.iters);
    cfg.flow.velocity = s.vec2("velocity", cfg.flow.velocity);
    if (s.has("path")) cfg.flow.path = resolve(base_dir, s.str("path", ""));
    if (cfg.flow.kind == FlowSource::Kind::kFile && cfg.flow.path.empty())
      throw ConfigError(std::string(source) + ": [flow] path: required when source = file");
  }
  {
    auto s = reader("action");
    cfg.scheme = s.guarded("scheme", [&] { return parse_motion_scheme(s.str("scheme", "transport")); });
    const std::string weighting = s.str("weighting", "uniform");
    if (weighting == "uniform") {
      cfg.weighting.kind = Weighting::Kind::kUniform;
    } else if (weighting == "exponential") {
      cfg.weighting.kind = Weighting::Kind::kExponential;
    } else {
      throw ConfigError(std::string(source) + ": [action] weighting: expected uniform or exponential");
    }
    cfg.weighting.gamma = s.real("gamma", cfg.weighting.gamma);
  }
  for (std::size_t z = 1;; ++z) {
    const std::string name = "layer" + std::to_string(z);
    if (!sections.count(name)) break;
    auto s = reader(name);
    LayerSpec layer;
    layer.n = s.integer("n", layer.n);
    layer.kernel = s.integer("kernel", layer.kernel);
    layer.mode = s.guarded("mode", [&] { return parse_constraint_mode(s.str("mode", "softmax")); });
    TrainConfig& t = layer.train;
    t.scheme = cfg.scheme;
    t.weighting = cfg.weighting;
    t.eta = s.real("eta", t.eta);
    t.steps = s.integer("steps", t.steps);
    if (s.has("dtau")) t.dtau = s.real("dtau", 0.0);
    t.lambda.motion = s.real("lambda_m", t.lambda.motion);
    t.lambda.spatial = s.real("lambda_p", t.lambda.spatial);
    t.lambda.temporal = s.real("lambda_k", t.lambda.temporal);
    t.lambda.constraint = s.real("lambda_c", t.lambda.constraint);
    t.window = s.integer("window", t.window);
    t.init_scale = s.real("init_scale", t.init_scale);
    cfg.layers.push_back(layer);
  }
  for (const auto& [name, sec] : sections)
    if (name.rfind("layer", 0) == 0 && std::stoul(name.substr(5)) > cfg.layers.size())
      throw ConfigError(std::string(source) + ": [" + name + "] is not preceded by [layer" +
                        std::to_string(cfg.layers.size() + 1) + "]");
  {
    auto s = reader("report");
    cfg.feature_maps = s.boolean("feature_maps", cfg.feature_maps);
  }
  {
    auto s = reader("eval");
    if (s.has("bank_dir")) cfg.bank_dir = resolve(base_dir, s.str("bank_dir", ""));
  }
  {
    auto s = reader("check-grad");
    cfg.gradcheck_instances = s.integer("instances", cfg.gradcheck_instances);
    cfg.gradcheck_eps = s.real("eps", cfg.gradcheck_eps);
  }

  for (auto& [name, sec] : sections)
    for (auto& [key, e] : sec)
      if (!e.used)
        throw ConfigError(std::string(source) + ":" + std::to_string(e.line) + ": unknown key '" + key +
                          "' in [" + name + "]");

  apply_seed(cfg, cfg.seed);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  return parse_config(in, path.string(), path.parent_path());
}

void apply_seed(ExperimentConfig& config, std::uint64_t seed) {
  config.seed = seed;
  for (std::size_t z = 0; z < config.layers.size(); ++z) config.layers[z].train.seed = config.layer_seed(z + 1);
}

void validate_paths(const ExperimentConfig& config) {
  if (config.data.kind == DataSource::Kind::kImages) {
    const auto first = expand_frame_pattern(config.data.path.string(), 0);
    if (!std::filesystem::exists(first)) throw ConfigError(first + ": input frame does not exist");
  }
  if (config.flow.kind == FlowSource::Kind::kFile && !std::filesystem::exists(config.flow.path))
    throw ConfigError(config.flow.path.string() + ": flow file does not exist");
}

}  // namespace motinv

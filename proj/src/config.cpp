#include "lims/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <sstream>

#include "lims/errors.hpp"

namespace lims {

namespace {

template <typename T>
T get(const YAML::Node& node, const char* key, T fallback) {
  const YAML::Node v = node[key];
  if (!v) return fallback;
  try {
    return v.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(std::string("invalid value for '") + key + "'");
  }
}

ChannelPreset parse_channel(const std::string& s) {
  if (s == "two_path_nonfading") return ChannelPreset::two_path_nonfading;
  if (s == "single_path_fading") return ChannelPreset::single_path_fading;
  if (s == "channel_a") return ChannelPreset::channel_a;
  if (s == "channel_b") return ChannelPreset::channel_b;
  if (s == "custom") return ChannelPreset::custom;
  throw ConfigError("unknown channel '" + s + "'");
}

PowerDelayProfile parse_profile(const YAML::Node& node, double chip) {
  PowerDelayProfile p;
  const std::string fading = get<std::string>(node, "fading", "rayleigh");
  if (fading == "none") {
    p.fading = Fading::none;
  } else if (fading == "rayleigh") {
    p.fading = Fading::rayleigh;
  } else {
    throw ConfigError("unknown fading '" + fading + "'");
  }
  const YAML::Node paths = node["paths"];
  if (!paths || !paths.IsSequence()) throw ConfigError("profile needs a 'paths' list");
  for (const auto& item : paths) {
    PathSpec s;
    s.power_db = get<double>(item, "power_db", 0.0);
    s.delay = get<double>(item, "delay_chips", 0.0) * chip;
    p.paths.push_back(s);
  }
  return p;
}

AlgorithmSpec parse_algorithm(const YAML::Node& node) {
  AlgorithmSpec a;
  const std::string kind = node.IsScalar() ? node.as<std::string>()
                                           : get<std::string>(node, "kind", "lims");
  if (kind == "lims") {
    a.kind = AlgorithmKind::lims;
  } else if (kind == "el_wide") {
    a.kind = AlgorithmKind::el_wide;
  } else if (kind == "el_narrow") {
    a.kind = AlgorithmKind::el_narrow;
  } else {
    throw ConfigError("unknown algorithm kind '" + kind + "'");
  }
  if (node.IsScalar()) return a;
  a.paths = get<int>(node, "paths", a.paths);
  a.whitening = get<bool>(node, "whitening", a.whitening);
  a.iterations = get<int>(node, "iterations", a.iterations);
  a.validation_threshold = get<double>(node, "threshold", a.validation_threshold);
  a.name = get<std::string>(node, "name", "");
  if (node["beta"]) a.beta = get<double>(node, "beta", 0.0);
  const std::string du = get<std::string>(node, "delay_update", "signed");
  if (du == "signed") {
    a.delay_update = DelayUpdate::signed_step;
  } else if (du == "plain") {
    a.delay_update = DelayUpdate::plain;
  } else {
    throw ConfigError("unknown delay_update '" + du + "'");
  }
  const std::string cu = get<std::string>(node, "coeff_update", "ls");
  if (cu == "ls") {
    a.coeff_update = CoefficientUpdate::exact_ls;
  } else if (cu == "gradient") {
    a.coeff_update = CoefficientUpdate::gradient;
  } else {
    throw ConfigError("unknown coeff_update '" + cu + "'");
  }
  const std::string init = get<std::string>(node, "init", "search");
  if (init == "grid") {
    a.initialization = Initialization::uniform_grid;
  } else if (init == "search") {
    a.initialization = Initialization::search;
  } else {
    throw ConfigError("unknown init '" + init + "'");
  }
  return a;
}

}  // namespace

TrackConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("YAML parse error: ") + e.what());
  }
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  if (!root.IsMap()) throw ConfigError("config root must be a mapping");

  TrackConfig tc;
  ExperimentConfig& c = tc.base;
  c.channel = parse_channel(get<std::string>(root, "channel", "two_path_nonfading"));
  if (root["profile"]) c.custom_profile = parse_profile(root["profile"], c.chip);
  if (c.channel == ChannelPreset::custom && c.custom_profile.paths.empty()) {
    throw ConfigError("channel 'custom' needs a 'profile' section");
  }
  if (root["cn0_dbhz"]) {
    c.cn0_sweep_dbhz = get<std::vector<double>>(root, "cn0_dbhz", {});
  }
  c.trials = get<int>(root, "trials", c.trials);
  c.seed = get<std::uint64_t>(root, "seed", c.seed);
  c.prn = get<int>(root, "prn", c.prn);
  c.el_iterations = get<int>(root, "el_iterations", c.el_iterations);
  c.ti = get<double>(root, "ti", c.ti);
  c.window = get<double>(root, "window_chips", c.window / c.chip) * c.chip;
  c.ts = get<double>(root, "ts_chips", c.ts / c.chip) * c.chip;
  if (root["bandwidth_hz"] && !root["bandwidth_hz"].IsNull()) {
    c.bandwidth = get<double>(root, "bandwidth_hz", 0.0);
  }
  c.waveform_oracle = get<bool>(root, "oracle", c.waveform_oracle);

  if (const YAML::Node algs = root["algorithms"]) {
    if (!algs.IsSequence()) throw ConfigError("'algorithms' must be a list");
    for (const auto& a : algs) c.algorithms.push_back(parse_algorithm(a));
  } else {
    c.algorithms = {AlgorithmSpec::lims_variant(2, true), AlgorithmSpec::lims_variant(2, false),
                    AlgorithmSpec::el(AlgorithmKind::el_wide),
                    AlgorithmSpec::el(AlgorithmKind::el_narrow)};
  }

  if (const YAML::Node t = root["track"]) {
    tc.cn0_dbhz = get<double>(t, "cn0_dbhz", tc.cn0_dbhz);
    tc.epochs = get<int>(t, "epochs", tc.epochs);
    tc.iterations_per_epoch = get<int>(t, "iterations_per_epoch", tc.iterations_per_epoch);
  }
  c.validate();
  return tc;
}

TrackConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace lims

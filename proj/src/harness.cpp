#include "lims/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "lims/csv.hpp"
#include "lims/discriminator.hpp"
#include "lims/errors.hpp"
#include "lims/waveform.hpp"

namespace lims {

namespace {

constexpr std::uint64_t kChannelStream = 0x6368616e6e656cULL;
constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;
constexpr std::uint64_t kTrackNoiseStream = 0x747261636bULL;

const char* csv_header = "algorithm,cn0_dbhz,mse_seconds2,mse_chips2,trials,failures";

}  // namespace

std::string AlgorithmSpec::label() const {
  if (!name.empty()) return name;
  switch (kind) {
    case AlgorithmKind::el_wide:
      return "el_wide";
    case AlgorithmKind::el_narrow:
      return "el_narrow";
    case AlgorithmKind::lims:
      break;
  }
  std::string s = "lims_m" + std::to_string(paths) + (whitening ? "_white" : "_nowhite");
  if (delay_update == DelayUpdate::plain) s += "_plain";
  if (coeff_update == CoefficientUpdate::gradient) s += "_gd";
  if (initialization == Initialization::uniform_grid) s += "_grid";
  return s;
}

LimsConfig AlgorithmSpec::lims_config() const {
  LimsConfig c;
  c.paths = paths;
  c.whitening = whitening;
  c.iterations = iterations;
  c.delay_update = delay_update;
  c.coeff_update = coeff_update;
  c.beta = beta;
  c.validation_threshold = validation_threshold;
  c.initialization = initialization;
  return c;
}

AlgorithmSpec AlgorithmSpec::lims_variant(int paths, bool whitening) {
  AlgorithmSpec s;
  s.kind = AlgorithmKind::lims;
  s.paths = paths;
  s.whitening = whitening;
  return s;
}

AlgorithmSpec AlgorithmSpec::el(AlgorithmKind kind) {
  AlgorithmSpec s;
  s.kind = kind;
  return s;
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (cn0_sweep_dbhz.empty()) throw ConfigError("C/N0 sweep is empty");
  if (algorithms.empty()) throw ConfigError("algorithm list is empty");
  if (!(ti > 0.0)) throw ConfigError("Ti must be > 0");
  if (!(chip > 0.0)) throw ConfigError("chip duration must be > 0");
  if (!(ts > 0.0) || !(window > 0.0)) throw ConfigError("window and Ts must be > 0");
  if (bandwidth && !(*bandwidth > 0.0)) throw ConfigError("bandwidth must be > 0");
  if (el_iterations < 0) throw ConfigError("el_iterations must be >= 0");
  try {
    const LagGrid g = grid();
    profile().validate();
    for (const auto& a : algorithms) {
      if (a.kind == AlgorithmKind::lims) a.lims_config().validate(g.size());
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

PowerDelayProfile ExperimentConfig::profile() const {
  switch (channel) {
    case ChannelPreset::two_path_nonfading:
      return two_path_nonfading(chip);
    case ChannelPreset::single_path_fading:
      return single_path_fading();
    case ChannelPreset::channel_a:
      return channel_a(chip);
    case ChannelPreset::channel_b:
      return channel_b(chip);
    case ChannelPreset::custom:
      break;
  }
  return custom_profile;
}

LagGrid ExperimentConfig::grid() const { return LagGrid::centered(window, ts); }

double ExperimentConfig::failure_penalty() const {
  const double half = 0.5 * window;
  return half * half;
}

Experiment::Experiment(ExperimentConfig config)
    : config_(std::move(config)), profile_(config_.profile()), grid_(config_.grid()),
      data_acf_(AcfModel::ideal(config_.chip)) {
  config_.validate();
  if (config_.bandwidth) data_acf_ = shared_bandlimited_acf(config_.chip, *config_.bandwidth);
  if (!config_.waveform_oracle) noise_.emplace(noise_covariance(grid_, data_acf_));
  for (const auto& a : config_.algorithms) {
    if (a.kind == AlgorithmKind::lims) {
      estimators_.emplace_back(std::in_place, grid_, config_.chip, a.lims_config());
    } else {
      estimators_.emplace_back(std::nullopt);
    }
  }
}

ChannelRealization Experiment::trial_channel(std::size_t trial) const {
  RandomStream rng = RandomStream::derive(config_.seed, kChannelStream, trial);
  ChannelRealization ch = realize(profile_, rng);
  const double offset = rng.uniform(-0.5 * config_.chip, 0.5 * config_.chip);
  return ch.shifted(offset - profile_.paths.front().delay);
}

CorrelatorObservation Experiment::trial_observation(std::size_t cn0_index,
                                                    std::size_t trial) const {
  const ChannelRealization ch = trial_channel(trial);
  // Noise draws are shared across the sweep (common random numbers).
  RandomStream rng = RandomStream::derive(config_.seed, kNoiseStream, trial);
  const double cn0 = config_.cn0_sweep_dbhz.at(cn0_index);
  if (config_.waveform_oracle) {
    const int spc = default_samples_per_chip(config_.bandwidth.has_value());
    return waveform_oracle(ch, config_.prn, config_.chip / spc, cn0, config_.ti, grid_,
                           config_.bandwidth, rng, Execution::serial);
  }
  return synthesize(ch, grid_, data_acf_, cn0, config_.ti, rng, *noise_);
}

TrialOutcome Experiment::run_trial(std::size_t cn0_index, std::size_t trial) const {
  const ChannelRealization ch = trial_channel(trial);
  const double truth = ch.delays[0];
  const CorrelatorObservation obs = trial_observation(cn0_index, trial);

  TrialOutcome out;
  const std::size_t n = config_.algorithms.size();
  out.squared_error.resize(n);
  out.failed.assign(n, false);
  for (std::size_t a = 0; a < n; ++a) {
    const AlgorithmSpec& spec = config_.algorithms[a];
    std::optional<double> estimate;
    if (spec.kind == AlgorithmKind::lims) {
      estimate = estimators_[a]->run(obs).first_arrival;
    } else {
      const ElMode mode = spec.kind == AlgorithmKind::el_wide ? ElMode::wide : ElMode::narrow;
      estimate = el_estimate(obs, ElConfig::of(mode, config_.chip), config_.el_iterations);
    }
    if (estimate) {
      const double e = *estimate - truth;
      out.squared_error[a] = e * e;
    } else {
      out.failed[a] = true;
      out.squared_error[a] = config_.failure_penalty();
    }
  }
  return out;
}

std::vector<ResultRow> Experiment::run(Execution exec) const {
  const std::size_t points = config_.cn0_sweep_dbhz.size();
  const auto trials = static_cast<std::size_t>(config_.trials);
  std::vector<TrialOutcome> outcomes(points * trials);
  const auto total = static_cast<std::ptrdiff_t>(outcomes.size());

  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t idx = 0; idx < total; ++idx) {
      const auto u = static_cast<std::size_t>(idx);
      outcomes[u] = run_trial(u / trials, u % trials);
    }
  } else {
    for (std::size_t u = 0; u < outcomes.size(); ++u) {
      outcomes[u] = run_trial(u / trials, u % trials);
    }
  }

  std::vector<ResultRow> rows;
  const double chip2 = config_.chip * config_.chip;
  for (std::size_t a = 0; a < config_.algorithms.size(); ++a) {
    for (std::size_t p = 0; p < points; ++p) {
      double sum = 0.0;
      int failures = 0;
      for (std::size_t t = 0; t < trials; ++t) {
        const TrialOutcome& o = outcomes[p * trials + t];
        sum += o.squared_error[a];
        failures += o.failed[a] ? 1 : 0;
      }
      const double mse = sum / static_cast<double>(trials);
      rows.push_back({config_.algorithms[a].label(), config_.cn0_sweep_dbhz[p], mse, mse / chip2,
                      config_.trials, failures});
    }
  }
  return rows;
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& config, Execution exec) {
  return Experiment(config).run(exec);
}

std::filesystem::path emit_results(std::span<const ResultRow> rows,
                                   const std::filesystem::path& csv_path) {
  if (rows.empty()) throw ConfigError("emit_results: no rows to write");
  {
    std::ofstream out(csv_path);
    if (!out) throw IoError("cannot open " + csv_path.string() + " for writing");
    out << csv_header << '\n';
    for (const auto& r : rows) {
      out << r.algorithm << ',' << csv::num(r.cn0_dbhz) << ',' << csv::num(r.mse_seconds2) << ','
          << csv::num(r.mse_chips2) << ',' << r.trial_count << ',' << r.failure_count << '\n';
    }
    if (!out) throw IoError("write failed for " + csv_path.string());
  }

  std::vector<std::string> algorithms;
  std::vector<double> cn0s;
  std::map<std::pair<std::string, double>, double> table;
  for (const auto& r : rows) {
    if (std::find(algorithms.begin(), algorithms.end(), r.algorithm) == algorithms.end()) {
      algorithms.push_back(r.algorithm);
    }
    if (std::find(cn0s.begin(), cn0s.end(), r.cn0_dbhz) == cn0s.end()) cn0s.push_back(r.cn0_dbhz);
    table[{r.algorithm, r.cn0_dbhz}] = r.mse_chips2;
  }
  std::filesystem::path dat = csv_path;
  dat.replace_extension(".dat");
  std::ofstream out(dat);
  if (!out) throw IoError("cannot open " + dat.string() + " for writing");
  out << "# cn0_dbhz";
  for (const auto& a : algorithms) out << ' ' << a;
  out << "   (MSE in chips^2)\n";
  for (double cn0 : cn0s) {
    out << csv::num(cn0);
    for (const auto& a : algorithms) {
      const auto it = table.find({a, cn0});
      out << ' ' << (it == table.end() ? std::string("nan") : csv::num(it->second));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + dat.string());
  return dat;
}

std::vector<ResultRow> parse_results(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw IoError("cannot open " + csv_path.string());
  std::string line;
  if (!std::getline(in, line) || csv::split(line) != csv::split(csv_header)) {
    throw IoError(csv_path.string() + ": unexpected header");
  }
  std::vector<ResultRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = csv::split(line);
    try {
      if (f.size() != 6) throw std::invalid_argument("expected 6 fields");
      rows.push_back({f[0], csv::parse_double(f[1]), csv::parse_double(f[2]),
                      csv::parse_double(f[3]), std::stoi(f[4]), std::stoi(f[5])});
    } catch (const std::exception& e) {
      throw IoError(csv_path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

std::vector<TrackRow> run_tracking(const TrackConfig& config, Execution exec) {
  ExperimentConfig base = config.base;
  base.cn0_sweep_dbhz = {config.cn0_dbhz};
  base.waveform_oracle = false;
  if (config.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (config.iterations_per_epoch < 0) throw ConfigError("iterations_per_epoch must be >= 0");
  const Experiment experiment(base);
  const LagGrid grid = base.grid();
  const AcfModel acf =
      base.bandwidth ? shared_bandlimited_acf(base.chip, *base.bandwidth) : AcfModel::ideal(base.chip);
  const CorrelatedNoise noise(noise_covariance(grid, acf));

  const std::size_t n_alg = base.algorithms.size();
  const auto trials = static_cast<std::size_t>(base.trials);
  const auto epochs = static_cast<std::size_t>(config.epochs);
  // squared[trial][alg * epochs + epoch]
  std::vector<std::vector<double>> squared(trials);

  auto one_trial = [&](std::size_t trial) {
    const ChannelRealization ch = experiment.trial_channel(trial);
    const double truth = ch.delays[0];
    std::vector<CorrelatorObservation> observations;
    observations.reserve(epochs);
    for (std::size_t e = 0; e < epochs; ++e) {
      RandomStream rng = RandomStream::derive(base.seed, kTrackNoiseStream + e, trial);
      observations.push_back(synthesize(ch, grid, acf, config.cn0_dbhz, base.ti, rng, noise));
    }
    std::vector<double> out(n_alg * epochs);
    for (std::size_t a = 0; a < n_alg; ++a) {
      const AlgorithmSpec& spec = base.algorithms[a];
      if (spec.kind == AlgorithmKind::lims) {
        const auto est = track(observations, spec.lims_config(), config.iterations_per_epoch);
        for (std::size_t e = 0; e < epochs; ++e) {
          const auto& fa = est[e].first_arrival;
          const double err = fa ? *fa - truth : 0.0;
          out[a * epochs + e] = fa ? err * err : base.failure_penalty();
        }
      } else {
        const ElMode mode = spec.kind == AlgorithmKind::el_wide ? ElMode::wide : ElMode::narrow;
        const DllTrack dll = dll_track(observations, ElConfig::of(mode, base.chip));
        for (std::size_t e = 0; e < epochs; ++e) {
          const double err = dll.estimates[e] - truth;
          out[a * epochs + e] = err * err;
        }
      }
    }
    squared[trial] = std::move(out);
  };

  if (exec == Execution::parallel) {
    const auto total = static_cast<std::ptrdiff_t>(trials);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t t = 0; t < total; ++t) one_trial(static_cast<std::size_t>(t));
  } else {
    for (std::size_t t = 0; t < trials; ++t) one_trial(t);
  }

  std::vector<TrackRow> rows;
  const double chip2 = base.chip * base.chip;
  for (std::size_t a = 0; a < n_alg; ++a) {
    for (std::size_t e = 0; e < epochs; ++e) {
      double sum = 0.0;
      for (std::size_t t = 0; t < trials; ++t) sum += squared[t][a * epochs + e];
      const double mse = sum / static_cast<double>(trials);
      rows.push_back({base.algorithms[a].label(), static_cast<int>(e + 1), mse, mse / chip2});
    }
  }
  return rows;
}

void write_track_csv(std::span<const TrackRow> rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "algorithm,epoch,mse_seconds2,mse_chips2\n";
  for (const auto& r : rows) {
    out << r.algorithm << ',' << r.epoch << ',' << csv::num(r.mse_seconds2) << ','
        << csv::num(r.mse_chips2) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace lims

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lims/channel.hpp"
#include "lims/estimator.hpp"
#include "lims/execution.hpp"
#include "lims/observation.hpp"

namespace lims {

enum class ChannelPreset { two_path_nonfading, single_path_fading, channel_a, channel_b, custom };

enum class AlgorithmKind { lims, el_wide, el_narrow };

struct AlgorithmSpec {
  AlgorithmKind kind = AlgorithmKind::lims;
  int paths = 1;
  bool whitening = true;
  int iterations = 500;
  DelayUpdate delay_update = DelayUpdate::signed_step;
  CoefficientUpdate coeff_update = CoefficientUpdate::exact_ls;
  std::optional<double> beta;
  double validation_threshold = 0.01;
  Initialization initialization = Initialization::search;
  std::string name;  // overrides label() when set

  /// e.g. "lims_m2_white", "lims_m1_nowhite_grid", "el_wide".
  std::string label() const;
  LimsConfig lims_config() const;

  static AlgorithmSpec lims_variant(int paths, bool whitening);
  static AlgorithmSpec el(AlgorithmKind kind);
};

struct ExperimentConfig {
  ChannelPreset channel = ChannelPreset::two_path_nonfading;
  PowerDelayProfile custom_profile;
  std::vector<double> cn0_sweep_dbhz{30, 40, 50, 60};
  int trials = 500;
  std::vector<AlgorithmSpec> algorithms;
  std::optional<double> bandwidth;  // Hz; none = ideal ACF
  double ti = 0.01;
  double chip = kGpsChip;
  double window = 3.0 * kGpsChip;
  double ts = 0.1 * kGpsChip;
  std::uint64_t seed = 1;
  bool waveform_oracle = false;
  int prn = 1;
  int el_iterations = 200;

  /// Throws ConfigError on an invalid configuration.
  void validate() const;
  PowerDelayProfile profile() const;
  LagGrid grid() const;
  /// Squared error charged to a trial with no valid first arrival: (window/2)^2.
  double failure_penalty() const;
};

struct ResultRow {
  std::string algorithm;
  double cn0_dbhz = 0.0;
  double mse_seconds2 = 0.0;
  double mse_chips2 = 0.0;
  int trial_count = 0;
  int failure_count = 0;

  bool operator==(const ResultRow&) const = default;
};

/// Squared first-arrival errors of every algorithm on one trial.
struct TrialOutcome {
  std::vector<double> squared_error;
  std::vector<bool> failed;
};

class Experiment {
 public:
  explicit Experiment(ExperimentConfig config);

  const ExperimentConfig& config() const { return config_; }

  /// Draws the trial's channel and first-arrival offset (independent of C/N0),
  /// synthesizes its observation and runs every algorithm on it.
  TrialOutcome run_trial(std::size_t cn0_index, std::size_t trial) const;

  /// The trial's shifted channel realization.
  ChannelRealization trial_channel(std::size_t trial) const;

  CorrelatorObservation trial_observation(std::size_t cn0_index, std::size_t trial) const;

  /// Trials in parallel (OpenMP) or serially; both reduce in trial order and
  /// give bitwise-identical rows.
  std::vector<ResultRow> run(Execution exec = Execution::parallel) const;

 private:
  ExperimentConfig config_;
  PowerDelayProfile profile_;
  LagGrid grid_;
  AcfModel data_acf_;
  std::optional<CorrelatedNoise> noise_;
  std::vector<std::optional<LimsEstimator>> estimators_;
};

std::vector<ResultRow> run_experiment(const ExperimentConfig& config,
                                      Execution exec = Execution::parallel);

/// CSV with header algorithm,cn0_dbhz,mse_seconds2,mse_chips2,trials,failures, plus a
/// whitespace-separated plot-data table (<stem>.dat: cn0 then one MSE-in-chips^2
/// column per algorithm). Returns the plot-data path. Throws IoError.
std::filesystem::path emit_results(std::span<const ResultRow> rows,
                                   const std::filesystem::path& csv_path);

std::vector<ResultRow> parse_results(const std::filesystem::path& csv_path);

struct TrackConfig {
  ExperimentConfig base;  // channel, grid, Ti, seed, trials, algorithms (lims + el)
  double cn0_dbhz = 40.0;
  int epochs = 50;
  int iterations_per_epoch = 5;
};

struct TrackRow {
  std::string algorithm;
  int epoch = 0;
  double mse_seconds2 = 0.0;
  double mse_chips2 = 0.0;

  bool operator==(const TrackRow&) const = default;
};

/// Static channel per trial, fresh noise each epoch; LIMS warm-starts across epochs
/// with the per-epoch budget, EL variants run one DLL update per epoch.
std::vector<TrackRow> run_tracking(const TrackConfig& config, Execution exec = Execution::parallel);

void write_track_csv(std::span<const TrackRow> rows, const std::filesystem::path& path);

}  // namespace lims

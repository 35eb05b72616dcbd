#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "lims/channel.hpp"
#include "lims/rng.hpp"
#include "lims/signal_model.hpp"

namespace lims {

/// Correlator lags in seconds, strictly increasing. Need not be uniform.
class LagGrid {
 public:
  explicit LagGrid(std::vector<double> lags);

  /// {first + n * step : n = 0..count-1}
  static LagGrid uniform(double first, double step, std::size_t count);

  /// Lags spaced `step` apart, symmetric about zero, spanning `width` inclusive.
  /// The default window (3 Tc at 0.1 Tc) gives 31 lags from -1.5 Tc to +1.5 Tc.
  static LagGrid centered(double width, double step);

  std::span<const double> lags() const { return lags_; }
  std::size_t size() const { return lags_.size(); }
  double operator[](std::size_t i) const { return lags_[i]; }
  double front() const { return lags_.front(); }
  double back() const { return lags_.back(); }

  /// Mean lag spacing (the sampling period for uniform grids).
  double spacing() const;

  bool operator==(const LagGrid& other) const { return lags_ == other.lags_; }

 private:
  std::vector<double> lags_;
};

struct CorrelatorObservation {
  Eigen::VectorXcd y;
  LagGrid grid;
  double noise_scale = 0.0;  // N0 / Ti
  AcfModel acf;
};

/// N0 for unit carrier power; +inf dBHz gives 0.
double noise_density(double cn0_dbhz);

/// [C]_{p,q} = R(zeta_p - zeta_q).
Eigen::MatrixXd noise_covariance(const LagGrid& grid, const AcfModel& acf);

/// Generator of CN(0, C) vectors from a fixed covariance.
///
/// Uses L = V diag(sqrt(max(lambda, 1e-10 lambda_max))) from the symmetric
/// eigendecomposition, so near-singular covariances on fine grids still factor.
class CorrelatedNoise {
 public:
  /// Throws SingularCovarianceError when the covariance cannot be factored.
  explicit CorrelatedNoise(const Eigen::MatrixXd& covariance);

  /// scale * L * z with z ~ CN(0, I).
  Eigen::VectorXcd draw(RandomStream& rng, double scale) const;

  const Eigen::MatrixXd& factor() const { return factor_; }

 private:
  Eigen::MatrixXd factor_;
};

/// y_n = sum_k gamma_k R(zeta_n - tau_k).
Eigen::VectorXcd noiseless_output(const ChannelRealization& channel, const LagGrid& grid,
                                  const AcfModel& acf);

/// Correlation-domain synthesis: noiseless output plus CN(0, (N0/Ti) C) noise.
/// cn0_dbhz = +inf yields a noiseless observation and draws nothing from rng.
CorrelatorObservation synthesize(const ChannelRealization& channel, const LagGrid& grid,
                                 const AcfModel& acf, double cn0_dbhz, double ti,
                                 RandomStream& rng);

/// As above with a pre-factored noise generator for (grid, acf).
CorrelatorObservation synthesize(const ChannelRealization& channel, const LagGrid& grid,
                                 const AcfModel& acf, double cn0_dbhz, double ti,
                                 RandomStream& rng, const CorrelatedNoise& noise);

/// CSV: "# noise_scale=<v>", "# acf=<ideal|bandlimited>", "# chip=<s>",
/// optional "# bandwidth=<hz>", then header lag_seconds,re,im and one row per lag.
void write_observation_csv(const CorrelatorObservation& obs, const std::filesystem::path& path);
CorrelatorObservation read_observation_csv(const std::filesystem::path& path);

}  // namespace lims

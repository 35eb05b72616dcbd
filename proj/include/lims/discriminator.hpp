#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lims/observation.hpp"
#include "lims/signal_model.hpp"

namespace lims {

/// |yE|^2 - |yL|^2
double el_discriminator(std::complex<double> early, std::complex<double> late);

/// Least-squares path coefficient from the early/late pair at t = 0: yE + yL.
std::complex<double> el_coefficient(std::complex<double> early, std::complex<double> late);

struct GeneralizedDiscConfig {
  int pairs = 1;              // P
  double sample_spacing = 0;  // Ts, seconds
  double chip = kGpsChip;
  bool whitening = true;

  /// P = floor(Tc/Ts + 1/2).
  static GeneralizedDiscConfig for_spacing(double ts, double chip, bool whitening = true);

  /// The 2P lags (2p+1) Ts / 2 for p = -P..P-1, ascending: yEP..yE1, yL1..yLP.
  std::vector<double> lags() const;
};

/// Whitened 2P-point discriminator: a single LIMS delay step from t = 0 with M = 1.
///
/// Delay derivatives are taken per chip, so with P = 1 and Ts = Tc the output is
/// exactly |yE1|^2 - |yL1|^2. Positive D means the path lies early.
class GeneralizedDiscriminator {
 public:
  GeneralizedDiscriminator(GeneralizedDiscConfig config, const AcfModel& acf);

  const GeneralizedDiscConfig& config() const { return config_; }
  const std::vector<double>& lags() const { return lags_; }

  /// Throws std::invalid_argument unless samples has 2P entries.
  double operator()(std::span<const std::complex<double>> samples) const;

  /// Coefficient estimate (A^T W A)^{-1} A^T W y at t = 0.
  std::complex<double> coefficient(std::span<const std::complex<double>> samples) const;

 private:
  GeneralizedDiscConfig config_;
  std::vector<double> lags_;
  Eigen::VectorXd a0_;      // A(0)
  Eigen::VectorXd slope0_;  // Tc * dR(zeta - t)/dt at t = 0
  Eigen::MatrixXd weight_;  // C^{-1}, or identity without whitening
};

double generalized_discriminator(std::span<const std::complex<double>> samples,
                                 const GeneralizedDiscConfig& config, const AcfModel& acf);

enum class ElMode { wide, narrow };

struct ElConfig {
  double spacing = kGpsChip;  // early-to-late distance, seconds
  double loop_gain = 0.1 * kGpsChip;
  double initial_delay = 0.0;
  bool normalize_power = true;   // divide D by the estimated |gamma|^2

  static ElConfig wide(double chip = kGpsChip);    // spacing Tc
  static ElConfig narrow(double chip = kGpsChip);  // spacing 0.2 Tc
  static ElConfig of(ElMode mode, double chip = kGpsChip);
};

/// A discriminator as a set of sampling lags plus a map from samples to D.
struct DiscriminatorProbe {
  std::string label;
  std::vector<double> lags;
  std::function<double(std::span<const std::complex<double>>)> evaluate;
};

DiscriminatorProbe el_probe(const ElConfig& config, const std::string& label);
DiscriminatorProbe generalized_probe(const GeneralizedDiscConfig& config, const AcfModel& acf,
                                     const std::string& label);

/// D at each code-phase offset for a noiseless unit path delayed by that offset.
std::vector<double> discriminator_response(const DiscriminatorProbe& probe,
                                           std::span<const double> offsets,
                                           const AcfModel& acf);

/// CSV with header offset_chips,D.
void write_response_csv(std::span<const double> offsets, std::span<const double> response,
                        double chip, const std::filesystem::path& path);

/// Correlator output at an arbitrary lag by linear interpolation on the grid.
std::complex<double> interpolate_output(const CorrelatorObservation& obs, double lag);

struct DllTrack {
  std::vector<double> estimates;  // delay after each epoch
  std::vector<bool> clamped;      // estimate hit the window limit this epoch
};

/// First-order delay-locked loop: per epoch, sample early/late at tau -/+ spacing/2,
/// then tau <- tau - loop_gain * D. tau stays where both samples fall in the window.
DllTrack dll_track(std::span<const CorrelatorObservation> observations, const ElConfig& config);

/// Runs the loop `iterations` times on a single observation (steady-state EL estimate).
double el_estimate(const CorrelatorObservation& obs, const ElConfig& config, int iterations);

}  // namespace lims

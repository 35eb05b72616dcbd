#include "lims/discriminator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <stdexcept>

#include "lims/csv.hpp"
#include "lims/errors.hpp"

namespace lims {

double el_discriminator(std::complex<double> early, std::complex<double> late) {
  return std::norm(early) - std::norm(late);
}

std::complex<double> el_coefficient(std::complex<double> early, std::complex<double> late) {
  return early + late;
}

GeneralizedDiscConfig GeneralizedDiscConfig::for_spacing(double ts, double chip, bool whitening) {
  if (!(ts > 0.0) || !(chip > 0.0)) {
    throw std::invalid_argument("GeneralizedDiscConfig: spacing and chip must be > 0");
  }
  GeneralizedDiscConfig c;
  c.sample_spacing = ts;
  c.chip = chip;
  c.whitening = whitening;
  c.pairs = static_cast<int>(std::floor(chip / ts + 0.5));
  if (c.pairs < 1) throw std::invalid_argument("GeneralizedDiscConfig: Ts too large for P >= 1");
  return c;
}

std::vector<double> GeneralizedDiscConfig::lags() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(2 * pairs));
  for (int p = -pairs; p < pairs; ++p) out.push_back((2 * p + 1) * sample_spacing / 2.0);
  return out;
}

GeneralizedDiscriminator::GeneralizedDiscriminator(GeneralizedDiscConfig config,
                                                   const AcfModel& acf)
    : config_(config), lags_(config.lags()) {
  if (config_.pairs < 1) throw std::invalid_argument("GeneralizedDiscriminator: P must be >= 1");
  const auto n = static_cast<Eigen::Index>(lags_.size());
  a0_.resize(n);
  slope0_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lag = lags_[static_cast<std::size_t>(i)];
    a0_[i] = acf.value(lag);
    slope0_[i] = config_.chip * acf.delay_derivative(lag);
  }
  if (config_.whitening) {
    const Eigen::MatrixXd c = noise_covariance(LagGrid(lags_), acf);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(c);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      throw SingularCovarianceError("generalized discriminator: covariance not positive definite");
    }
    weight_ = ldlt.solve(Eigen::MatrixXd::Identity(n, n));
    weight_ = 0.5 * (weight_ + weight_.transpose());
  } else {
    weight_ = Eigen::MatrixXd::Identity(n, n);
  }
}

std::complex<double> GeneralizedDiscriminator::coefficient(
    std::span<const std::complex<double>> samples) const {
  if (samples.size() != lags_.size()) {
    throw std::invalid_argument("generalized discriminator: expected 2P samples");
  }
  const Eigen::Map<const Eigen::VectorXcd> y(samples.data(), static_cast<Eigen::Index>(samples.size()));
  const Eigen::VectorXd wa = weight_ * a0_;
  return (wa.cast<std::complex<double>>().dot(y)) / wa.dot(a0_);
}

double GeneralizedDiscriminator::operator()(std::span<const std::complex<double>> samples) const {
  const std::complex<double> c = coefficient(samples);
  const Eigen::Map<const Eigen::VectorXcd> y(samples.data(), static_cast<Eigen::Index>(samples.size()));
  const Eigen::VectorXcd residual = y - c * a0_.cast<std::complex<double>>();
  const Eigen::VectorXd wb = weight_ * slope0_;
  // B(c, 0) = c * slope0, so B^H W r = conj(c) * slope0^T W r.
  return -(std::conj(c) * wb.cast<std::complex<double>>().dot(residual)).real();
}

double generalized_discriminator(std::span<const std::complex<double>> samples,
                                 const GeneralizedDiscConfig& config, const AcfModel& acf) {
  return GeneralizedDiscriminator(config, acf)(samples);
}

ElConfig ElConfig::wide(double chip) {
  ElConfig c;
  c.spacing = chip;
  c.loop_gain = 0.1 * chip;
  return c;
}

ElConfig ElConfig::narrow(double chip) {
  ElConfig c;
  c.spacing = 0.2 * chip;
  c.loop_gain = 0.1 * chip;
  return c;
}

ElConfig ElConfig::of(ElMode mode, double chip) {
  return mode == ElMode::wide ? wide(chip) : narrow(chip);
}

DiscriminatorProbe el_probe(const ElConfig& config, const std::string& label) {
  return {label,
          {-0.5 * config.spacing, 0.5 * config.spacing},
          [](std::span<const std::complex<double>> s) { return el_discriminator(s[0], s[1]); }};
}

DiscriminatorProbe generalized_probe(const GeneralizedDiscConfig& config, const AcfModel& acf,
                                     const std::string& label) {
  auto disc = std::make_shared<GeneralizedDiscriminator>(config, acf);
  return {label, disc->lags(),
          [disc](std::span<const std::complex<double>> s) { return (*disc)(s); }};
}

std::vector<double> discriminator_response(const DiscriminatorProbe& probe,
                                           std::span<const double> offsets,
                                           const AcfModel& acf) {
  std::vector<double> out;
  out.reserve(offsets.size());
  std::vector<std::complex<double>> samples(probe.lags.size());
  for (double offset : offsets) {
    for (std::size_t j = 0; j < probe.lags.size(); ++j) {
      samples[j] = acf.value(probe.lags[j] - offset);
    }
    out.push_back(probe.evaluate(samples));
  }
  return out;
}

void write_response_csv(std::span<const double> offsets, std::span<const double> response,
                        double chip, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "offset_chips,D\n";
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    out << csv::num(offsets[i] / chip) << ',' << csv::num(response[i]) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::complex<double> interpolate_output(const CorrelatorObservation& obs, double lag) {
  const auto lags = obs.grid.lags();
  if (lag <= lags.front()) return obs.y[0];
  if (lag >= lags.back()) return obs.y[obs.y.size() - 1];
  const auto it = std::upper_bound(lags.begin(), lags.end(), lag);
  const auto hi = static_cast<Eigen::Index>(it - lags.begin());
  const Eigen::Index lo = hi - 1;
  const double f = (lag - lags[static_cast<std::size_t>(lo)]) /
                   (lags[static_cast<std::size_t>(hi)] - lags[static_cast<std::size_t>(lo)]);
  return (1.0 - f) * obs.y[lo] + f * obs.y[hi];
}

namespace {

struct LoopStep {
  double delay;
  bool clamped;
};

LoopStep dll_step(const CorrelatorObservation& obs, const ElConfig& config, double tau) {
  const double half = 0.5 * config.spacing;
  const std::complex<double> early = interpolate_output(obs, tau - half);
  const std::complex<double> late = interpolate_output(obs, tau + half);
  double d = el_discriminator(early, late);
  if (config.normalize_power) {
    const double peak = 2.0 * std::max(1.0 - half / obs.acf.chip(), 1e-3);
    const double power = std::norm(el_coefficient(early, late)) / (peak * peak);
    d /= std::max(power, 1e-6);
  }
  const double lo = obs.grid.front() + half;
  const double hi = obs.grid.back() - half;
  const double next = tau - config.loop_gain * d;
  const double clamped = std::clamp(next, lo, hi);
  return {clamped, clamped != next};
}

}  // namespace

DllTrack dll_track(std::span<const CorrelatorObservation> observations, const ElConfig& config) {
  if (!(config.spacing > 0.0)) throw std::invalid_argument("dll_track: spacing must be > 0");
  DllTrack out;
  double tau = config.initial_delay;
  for (const auto& obs : observations) {
    const LoopStep s = dll_step(obs, config, tau);
    tau = s.delay;
    out.estimates.push_back(tau);
    out.clamped.push_back(s.clamped);
  }
  return out;
}

double el_estimate(const CorrelatorObservation& obs, const ElConfig& config, int iterations) {
  double tau = config.initial_delay;
  for (int i = 0; i < iterations; ++i) tau = dll_step(obs, config, tau).delay;
  return tau;
}

}  // namespace lims

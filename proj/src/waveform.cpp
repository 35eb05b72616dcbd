#include "lims/waveform.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

namespace lims {

namespace {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

long chip_index(const ChipSequence& code, double t) {
  return static_cast<long>(std::floor(t * code.chip_rate));
}

double chip_value(const ChipSequence& code, long j) {
  const long n = code.period();
  long r = j % n;
  if (r < 0) r += n;
  return code.chips[static_cast<std::size_t>(r)];
}

std::complex<double> correlate_one_segmented(std::span<const std::complex<double>> x,
                                             std::span<const std::complex<double>> prefix,
                                             const ChipSequence& code, double ts, double lag) {
  const auto count = static_cast<long>(x.size());
  const double tc = code.chip_duration();
  auto chip_of = [&](long i) {
    return chip_index(code, (static_cast<double>(i) + 0.5) * ts - lag);
  };
  // First sample index whose chip is >= j, found from an estimate and corrected
  // against the predicate used by the direct correlator.
  auto first_sample = [&](long j) {
    long i = static_cast<long>(std::ceil((static_cast<double>(j) * tc + lag) / ts - 0.5));
    i = std::clamp(i, 0L, count);
    while (i > 0 && chip_of(i - 1) >= j) --i;
    while (i < count && chip_of(i) < j) ++i;
    return i;
  };
  const long j_first = chip_of(0);
  const long j_last = chip_of(count - 1);
  std::complex<double> acc = 0.0;
  long start = 0;
  for (long j = j_first; j <= j_last; ++j) {
    const long end = j == j_last ? count : first_sample(j + 1);
    acc += chip_value(code, j) *
           (prefix[static_cast<std::size_t>(end)] - prefix[static_cast<std::size_t>(start)]);
    start = end;
  }
  return acc / static_cast<double>(count);
}

}  // namespace

int default_samples_per_chip(bool bandlimited) { return bandlimited ? 80 : 20; }

double chip_at(const ChipSequence& code, double t) {
  return chip_value(code, chip_index(code, t));
}

std::vector<std::complex<double>> received_waveform(const ChannelRealization& channel,
                                                    const ChipSequence& code, double ts,
                                                    std::size_t count) {
  std::vector<std::complex<double>> out(count, 0.0);
  for (Eigen::Index k = 0; k < channel.size(); ++k) {
    const std::complex<double> g = channel.coefficients[k];
    const double tau = channel.delays[k];
    for (std::size_t i = 0; i < count; ++i) {
      out[i] += g * chip_at(code, (static_cast<double>(i) + 0.5) * ts - tau);
    }
  }
  return out;
}

void apply_lowpass(std::vector<std::complex<double>>& samples, double ts, double bandwidth) {
  const auto n = static_cast<int>(samples.size());
  auto* data = reinterpret_cast<fftw_complex*>(samples.data());
  fftw_plan forward;
  fftw_plan backward;
  {
    const std::lock_guard lock(fftw_planner_mutex());
    forward = fftw_plan_dft_1d(n, data, data, FFTW_FORWARD, FFTW_ESTIMATE);
    backward = fftw_plan_dft_1d(n, data, data, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  fftw_execute(forward);
  const double df = 1.0 / (static_cast<double>(n) * ts);
  const double cutoff = 0.5 * bandwidth;
  for (int k = 0; k < n; ++k) {
    const int signed_k = k <= n / 2 ? k : k - n;
    if (std::abs(static_cast<double>(signed_k) * df) > cutoff) samples[static_cast<std::size_t>(k)] = 0.0;
  }
  fftw_execute(backward);
  const double inv = 1.0 / static_cast<double>(n);
  for (auto& s : samples) s *= inv;
  {
    const std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
  }
}

std::vector<std::complex<double>> correlate_direct(std::span<const std::complex<double>> x,
                                                   const ChipSequence& code, double ts,
                                                   std::span<const double> lags) {
  std::vector<std::complex<double>> out(lags.size());
  for (std::size_t p = 0; p < lags.size(); ++p) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      acc += x[i] * chip_at(code, (static_cast<double>(i) + 0.5) * ts - lags[p]);
    }
    out[p] = acc / static_cast<double>(x.size());
  }
  return out;
}

std::vector<std::complex<double>> correlate_segmented(std::span<const std::complex<double>> x,
                                                      const ChipSequence& code, double ts,
                                                      std::span<const double> lags,
                                                      Execution exec) {
  std::vector<std::complex<double>> prefix(x.size() + 1);
  prefix[0] = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) prefix[i + 1] = prefix[i] + x[i];

  std::vector<std::complex<double>> out(lags.size());
  const auto n = static_cast<std::ptrdiff_t>(lags.size());
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < n; ++p) {
      const auto u = static_cast<std::size_t>(p);
      out[u] = correlate_one_segmented(x, prefix, code, ts, lags[u]);
    }
  } else {
    for (std::size_t p = 0; p < lags.size(); ++p) {
      out[p] = correlate_one_segmented(x, prefix, code, ts, lags[p]);
    }
  }
  return out;
}

CorrelatorObservation waveform_oracle(const ChannelRealization& channel, int prn,
                                      double ts_wave, double cn0_dbhz, double ti,
                                      const LagGrid& grid, std::optional<double> bandwidth,
                                      RandomStream& rng, Execution exec) {
  const ChipSequence code = gen_ca_code(prn);
  const double tc = code.chip_duration();
  if (!(ts_wave > 0.0) || ts_wave > tc / 8.0 * (1.0 + 1e-12)) {
    throw std::invalid_argument("waveform_oracle: sample period must be in (0, Tc/8]");
  }
  const double code_period = tc * code.period();
  const double periods = ti / code_period;
  if (!(ti > 0.0) || periods < 0.5 || std::abs(periods - std::round(periods)) > 1e-6 * periods) {
    throw std::invalid_argument("waveform_oracle: Ti must be a whole number of code periods");
  }
  const double samples = ti / ts_wave;
  const auto count = static_cast<std::size_t>(std::llround(samples));
  if (std::abs(samples - static_cast<double>(count)) > 1e-6 * samples) {
    throw std::invalid_argument("waveform_oracle: Ti must be an integer number of samples");
  }
  if (bandwidth && !(*bandwidth > 0.0)) {
    throw std::invalid_argument("waveform_oracle: bandwidth must be > 0");
  }

  auto eta = received_waveform(channel, code, ts_wave, count);
  const double n0 = noise_density(cn0_dbhz);
  if (n0 > 0.0) {
    const double sigma = std::sqrt(n0 / ts_wave);
    for (auto& v : eta) v += sigma * rng.complex_normal();
  }
  if (bandwidth) apply_lowpass(eta, ts_wave, *bandwidth);

  const auto corr = correlate_segmented(eta, code, ts_wave, grid.lags(), exec);
  Eigen::VectorXcd y(static_cast<Eigen::Index>(corr.size()));
  for (std::size_t p = 0; p < corr.size(); ++p) y[static_cast<Eigen::Index>(p)] = corr[p];
  AcfModel acf = bandwidth ? shared_bandlimited_acf(tc, *bandwidth) : AcfModel::ideal(tc);
  return {y, grid, n0 / ti, acf};
}

}  // namespace lims

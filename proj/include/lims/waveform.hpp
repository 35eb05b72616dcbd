#pragma once

#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "lims/channel.hpp"
#include "lims/execution.hpp"
#include "lims/observation.hpp"
#include "lims/signal_model.hpp"

namespace lims {

/// 20 samples/chip unfiltered, 80 with a band limit. Both keep a 0.1 Tc lag
/// grid aligned with the sample instants.
int default_samples_per_chip(bool bandlimited);

/// Periodic chip value s(t) of `code`.
double chip_at(const ChipSequence& code, double t);

/// sum_k gamma_k s(t_i - tau_k) at t_i = (i + 1/2) ts, i = 0..count-1.
std::vector<std::complex<double>> received_waveform(const ChannelRealization& channel,
                                                    const ChipSequence& code, double ts,
                                                    std::size_t count);

/// Ideal low-pass of two-sided `bandwidth` applied circularly through FFTW.
void apply_lowpass(std::vector<std::complex<double>>& samples, double ts, double bandwidth);

/// out_p = (1/count) sum_i x_i s(t_i - lag_p). Serial reference, O(count * lags).
std::vector<std::complex<double>> correlate_direct(std::span<const std::complex<double>> x,
                                                   const ChipSequence& code, double ts,
                                                   std::span<const double> lags);

/// Same result through prefix sums over chip segments, O(count + chips * lags), lags
/// distributed across OpenMP threads when exec is parallel.
std::vector<std::complex<double>> correlate_segmented(std::span<const std::complex<double>> x,
                                                      const ChipSequence& code, double ts,
                                                      std::span<const double> lags,
                                                      Execution exec = Execution::parallel);

/// Waveform-domain synthesis of a correlator observation: delayed and scaled code
/// replicas plus white noise of density N0, optionally band-limited, correlated
/// against the clean replica over Ti and sampled at the grid lags.
///
/// Throws std::invalid_argument unless ts_wave <= Tc/8 and Ti spans a whole number
/// of code periods sampled by an integer number of ts_wave steps.
CorrelatorObservation waveform_oracle(const ChannelRealization& channel, int prn,
                                      double ts_wave, double cn0_dbhz, double ti,
                                      const LagGrid& grid, std::optional<double> bandwidth,
                                      RandomStream& rng, Execution exec = Execution::parallel);

}  // namespace lims

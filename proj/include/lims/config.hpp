#pragma once

#include <filesystem>
#include <string>

#include "lims/harness.hpp"

namespace lims {

/// YAML experiment description. Keys (all optional):
///
///   channel: two_path_nonfading | single_path_fading | channel_a | channel_b | custom
///   profile: {fading: none | rayleigh, paths: [{power_db, delay_chips}, ...]}
///   cn0_dbhz: [30, 40, 50, 60]
///   trials, seed, prn, el_iterations
///   ti, window_chips, ts_chips, bandwidth_hz, oracle
///   algorithms: [{kind: lims | el_wide | el_narrow, paths, whitening, iterations,
///                 delay_update: signed | plain, coeff_update: ls | gradient,
///                 init: search | grid, beta, threshold, name}, ...]
///   track: {cn0_dbhz, epochs, iterations_per_epoch}
///
/// Throws ConfigError naming the offending key.
TrackConfig parse_config(const std::string& yaml_text);
TrackConfig load_config(const std::filesystem::path& path);

}  // namespace lims

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "lims/rng.hpp"
#include "lims/signal_model.hpp"

namespace lims {

enum class Fading { none, rayleigh };

struct PathSpec {
  double power_db = 0.0;
  double delay = 0.0;  // seconds
};

/// Average power and delay per path. Delays strictly increasing.
struct PowerDelayProfile {
  std::vector<PathSpec> paths;
  Fading fading = Fading::rayleigh;

  /// Throws std::invalid_argument on an empty or unordered profile.
  void validate() const;

  /// Linear path powers scaled to unit total.
  std::vector<double> normalized_powers() const;
};

/// Complex path coefficients and delays of one channel draw.
struct ChannelRealization {
  Eigen::VectorXcd coefficients;
  Eigen::VectorXd delays;

  Eigen::Index size() const { return delays.size(); }

  /// Same coefficients with every delay moved by `offset`.
  ChannelRealization shifted(double offset) const;
};

/// Rayleigh: gamma_k ~ CN(0, p_k) with sum p_k = 1. No fading: gamma_k = sqrt(p_k).
ChannelRealization realize(const PowerDelayProfile& profile, RandomStream& rng);

PowerDelayProfile two_path_nonfading(double chip = kGpsChip);
PowerDelayProfile single_path_fading();
PowerDelayProfile channel_a(double chip = kGpsChip);
PowerDelayProfile channel_b(double chip = kGpsChip);

}  // namespace lims

#include "lims/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace lims {

void PowerDelayProfile::validate() const {
  if (paths.empty()) throw std::invalid_argument("power-delay profile has no paths");
  for (std::size_t k = 1; k < paths.size(); ++k) {
    if (!(paths[k].delay > paths[k - 1].delay)) {
      throw std::invalid_argument("power-delay profile delays must be strictly increasing");
    }
  }
  for (const auto& p : paths) {
    if (!std::isfinite(p.power_db) || !std::isfinite(p.delay)) {
      throw std::invalid_argument("power-delay profile entries must be finite");
    }
  }
}

std::vector<double> PowerDelayProfile::normalized_powers() const {
  std::vector<double> p;
  p.reserve(paths.size());
  double total = 0.0;
  for (const auto& path : paths) {
    p.push_back(std::pow(10.0, path.power_db / 10.0));
    total += p.back();
  }
  for (auto& v : p) v /= total;
  return p;
}

ChannelRealization ChannelRealization::shifted(double offset) const {
  ChannelRealization out = *this;
  out.delays.array() += offset;
  return out;
}

ChannelRealization realize(const PowerDelayProfile& profile, RandomStream& rng) {
  profile.validate();
  const auto powers = profile.normalized_powers();
  const auto k = static_cast<Eigen::Index>(powers.size());
  ChannelRealization ch;
  ch.coefficients.resize(k);
  ch.delays.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double p = powers[static_cast<std::size_t>(i)];
    ch.delays[i] = profile.paths[static_cast<std::size_t>(i)].delay;
    if (profile.fading == Fading::rayleigh) {
      ch.coefficients[i] = std::sqrt(p) * rng.complex_normal();
    } else {
      ch.coefficients[i] = std::sqrt(p);
    }
  }
  return ch;
}

PowerDelayProfile two_path_nonfading(double chip) {
  return {{{0.0, 0.0}, {0.0, 0.5 * chip}}, Fading::none};
}

PowerDelayProfile single_path_fading() {
  return {{{0.0, 0.0}}, Fading::rayleigh};
}

PowerDelayProfile channel_a(double chip) {
  return {{{-7.0, 0.0}, {0.0, 0.3 * chip}, {-2.2, 0.5 * chip}}, Fading::rayleigh};
}

PowerDelayProfile channel_b(double chip) {
  return {{{-7.0, 0.0}, {-7.0, 0.2 * chip}, {0.0, 0.4 * chip}, {-2.2, 0.6 * chip}},
          Fading::rayleigh};
}

}  // namespace lims

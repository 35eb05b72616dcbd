#include "lims/observation.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include "lims/csv.hpp"
#include "lims/errors.hpp"

namespace lims {

LagGrid::LagGrid(std::vector<double> lags) : lags_(std::move(lags)) {
  if (lags_.empty()) throw std::invalid_argument("LagGrid: no lags");
  for (std::size_t i = 0; i < lags_.size(); ++i) {
    if (!std::isfinite(lags_[i])) throw std::invalid_argument("LagGrid: non-finite lag");
    if (i > 0 && !(lags_[i] > lags_[i - 1])) {
      throw std::invalid_argument("LagGrid: lags must be strictly increasing");
    }
  }
}

LagGrid LagGrid::uniform(double first, double step, std::size_t count) {
  if (!(step > 0.0)) throw std::invalid_argument("LagGrid: step must be > 0");
  std::vector<double> lags(count);
  for (std::size_t n = 0; n < count; ++n) lags[n] = first + static_cast<double>(n) * step;
  return LagGrid(std::move(lags));
}

LagGrid LagGrid::centered(double width, double step) {
  if (!(step > 0.0) || !(width >= 0.0)) {
    throw std::invalid_argument("LagGrid: width must be >= 0 and step > 0");
  }
  const auto half = static_cast<long>(std::llround(0.5 * width / step));
  std::vector<double> lags;
  lags.reserve(static_cast<std::size_t>(2 * half + 1));
  for (long n = -half; n <= half; ++n) lags.push_back(static_cast<double>(n) * step);
  return LagGrid(std::move(lags));
}

double LagGrid::spacing() const {
  if (lags_.size() < 2) return 0.0;
  return (lags_.back() - lags_.front()) / static_cast<double>(lags_.size() - 1);
}

double noise_density(double cn0_dbhz) {
  if (std::isinf(cn0_dbhz) && cn0_dbhz > 0) return 0.0;
  return std::pow(10.0, -cn0_dbhz / 10.0);
}

Eigen::MatrixXd noise_covariance(const LagGrid& grid, const AcfModel& acf) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index p = 0; p < n; ++p) {
    c(p, p) = acf.value(0.0);
    for (Eigen::Index q = p + 1; q < n; ++q) {
      const double v = acf.value(grid[static_cast<std::size_t>(p)] -
                                 grid[static_cast<std::size_t>(q)]);
      c(p, q) = v;
      c(q, p) = v;
    }
  }
  return c;
}

CorrelatedNoise::CorrelatedNoise(const Eigen::MatrixXd& covariance) {
  if (!covariance.allFinite()) {
    throw SingularCovarianceError("noise covariance has non-finite entries");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance);
  if (eig.info() != Eigen::Success) {
    throw SingularCovarianceError("eigendecomposition of noise covariance failed");
  }
  const double top = eig.eigenvalues().maxCoeff();
  if (!(top > 0.0)) throw SingularCovarianceError("noise covariance has no positive spectrum");
  const double floor = 1e-10 * top;
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(floor).cwiseSqrt();
  factor_ = eig.eigenvectors() * root.asDiagonal();
}

Eigen::VectorXcd CorrelatedNoise::draw(RandomStream& rng, double scale) const {
  Eigen::VectorXcd z(factor_.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.complex_normal();
  return scale * (factor_ * z);
}

Eigen::VectorXcd noiseless_output(const ChannelRealization& channel, const LagGrid& grid,
                                  const AcfModel& acf) {
  Eigen::VectorXcd y = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(grid.size()));
  for (Eigen::Index n = 0; n < y.size(); ++n) {
    const double lag = grid[static_cast<std::size_t>(n)];
    for (Eigen::Index k = 0; k < channel.size(); ++k) {
      y[n] += channel.coefficients[k] * acf.value(lag - channel.delays[k]);
    }
  }
  return y;
}

namespace {

CorrelatorObservation synthesize_impl(const ChannelRealization& channel, const LagGrid& grid,
                                      const AcfModel& acf, double cn0_dbhz, double ti,
                                      RandomStream& rng, const CorrelatedNoise* noise) {
  if (!(ti > 0.0)) throw std::invalid_argument("synthesize: Ti must be > 0");
  CorrelatorObservation obs{noiseless_output(channel, grid, acf), grid,
                            noise_density(cn0_dbhz) / ti, acf};
  if (obs.noise_scale > 0.0) {
    if (noise != nullptr) {
      obs.y += noise->draw(rng, std::sqrt(obs.noise_scale));
    } else {
      const CorrelatedNoise local(noise_covariance(grid, acf));
      obs.y += local.draw(rng, std::sqrt(obs.noise_scale));
    }
  }
  return obs;
}

}  // namespace

CorrelatorObservation synthesize(const ChannelRealization& channel, const LagGrid& grid,
                                 const AcfModel& acf, double cn0_dbhz, double ti,
                                 RandomStream& rng) {
  return synthesize_impl(channel, grid, acf, cn0_dbhz, ti, rng, nullptr);
}

CorrelatorObservation synthesize(const ChannelRealization& channel, const LagGrid& grid,
                                 const AcfModel& acf, double cn0_dbhz, double ti,
                                 RandomStream& rng, const CorrelatedNoise& noise) {
  return synthesize_impl(channel, grid, acf, cn0_dbhz, ti, rng, &noise);
}

void write_observation_csv(const CorrelatorObservation& obs, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "# noise_scale=" << csv::num(obs.noise_scale) << '\n';
  out << "# acf=" << (obs.acf.kind() == AcfKind::ideal ? "ideal" : "bandlimited") << '\n';
  out << "# chip=" << csv::num(obs.acf.chip()) << '\n';
  if (auto bw = obs.acf.bandwidth()) out << "# bandwidth=" << csv::num(*bw) << '\n';
  out << "lag_seconds,re,im\n";
  for (Eigen::Index n = 0; n < obs.y.size(); ++n) {
    out << csv::num(obs.grid[static_cast<std::size_t>(n)]) << ',' << csv::num(obs.y[n].real())
        << ',' << csv::num(obs.y[n].imag()) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

CorrelatorObservation read_observation_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  double noise_scale = 0.0;
  double chip = kGpsChip;
  std::string kind = "ideal";
  std::optional<double> bandwidth;
  std::vector<double> lags;
  std::vector<std::complex<double>> values;
  std::string line;
  bool header_seen = false;
  std::size_t line_no = 0;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      if (line[0] == '#') {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(1, eq - 1);
        while (!key.empty() && key.front() == ' ') key.erase(0, 1);
        const std::string val = line.substr(eq + 1);
        if (key == "noise_scale") noise_scale = csv::parse_double(val);
        else if (key == "chip") chip = csv::parse_double(val);
        else if (key == "bandwidth") bandwidth = csv::parse_double(val);
        else if (key == "acf") kind = val;
        continue;
      }
      if (!header_seen) {
        header_seen = true;
        continue;
      }
      const auto f = csv::split(line);
      if (f.size() != 3) throw std::invalid_argument("expected 3 fields");
      lags.push_back(csv::parse_double(f[0]));
      values.emplace_back(csv::parse_double(f[1]), csv::parse_double(f[2]));
    }
  } catch (const std::invalid_argument& e) {
    throw IoError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
  }
  AcfModel acf = AcfModel::ideal(chip);
  if (kind == "bandlimited") {
    if (!bandwidth) throw IoError(path.string() + ": bandlimited ACF without bandwidth");
    acf = shared_bandlimited_acf(chip, *bandwidth);
  }
  Eigen::VectorXcd y(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) y[static_cast<Eigen::Index>(i)] = values[i];
  return {y, LagGrid(std::move(lags)), noise_scale, acf};
}

}  // namespace lims

#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <vector>

#include "lims/channel.hpp"
#include "lims/observation.hpp"

namespace lims {

struct CrbInput {
  ChannelRealization channel;
  LagGrid grid;
  AcfModel acf;
  double n0 = 0.0;
  double ti = 0.0;
};

/// Inverse Fisher information (N0 / 2Ti) (Re{D^H C^-1 D})^-1 with D = [A(t) B(c, t)],
/// ordered [coefficients..., delays...]. Throws SingularFisherError when D is
/// rank deficient and std::invalid_argument when N0 or Ti is not positive.
Eigen::MatrixXd fisher_inverse(const CrbInput& input);

/// Bound on the first-path delay MSE in seconds^2: element (K, K), zero-based.
double crb_first_path(const CrbInput& input);

struct CrbPoint {
  double cn0_dbhz;
  double crb_seconds2;
};

/// CRB over a C/N0 sweep for one channel.
std::vector<CrbPoint> crb_curve(const ChannelRealization& channel, const LagGrid& grid,
                                const AcfModel& acf, double ti, std::span<const double> cn0_dbhz);

/// CRB averaged over `offsets` first-arrival shifts of `channel` evenly spread on
/// [-Tc/2, Tc/2): the bound for the MSE averaged over a uniformly placed first path.
std::vector<CrbPoint> crb_curve_offset_averaged(const ChannelRealization& channel,
                                                const LagGrid& grid, const AcfModel& acf,
                                                double ti, std::span<const double> cn0_dbhz,
                                                int offsets);

/// CSV with header cn0_dbhz,crb_seconds2.
void write_crb_csv(std::span<const CrbPoint> curve, const std::filesystem::path& path);

}  // namespace lims

#include "lims/crb.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "lims/csv.hpp"
#include "lims/errors.hpp"
#include "lims/estimator.hpp"

namespace lims {

Eigen::MatrixXd fisher_inverse(const CrbInput& input) {
  if (!(input.n0 > 0.0) || !(input.ti > 0.0)) {
    throw std::invalid_argument("fisher_inverse: N0 and Ti must be > 0");
  }
  const Eigen::Index k = input.channel.size();
  const auto n = static_cast<Eigen::Index>(input.grid.size());
  if (k == 0) throw std::invalid_argument("fisher_inverse: channel has no paths");

  Eigen::MatrixXcd d(n, 2 * k);
  d.leftCols(k) = build_A(input.channel.delays, input.grid, input.acf).cast<std::complex<double>>();
  d.rightCols(k) = build_B(input.channel.coefficients, input.channel.delays, input.grid, input.acf);

  // The delay columns scale like 1/Tc; equilibrate before factoring.
  Eigen::VectorXd scale(2 * k);
  for (Eigen::Index j = 0; j < 2 * k; ++j) {
    const double norm = d.col(j).norm();
    if (!(norm > 0.0)) throw SingularFisherError("fisher_inverse: D has a zero column");
    scale[j] = 1.0 / norm;
  }
  const Eigen::MatrixXcd ds = d * scale.asDiagonal();

  const Eigen::MatrixXd c = noise_covariance(input.grid, input.acf);
  const Eigen::LDLT<Eigen::MatrixXd> c_ldlt(c);
  if (c_ldlt.info() != Eigen::Success || !c_ldlt.isPositive()) {
    throw SingularFisherError("fisher_inverse: noise covariance is not positive definite");
  }
  Eigen::MatrixXd cinv_re(n, 2 * k);
  Eigen::MatrixXd cinv_im(n, 2 * k);
  cinv_re = c_ldlt.solve(Eigen::MatrixXd(ds.real()));
  cinv_im = c_ldlt.solve(Eigen::MatrixXd(ds.imag()));
  // Re{Ds^H C^-1 Ds} = Re(Ds)^T C^-1 Re(Ds) + Im(Ds)^T C^-1 Im(Ds)
  Eigen::MatrixXd info = ds.real().transpose() * cinv_re + ds.imag().transpose() * cinv_im;
  info = 0.5 * (info + info.transpose());

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(info);
  const auto& sv = svd.singularValues();
  if (!(sv[sv.size() - 1] > 1e-12 * sv[0])) {
    throw SingularFisherError("fisher_inverse: D = [A B] is rank deficient");
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() != Eigen::Success) {
    throw SingularFisherError("fisher_inverse: information matrix is not positive definite");
  }
  const Eigen::MatrixXd inv_scaled = llt.solve(Eigen::MatrixXd::Identity(2 * k, 2 * k));
  Eigen::MatrixXd inv = scale.asDiagonal() * inv_scaled * scale.asDiagonal();
  inv *= input.n0 / (2.0 * input.ti);
  return 0.5 * (inv + inv.transpose());
}

double crb_first_path(const CrbInput& input) {
  const Eigen::Index k = input.channel.size();
  return fisher_inverse(input)(k, k);
}

std::vector<CrbPoint> crb_curve(const ChannelRealization& channel, const LagGrid& grid,
                                const AcfModel& acf, double ti, std::span<const double> cn0_dbhz) {
  // The bound is linear in N0: evaluate the unit-N0 matrix once.
  const double unit = crb_first_path({channel, grid, acf, 1.0, ti});
  std::vector<CrbPoint> out;
  out.reserve(cn0_dbhz.size());
  for (double cn0 : cn0_dbhz) out.push_back({cn0, unit * noise_density(cn0)});
  return out;
}

std::vector<CrbPoint> crb_curve_offset_averaged(const ChannelRealization& channel,
                                                const LagGrid& grid, const AcfModel& acf,
                                                double ti, std::span<const double> cn0_dbhz,
                                                int offsets) {
  if (offsets < 1) throw std::invalid_argument("crb_curve_offset_averaged: offsets must be >= 1");
  const double chip = acf.chip();
  double unit = 0.0;
  for (int i = 0; i < offsets; ++i) {
    const double shift = chip * (-0.5 + (static_cast<double>(i) + 0.5) / offsets);
    unit += crb_first_path({channel.shifted(shift), grid, acf, 1.0, ti});
  }
  unit /= offsets;
  std::vector<CrbPoint> out;
  out.reserve(cn0_dbhz.size());
  for (double cn0 : cn0_dbhz) out.push_back({cn0, unit * noise_density(cn0)});
  return out;
}

void write_crb_csv(std::span<const CrbPoint> curve, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "cn0_dbhz,crb_seconds2\n";
  for (const auto& p : curve) out << csv::num(p.cn0_dbhz) << ',' << csv::num(p.crb_seconds2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace lims

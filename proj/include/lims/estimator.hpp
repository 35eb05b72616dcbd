#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "lims/observation.hpp"
#include "lims/signal_model.hpp"

namespace lims {

enum class CoefficientUpdate { exact_ls, gradient };
enum class DelayUpdate { plain, signed_step };

/// uniform_grid: fixed start from uniform_initial_delays(). search: exhaustive scan of
/// the projected LS weight over delay subsets of a lattice spanning the window (up to
/// three paths; further paths are added greedily).
enum class Initialization { uniform_grid, search };

struct LimsConfig {
  int paths = 1;                  // assumed path count M
  std::optional<double> alpha;    // coefficient gradient step; default 0.5 / lambda_max
  std::optional<double> beta;     // delay step; default see default_beta()
  int iterations = 500;
  CoefficientUpdate coeff_update = CoefficientUpdate::exact_ls;
  DelayUpdate delay_update = DelayUpdate::signed_step;
  bool whitening = true;
  double validation_threshold = 0.01;
  std::optional<std::vector<double>> initial_delays;  // overrides `initialization`
  Initialization initialization = Initialization::uniform_grid;
  double search_step = 0.5;        // scan step in units of the lag spacing
  double search_separation = 1.5;  // minimum scanned path separation, lag spacings
  bool early_stop = false;
  std::optional<AcfModel> assumed_acf;  // default: ideal triangle with the data's Tc

  /// Throws std::invalid_argument unless M >= 1, 2M <= lags, beta > 0,
  /// threshold in [0, 1) and any explicit initial delays have length M.
  void validate(std::size_t lags) const;
};

/// Iterate (c_l, t_l) after `iteration` updates.
struct LimsState {
  Eigen::VectorXcd c;
  Eigen::VectorXd t;
  int iteration = 0;
};

struct Estimate {
  Eigen::VectorXcd coefficients;
  Eigen::VectorXd delays;
  std::optional<double> first_arrival;  // smallest valid delay; none when nothing passes
  std::vector<bool> valid;
  int iterations = 0;
  bool rank_deficient = false;  // some coefficient solve fell back to ridge regularization
};

struct DelayWindow {
  double lo;
  double hi;
};

/// [A]_{n,m} = R(zeta_n - t_m).
Eigen::MatrixXd build_A(const Eigen::VectorXd& t, const LagGrid& grid, const AcfModel& acf);

/// [A']_{n,m} = d R(zeta_n - t_m) / d t_m, so B(c, t) = A'(t) diag(c).
Eigen::MatrixXd build_A_derivative(const Eigen::VectorXd& t, const LagGrid& grid,
                                   const AcfModel& acf);

Eigen::MatrixXcd build_B(const Eigen::VectorXcd& c, const Eigen::VectorXd& t,
                         const LagGrid& grid, const AcfModel& acf);

/// Linearization intercept b = A(t) c - B(c, t) t.
Eigen::VectorXcd build_b(const Eigen::VectorXcd& c, const Eigen::VectorXd& t,
                         const LagGrid& grid, const AcfModel& acf);

/// G = C^{-1/2} from the symmetric eigendecomposition, eigenvalues floored at
/// 1e-10 * max. Throws std::invalid_argument for a non-symmetric input.
Eigen::MatrixXd whitener(const Eigen::MatrixXd& covariance);

struct CoefficientSolve {
  Eigen::VectorXcd c;
  bool rank_deficient = false;
};

/// argmin_c ||y - A c||^2 by column-pivoted Householder QR. When the numerical
/// rank (|R_ii| < 1e-10 |R_00|) is below M, solves the ridge normal equations with
/// lambda = 1e-8 trace(A^T A) / M instead and flags the result.
CoefficientSolve update_coefficients_ls(const Eigen::MatrixXd& a_w, const Eigen::VectorXcd& y_w);

/// c + alpha A^H (y - A c).
Eigen::VectorXcd update_coefficients_gd(const Eigen::VectorXcd& c_prev,
                                        const Eigen::MatrixXd& a_w,
                                        const Eigen::VectorXcd& y_w, double alpha);

/// 0.5 / lambda_max(A^T A), lambda_max from a few power-iteration steps.
double default_alpha(const Eigen::MatrixXd& a_w);

/// Re{ B^H (y - A c) }: the delay update direction (the squared-norm gradient
/// scaled by -1/2).
Eigen::VectorXd delay_direction(const Eigen::VectorXcd& y_w, const Eigen::MatrixXd& a_w,
                                const Eigen::MatrixXcd& b_w, const Eigen::VectorXcd& c);

/// t + beta Re{B^H (y - A c)}, clamped to the window.
Eigen::VectorXd update_delays(const Eigen::VectorXd& t_prev, const Eigen::VectorXcd& y_w,
                              const Eigen::MatrixXd& a_w, const Eigen::MatrixXcd& b_w,
                              const Eigen::VectorXcd& c, double beta, DelayWindow window);

/// t + beta sgn(Re{B^H (y - A c)}) elementwise with sgn(0) = 0, clamped.
Eigen::VectorXd update_delays_signed(const Eigen::VectorXd& t_prev, const Eigen::VectorXcd& y_w,
                                     const Eigen::MatrixXd& a_w, const Eigen::MatrixXcd& b_w,
                                     const Eigen::VectorXcd& c, double beta,
                                     DelayWindow window);

/// Pushes apart delays closer than 1e-6 Tc: the lower index moves 1e-3 Tc left,
/// or the higher index right when the left edge blocks it.
void separate_collisions(Eigen::VectorXd& t, double chip, DelayWindow window);

/// -0.5 Tc and +0.5 Tc at the ends, interior points evenly spaced in between;
/// a single path starts at 0.
std::vector<double> uniform_initial_delays(int paths, double chip);

/// Marks paths whose power exceeds threshold * total estimated power.
Estimate validate_paths(const Eigen::VectorXcd& c, const Eigen::VectorXd& t, double threshold);

/// ||y - A c||^2.
double ls_weight(const Eigen::VectorXcd& y_w, const Eigen::MatrixXd& a_w,
                 const Eigen::VectorXcd& c);

/// Signed steps of Ts/64; plain steps of Ts*Tc/64 (the same step in chip units).
double default_beta(DelayUpdate update, double spacing, double chip);

/// LIMS estimator bound to one lag grid. Caches the weighting matrix G so a
/// single instance can serve many observations, including from several threads.
class LimsEstimator {
 public:
  LimsEstimator(LagGrid grid, double chip, LimsConfig config);

  const LimsConfig& config() const { return config_; }
  const LagGrid& grid() const { return grid_; }
  const Eigen::MatrixXd& weighting() const { return weighting_; }
  const AcfModel& model() const { return model_; }
  double beta() const { return beta_; }
  DelayWindow window() const { return {grid_.front(), grid_.back()}; }

  LimsState initial_state() const;
  /// initial_state(), or the delay scan on `obs` when initialization is search.
  LimsState initial_state(const CorrelatorObservation& obs) const;

  /// Cold start from initial_state() for config().iterations iterations.
  Estimate run(const CorrelatorObservation& obs, std::vector<LimsState>* trace = nullptr) const;

  /// Continues from `state` for `iterations` iterations, updating it in place.
  Estimate advance(const CorrelatorObservation& obs, LimsState& state, int iterations,
                   std::vector<LimsState>* trace = nullptr) const;

  /// Whitened observation G y (or y when whitening is off).
  Eigen::VectorXcd whiten(const Eigen::VectorXcd& y) const;

  /// Whitened A(t).
  Eigen::MatrixXd whitened_A(const Eigen::VectorXd& t) const;

 private:
  LagGrid grid_;
  double chip_;
  LimsConfig config_;
  AcfModel model_;
  Eigen::MatrixXd weighting_;
  double beta_;
};

Estimate run(const CorrelatorObservation& obs, const LimsConfig& config);

/// Epoch nu + 1 warm-starts from the state left by epoch nu.
std::vector<Estimate> track(std::span<const CorrelatorObservation> observations,
                            const LimsConfig& config, int iterations_per_epoch);

}  // namespace lims

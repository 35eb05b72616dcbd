#include "lims/estimator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lims {

void LimsConfig::validate(std::size_t lags) const {
  if (paths < 1) throw std::invalid_argument("LimsConfig: path count must be >= 1");
  if (2 * static_cast<std::size_t>(paths) > lags) {
    throw std::invalid_argument("LimsConfig: need at least 2M correlator lags");
  }
  if (beta && !(*beta > 0.0)) throw std::invalid_argument("LimsConfig: beta must be > 0");
  if (alpha && !(*alpha >= 0.0)) throw std::invalid_argument("LimsConfig: alpha must be >= 0");
  if (iterations < 0) throw std::invalid_argument("LimsConfig: iterations must be >= 0");
  if (!(validation_threshold >= 0.0 && validation_threshold < 1.0)) {
    throw std::invalid_argument("LimsConfig: validation threshold must be in [0, 1)");
  }
  if (!(search_step > 0.0)) throw std::invalid_argument("LimsConfig: search step must be > 0");
  if (initial_delays && initial_delays->size() != static_cast<std::size_t>(paths)) {
    throw std::invalid_argument("LimsConfig: initial delay count must equal M");
  }
}

Eigen::MatrixXd build_A(const Eigen::VectorXd& t, const LagGrid& grid, const AcfModel& acf) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd a(n, t.size());
  for (Eigen::Index m = 0; m < t.size(); ++m) {
    for (Eigen::Index i = 0; i < n; ++i) {
      a(i, m) = acf.value(grid[static_cast<std::size_t>(i)] - t[m]);
    }
  }
  return a;
}

Eigen::MatrixXd build_A_derivative(const Eigen::VectorXd& t, const LagGrid& grid,
                                   const AcfModel& acf) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd d(n, t.size());
  for (Eigen::Index m = 0; m < t.size(); ++m) {
    for (Eigen::Index i = 0; i < n; ++i) {
      d(i, m) = acf.delay_derivative(grid[static_cast<std::size_t>(i)] - t[m]);
    }
  }
  return d;
}

Eigen::MatrixXcd build_B(const Eigen::VectorXcd& c, const Eigen::VectorXd& t,
                         const LagGrid& grid, const AcfModel& acf) {
  return build_A_derivative(t, grid, acf).cast<std::complex<double>>() * c.asDiagonal();
}

Eigen::VectorXcd build_b(const Eigen::VectorXcd& c, const Eigen::VectorXd& t,
                         const LagGrid& grid, const AcfModel& acf) {
  const Eigen::MatrixXd a = build_A(t, grid, acf);
  const Eigen::MatrixXcd b = build_B(c, t, grid, acf);
  return a.cast<std::complex<double>>() * c - b * t.cast<std::complex<double>>();
}

Eigen::MatrixXd whitener(const Eigen::MatrixXd& covariance) {
  if (covariance.rows() != covariance.cols()) {
    throw std::invalid_argument("whitener: covariance must be square");
  }
  const double scale = std::max(covariance.cwiseAbs().maxCoeff(), 1e-300);
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("whitener: covariance must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance);
  if (eig.info() != Eigen::Success) {
    throw std::invalid_argument("whitener: eigendecomposition failed");
  }
  const double floor = 1e-10 * eig.eigenvalues().maxCoeff();
  const Eigen::VectorXd inv_root = eig.eigenvalues().cwiseMax(floor).cwiseSqrt().cwiseInverse();
  return eig.eigenvectors() * inv_root.asDiagonal() * eig.eigenvectors().transpose();
}

CoefficientSolve update_coefficients_ls(const Eigen::MatrixXd& a_w, const Eigen::VectorXcd& y_w) {
  const Eigen::Index m = a_w.cols();
  Eigen::MatrixXd rhs(a_w.rows(), 2);
  rhs.col(0) = y_w.real();
  rhs.col(1) = y_w.imag();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a_w);
  qr.setThreshold(1e-10);
  CoefficientSolve out;
  Eigen::MatrixXd sol;
  if (qr.rank() == m) {
    sol = qr.solve(rhs);
  } else {
    const Eigen::MatrixXd gram = a_w.transpose() * a_w;
    double lambda = 1e-8 * gram.trace() / static_cast<double>(m);
    if (!(lambda > 0.0)) lambda = 1e-300;
    const Eigen::MatrixXd reg = gram + lambda * Eigen::MatrixXd::Identity(m, m);
    sol = reg.ldlt().solve(a_w.transpose() * rhs);
    out.rank_deficient = true;
  }
  out.c.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) out.c[i] = {sol(i, 0), sol(i, 1)};
  return out;
}

Eigen::VectorXcd update_coefficients_gd(const Eigen::VectorXcd& c_prev,
                                        const Eigen::MatrixXd& a_w,
                                        const Eigen::VectorXcd& y_w, double alpha) {
  const Eigen::MatrixXcd a = a_w.cast<std::complex<double>>();
  return c_prev + alpha * (a.adjoint() * (y_w - a * c_prev));
}

double default_alpha(const Eigen::MatrixXd& a_w) {
  const Eigen::MatrixXd gram = a_w.transpose() * a_w;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(gram.rows());
  double lambda = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Eigen::VectorXd w = gram * v;
    const double norm = w.norm();
    if (!(norm > 0.0)) return 0.0;
    lambda = v.dot(w) / v.squaredNorm();
    v = w / norm;
  }
  // Power iteration converges from below; the Gershgorin row bound caps it.
  const double bound = gram.cwiseAbs().rowwise().sum().maxCoeff();
  lambda = std::min(std::max(lambda, 1e-300), bound);
  return 0.5 / lambda;
}

Eigen::VectorXd delay_direction(const Eigen::VectorXcd& y_w, const Eigen::MatrixXd& a_w,
                                const Eigen::MatrixXcd& b_w, const Eigen::VectorXcd& c) {
  const Eigen::VectorXcd residual = y_w - a_w.cast<std::complex<double>>() * c;
  return (b_w.adjoint() * residual).real();
}

namespace {

Eigen::VectorXd clamp_to(Eigen::VectorXd t, DelayWindow window) {
  for (Eigen::Index m = 0; m < t.size(); ++m) t[m] = std::clamp(t[m], window.lo, window.hi);
  return t;
}

}  // namespace

Eigen::VectorXd update_delays(const Eigen::VectorXd& t_prev, const Eigen::VectorXcd& y_w,
                              const Eigen::MatrixXd& a_w, const Eigen::MatrixXcd& b_w,
                              const Eigen::VectorXcd& c, double beta, DelayWindow window) {
  return clamp_to(t_prev + beta * delay_direction(y_w, a_w, b_w, c), window);
}

Eigen::VectorXd update_delays_signed(const Eigen::VectorXd& t_prev, const Eigen::VectorXcd& y_w,
                                     const Eigen::MatrixXd& a_w, const Eigen::MatrixXcd& b_w,
                                     const Eigen::VectorXcd& c, double beta,
                                     DelayWindow window) {
  const Eigen::VectorXd g = delay_direction(y_w, a_w, b_w, c);
  Eigen::VectorXd t = t_prev;
  for (Eigen::Index m = 0; m < t.size(); ++m) {
    if (g[m] > 0.0) t[m] += beta;
    else if (g[m] < 0.0) t[m] -= beta;
  }
  return clamp_to(std::move(t), window);
}

void separate_collisions(Eigen::VectorXd& t, double chip, DelayWindow window) {
  const double tol = 1e-6 * chip;
  const double push = 1e-3 * chip;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    for (Eigen::Index j = i + 1; j < t.size(); ++j) {
      if (std::abs(t[i] - t[j]) >= tol) continue;
      if (t[i] - push >= window.lo) {
        t[i] -= push;
      } else {
        t[j] = std::min(t[j] + push, window.hi);
      }
    }
  }
}

std::vector<double> uniform_initial_delays(int paths, double chip) {
  if (paths < 1) throw std::invalid_argument("uniform_initial_delays: need at least one path");
  if (paths == 1) return {0.0};
  std::vector<double> t(static_cast<std::size_t>(paths));
  for (int m = 0; m < paths; ++m) {
    t[static_cast<std::size_t>(m)] = chip * (-0.5 + static_cast<double>(m) / (paths - 1));
  }
  return t;
}

Estimate validate_paths(const Eigen::VectorXcd& c, const Eigen::VectorXd& t, double threshold) {
  Estimate e;
  e.coefficients = c;
  e.delays = t;
  e.valid.assign(static_cast<std::size_t>(c.size()), false);
  const double total = c.squaredNorm();
  if (!(total > 0.0)) return e;
  for (Eigen::Index m = 0; m < c.size(); ++m) {
    if (std::norm(c[m]) > threshold * total) {
      e.valid[static_cast<std::size_t>(m)] = true;
      if (!e.first_arrival || t[m] < *e.first_arrival) e.first_arrival = t[m];
    }
  }
  return e;
}

double ls_weight(const Eigen::VectorXcd& y_w, const Eigen::MatrixXd& a_w,
                 const Eigen::VectorXcd& c) {
  return (y_w - a_w.cast<std::complex<double>>() * c).squaredNorm();
}

double default_beta(DelayUpdate update, double spacing, double chip) {
  return update == DelayUpdate::signed_step ? spacing / 64.0 : spacing * chip / 64.0;
}

LimsEstimator::LimsEstimator(LagGrid grid, double chip, LimsConfig config)
    : grid_(std::move(grid)),
      chip_(chip),
      config_(std::move(config)),
      model_(config_.assumed_acf ? *config_.assumed_acf : AcfModel::ideal(chip)) {
  config_.validate(grid_.size());
  if (config_.whitening) {
    weighting_ = whitener(noise_covariance(grid_, model_));
  } else {
    const auto n = static_cast<Eigen::Index>(grid_.size());
    weighting_ = Eigen::MatrixXd::Identity(n, n);
  }
  beta_ = config_.beta ? *config_.beta
                       : default_beta(config_.delay_update, grid_.spacing(), chip_);
}

LimsState LimsEstimator::initial_state() const {
  const auto delays =
      config_.initial_delays ? *config_.initial_delays : uniform_initial_delays(config_.paths, chip_);
  LimsState s;
  s.t = Eigen::Map<const Eigen::VectorXd>(delays.data(), static_cast<Eigen::Index>(delays.size()));
  s.t = clamp_to(s.t, window());
  s.c = Eigen::VectorXcd::Zero(config_.paths);
  return s;
}

namespace {

// Projected LS gain r_S^H G_S^{-1} r_S of the candidate subset `idx`.
template <int K>
double subset_gain(const Eigen::MatrixXd& gram, const Eigen::VectorXcd& corr,
                   const std::array<Eigen::Index, K>& idx) {
  Eigen::Matrix<double, K, K> g;
  Eigen::Matrix<std::complex<double>, K, 1> r;
  for (int i = 0; i < K; ++i) {
    r[i] = corr[idx[i]];
    for (int j = 0; j < K; ++j) g(i, j) = gram(idx[i], idx[j]);
  }
  const Eigen::LLT<Eigen::Matrix<double, K, K>> llt(g);
  if (llt.info() != Eigen::Success) return -1.0;
  const auto l = llt.matrixL();
  if (l.toDenseMatrix().diagonal().minCoeff() < 1e-6 * std::sqrt(g.diagonal().maxCoeff())) {
    return -1.0;
  }
  const Eigen::Matrix<std::complex<double>, K, 1> w = llt.matrixL().solve(r.template cast<std::complex<double>>());
  return w.squaredNorm();
}

template <int K>
std::array<Eigen::Index, K> best_subset(const Eigen::MatrixXd& gram, const Eigen::VectorXcd& corr,
                                        Eigen::Index min_gap) {
  const Eigen::Index n = corr.size();
  std::array<Eigen::Index, K> idx{};
  std::array<Eigen::Index, K> best{};
  double best_gain = -std::numeric_limits<double>::infinity();
  auto visit = [&](auto&& self, int depth, Eigen::Index from) -> void {
    if (depth == K) {
      const double g = subset_gain<K>(gram, corr, idx);
      if (g > best_gain) {
        best_gain = g;
        best = idx;
      }
      return;
    }
    for (Eigen::Index i = depth == 0 ? from : from + min_gap - 1; i < n; ++i) {
      idx[static_cast<std::size_t>(depth)] = i;
      self(self, depth + 1, i + 1);
    }
  };
  visit(visit, 0, 0);
  return best;
}

}  // namespace

LimsState LimsEstimator::initial_state(const CorrelatorObservation& obs) const {
  LimsState s = initial_state();
  if (config_.initial_delays || config_.initialization == Initialization::uniform_grid) return s;

  const Eigen::VectorXcd y_w = whiten(obs.y);
  const DelayWindow win = window();
  const double step = config_.search_step * grid_.spacing();
  std::vector<double> candidates;
  for (double v = win.lo; v <= win.hi + 1e-9 * step; v += step) candidates.push_back(v);
  const Eigen::VectorXd cand =
      Eigen::Map<const Eigen::VectorXd>(candidates.data(), static_cast<Eigen::Index>(candidates.size()));
  const Eigen::MatrixXd basis = whitened_A(cand);
  const Eigen::MatrixXd gram = basis.transpose() * basis;
  const Eigen::VectorXcd corr = basis.cast<std::complex<double>>().adjoint() * y_w;

  const Eigen::Index m = config_.paths;
  const double min_sep = config_.search_separation * grid_.spacing();
  const auto gap = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::ceil(min_sep / step - 1e-9)));
  Eigen::VectorXd t(std::min<Eigen::Index>(m, 3));
  auto take = [&](const auto& idx) {
    for (std::size_t i = 0; i < idx.size(); ++i) t[static_cast<Eigen::Index>(i)] = cand[idx[i]];
  };
  if (m == 1) {
    take(best_subset<1>(gram, corr, gap));
  } else if (m == 2) {
    take(best_subset<2>(gram, corr, gap));
  } else {
    take(best_subset<3>(gram, corr, gap));
  }

  auto cost = [&](const Eigen::VectorXd& delays) {
    const Eigen::MatrixXd a_w = whitened_A(delays);
    return ls_weight(y_w, a_w, update_coefficients_ls(a_w, y_w).c);
  };
  auto separated = [&](const Eigen::VectorXd& delays, Eigen::Index slot) {
    for (Eigen::Index j = 0; j < delays.size(); ++j) {
      if (j != slot && std::abs(delays[j] - delays[slot]) < min_sep - 1e-9 * step) return false;
    }
    return true;
  };
  auto best_slot = [&](Eigen::VectorXd delays, Eigen::Index slot) {
    double best = std::numeric_limits<double>::infinity();
    double arg = delays[slot];
    for (double v : candidates) {
      delays[slot] = v;
      if (!separated(delays, slot)) continue;
      const double j = cost(delays);
      if (j < best) {
        best = j;
        arg = v;
      }
    }
    return arg;
  };
  for (Eigen::Index k = t.size(); k < m; ++k) {
    Eigen::VectorXd next(k + 1);
    next.head(k) = t;
    next[k] = win.lo;
    next[k] = best_slot(next, k);
    t = std::move(next);
  }
  if (m > 3) {
    for (Eigen::Index k = 0; k < m; ++k) t[k] = best_slot(t, k);
  }
  // Local refinement on a lattice four times finer.
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index k = 0; k < m; ++k) {
      Eigen::VectorXd trial = t;
      double best = cost(t);
      double arg = t[k];
      for (int j = -4; j <= 4; ++j) {
        const double v = t[k] + 0.25 * j * step;
        if (j == 0 || v < win.lo || v > win.hi) continue;
        trial[k] = v;
        if (!separated(trial, k)) continue;
        const double c = cost(trial);
        if (c < best) {
          best = c;
          arg = v;
        }
      }
      t[k] = arg;
    }
  }
  std::sort(t.begin(), t.end());
  separate_collisions(t, chip_, win);
  s.t = t;
  return s;
}

Eigen::VectorXcd LimsEstimator::whiten(const Eigen::VectorXcd& y) const {
  if (!config_.whitening) return y;
  return weighting_.cast<std::complex<double>>() * y;
}

Eigen::MatrixXd LimsEstimator::whitened_A(const Eigen::VectorXd& t) const {
  if (!config_.whitening) return build_A(t, grid_, model_);
  return weighting_ * build_A(t, grid_, model_);
}

Estimate LimsEstimator::run(const CorrelatorObservation& obs, std::vector<LimsState>* trace) const {
  LimsState state = initial_state(obs);
  return advance(obs, state, config_.iterations, trace);
}

Estimate LimsEstimator::advance(const CorrelatorObservation& obs, LimsState& state,
                                int iterations, std::vector<LimsState>* trace) const {
  if (!(obs.grid == grid_)) {
    throw std::invalid_argument("LimsEstimator: observation grid differs from estimator grid");
  }
  const Eigen::VectorXcd y_w = whiten(obs.y);
  const DelayWindow win = window();
  bool rank_deficient = false;
  int quiet = 0;
  for (int l = 0; l < iterations; ++l) {
    const Eigen::MatrixXd a_w = whitened_A(state.t);
    if (config_.coeff_update == CoefficientUpdate::exact_ls) {
      auto sol = update_coefficients_ls(a_w, y_w);
      rank_deficient = rank_deficient || sol.rank_deficient;
      state.c = std::move(sol.c);
    } else {
      const double alpha = config_.alpha ? *config_.alpha : default_alpha(a_w);
      state.c = update_coefficients_gd(state.c, a_w, y_w, alpha);
    }
    Eigen::MatrixXd d = build_A_derivative(state.t, grid_, model_);
    if (config_.whitening) d = weighting_ * d;
    const Eigen::MatrixXcd b_w = d.cast<std::complex<double>>() * state.c.asDiagonal();

    Eigen::VectorXd next =
        config_.delay_update == DelayUpdate::signed_step
            ? update_delays_signed(state.t, y_w, a_w, b_w, state.c, beta_, win)
            : update_delays(state.t, y_w, a_w, b_w, state.c, beta_, win);
    separate_collisions(next, chip_, win);

    const double moved = (next - state.t).cwiseAbs().maxCoeff();
    state.t = std::move(next);
    ++state.iteration;
    if (trace) trace->push_back(state);

    if (config_.early_stop) {
      quiet = moved < 1e-4 * chip_ ? quiet + 1 : 0;
      if (quiet >= 10) break;
    }
  }
  Estimate e = validate_paths(state.c, state.t, config_.validation_threshold);
  e.iterations = state.iteration;
  e.rank_deficient = rank_deficient;
  return e;
}

Estimate run(const CorrelatorObservation& obs, const LimsConfig& config) {
  return LimsEstimator(obs.grid, obs.acf.chip(), config).run(obs);
}

std::vector<Estimate> track(std::span<const CorrelatorObservation> observations,
                            const LimsConfig& config, int iterations_per_epoch) {
  std::vector<Estimate> out;
  if (observations.empty()) return out;
  if (iterations_per_epoch < 0) throw std::invalid_argument("track: negative iteration budget");
  const LimsEstimator estimator(observations.front().grid, observations.front().acf.chip(), config);
  LimsState state = estimator.initial_state(observations.front());
  out.reserve(observations.size());
  for (const auto& obs : observations) {
    out.push_back(estimator.advance(obs, state, iterations_per_epoch));
  }
  return out;
}

}  // namespace lims

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "lims/crb.hpp"
#include "lims/discriminator.hpp"
#include "lims/estimator.hpp"
#include "lims/harness.hpp"
#include "lims/waveform.hpp"

using namespace lims;

namespace {

const double tc = kGpsChip;

struct Verdict {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Eigen::VectorXcd random_complex(RandomStream& rng, Eigen::Index n) {
  Eigen::VectorXcd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.complex_normal();
  return v;
}

double row_mse(const std::vector<ResultRow>& rows, const std::string& alg, double cn0) {
  for (const auto& r : rows) {
    if (r.algorithm == alg && r.cn0_dbhz == cn0) return r.mse_chips2;
  }
  throw std::runtime_error("missing row " + alg);
}

ExperimentConfig sweep(ChannelPreset channel, std::vector<double> cn0,
                       std::vector<AlgorithmSpec> algorithms) {
  ExperimentConfig c;
  c.channel = channel;
  c.cn0_sweep_dbhz = std::move(cn0);
  c.algorithms = std::move(algorithms);
  c.trials = 500;
  c.seed = 2024;
  return c;
}

const AlgorithmSpec el_wide = AlgorithmSpec::el(AlgorithmKind::el_wide);
const AlgorithmSpec el_narrow = AlgorithmSpec::el(AlgorithmKind::el_narrow);

Verdict el_equivalence() {
  RandomStream rng(1);
  const GeneralizedDiscriminator disc(GeneralizedDiscConfig::for_spacing(tc, tc),
                                      AcfModel::ideal(tc));
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::array<std::complex<double>, 2> y{rng.complex_normal(), rng.complex_normal()};
    worst = std::max(worst, std::abs(disc(y) - el_discriminator(y[0], y[1])));
  }

  // Unit chip so that delays and D share a scale.
  const LagGrid grid({-0.5, 0.5});
  const AcfModel acf = AcfModel::ideal(1.0);
  const GeneralizedDiscriminator unit(GeneralizedDiscConfig::for_spacing(1.0, 1.0), acf);
  LimsConfig cfg;
  cfg.paths = 1;
  cfg.iterations = 1;
  cfg.delay_update = DelayUpdate::plain;
  cfg.beta = 1e-3;
  cfg.initial_delays = std::vector<double>{0.0};
  const LimsEstimator est(grid, 1.0, cfg);
  double worst_step = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const CorrelatorObservation obs{random_complex(rng, 2), grid, 0.0, acf};
    const double d = unit(std::span(obs.y.data(), 2));
    const double t1 = est.run(obs).delays[0];
    worst_step = std::max(worst_step, std::abs(t1 + *cfg.beta * d));
  }
  return {worst < 1e-12 && worst_step < 1e-12,
          fmt("max |D - (|yE|^2-|yL|^2)| = %.2e, max |t1 + beta D| = %.2e", worst, worst_step)};
}

Verdict gradient_check() {
  RandomStream rng(2);
  const LagGrid g = LagGrid::centered(3 * tc, 0.1 * tc);
  const AcfModel acf = AcfModel::ideal(tc);
  const Eigen::MatrixXcd w = whitener(noise_covariance(g, acf)).cast<std::complex<double>>();
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 1 + trial % 3;
    Eigen::VectorXd t(m);
    for (int k = 0; k < m; ++k) t[k] = (-0.9 + 0.6 * k + rng.uniform(0.0, 0.5)) * tc;
    const Eigen::VectorXcd c = random_complex(rng, m);
    const Eigen::VectorXcd y = w * random_complex(rng, 31);
    const Eigen::MatrixXd a_w = (w * build_A(t, g, acf).cast<std::complex<double>>()).real();
    const Eigen::MatrixXcd b_w = w * build_B(c, t, g, acf);
    const Eigen::VectorXcd b0 = w * build_b(c, t, g, acf);
    const Eigen::VectorXd dir = delay_direction(y, a_w, b_w, c);
    auto weight = [&](const Eigen::VectorXd& s) {
      return (y - b0 - b_w * s.cast<std::complex<double>>()).squaredNorm();
    };
    for (int k = 0; k < m; ++k) {
      const double h = 1e-3 * tc;
      Eigen::VectorXd up = t, dn = t;
      up[k] += h;
      dn[k] -= h;
      const double fd = -0.5 * (weight(up) - weight(dn)) / (2 * h);
      worst = std::max(worst, std::abs(dir[k] - fd) / std::max(std::abs(fd), 1e-300));
    }
  }
  return {worst < 1e-6, fmt("max relative deviation %.2e over 100 instances", worst)};
}

Verdict whitening_identity() {
  const Eigen::MatrixXd c = noise_covariance(LagGrid::centered(3 * tc, 0.1 * tc), AcfModel::ideal(tc));
  const Eigen::MatrixXd g = whitener(c);
  const Eigen::MatrixXd e = g * c * g.transpose() - Eigen::MatrixXd::Identity(c.rows(), c.cols());
  const double norm = e.cwiseAbs().rowwise().sum().maxCoeff();
  return {norm < 1e-8, fmt("||G C G^T - I||_inf = %.2e (%d lags)", norm, static_cast<int>(c.rows()))};
}

Verdict noiseless_super_resolution() {
  RandomStream rng(3);
  const ChannelRealization ch = realize(two_path_nonfading(tc), rng);
  const LagGrid g = LagGrid::centered(3 * tc, 0.1 * tc);
  const AcfModel acf = AcfModel::ideal(tc);
  const CorrelatorObservation obs{noiseless_output(ch, g, acf), g, 0.0, acf};
  LimsConfig cfg;
  cfg.paths = 2;
  const Estimate e = run(obs, cfg);
  const double delay_err = std::abs(*e.first_arrival - ch.delays[0]) / tc;
  double coeff_err = 0.0;
  for (int k = 0; k < 2; ++k) {
    coeff_err = std::max(coeff_err, std::abs(e.coefficients[k] - ch.coefficients[k]) /
                                        std::abs(ch.coefficients[k]));
  }
  return {delay_err < 0.02 && coeff_err < 0.02,
          fmt("|t0 - tau0| = %.2e Tc, max coefficient error %.2e (%d iterations)", delay_err,
              coeff_err, e.iterations)};
}

Verdict covariance_oracle() {
  ChannelRealization silent;
  silent.coefficients = Eigen::VectorXcd::Zero(1);
  silent.delays = Eigen::VectorXd::Zero(1);
  const LagGrid g = LagGrid::centered(3 * tc, 0.1 * tc);
  const AcfModel acf = AcfModel::ideal(tc);
  const double ti = 0.01, cn0 = 40.0;
  const int runs = 2000;
  const auto n = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(n, n);
  for (int r = 0; r < runs; ++r) {
    RandomStream rng = RandomStream::derive(5, 0, static_cast<std::uint64_t>(r));
    const auto obs = waveform_oracle(silent, 1, tc / default_samples_per_chip(false), cn0, ti, g,
                                     std::nullopt, rng);
    sum += obs.y * obs.y.adjoint();
  }
  const Eigen::MatrixXd model = (noise_density(cn0) / ti) * noise_covariance(g, acf);
  const Eigen::MatrixXd c = noise_covariance(g, acf);
  const Eigen::MatrixXd est = (sum / runs).real();
  const double scale = noise_density(cn0) / ti;
  double worst = 0.0, worst_strong = 0.0, worst_z = 0.0;
  int entries = 0;
  for (Eigen::Index p = 0; p < n; ++p) {
    for (Eigen::Index q = 0; q < n; ++q) {
      if (std::abs(c(p, q)) < 0.1) continue;
      ++entries;
      const double rel = std::abs(est(p, q) - model(p, q)) / std::abs(model(p, q));
      worst = std::max(worst, rel);
      if (std::abs(c(p, q)) >= 0.5) worst_strong = std::max(worst_strong, rel);
      // Standard error of Re(y_p conj(y_q)) averaged over the runs.
      const double se = scale * std::sqrt((1 + c(p, q) * c(p, q)) / (2.0 * runs));
      worst_z = std::max(worst_z, std::abs(est(p, q) - model(p, q)) / se);
    }
  }
  return {worst < 0.10, fmt("max relative error %.3f over %d entries with |C| >= 0.1 "
                            "(%.3f on |C| >= 0.5, max z-score %.2f), %d runs",
                            worst, entries, worst_strong, worst_z, runs)};
}

Verdict crb_properties() {
  RandomStream rng(6);
  const ChannelRealization ch = realize(two_path_nonfading(tc), rng);
  const LagGrid g = LagGrid::centered(3 * tc, 0.1 * tc);
  const AcfModel acf = AcfModel::ideal(tc);
  const std::vector<double> cn0{20, 30, 40, 50, 60};
  const auto curve = crb_curve(ch, g, acf, 0.01, cn0);
  double worst_slope = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const double slope = (std::log10(curve[i].crb_seconds2) - std::log10(curve[i - 1].crb_seconds2)) /
                         (cn0[i] - cn0[i - 1]);
    worst_slope = std::max(worst_slope, std::abs(slope + 0.1));
  }
  const double a = crb_first_path({ch, g, acf, 1e-4, 0.01});
  const double b = crb_first_path({ch, g, acf, 2e-4, 0.01});
  const Eigen::MatrixXd f = fisher_inverse({ch, g, acf, 1e-4, 0.01});
  const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(f).eigenvalues().minCoeff();
  const bool pass = worst_slope < 1e-12 && std::abs(b / a - 2.0) < 1e-12 && min_eig > 0;
  return {pass, fmt("slope deviation %.1e, N0 doubling ratio %.15f, min eigenvalue of inverse %.2e",
                    worst_slope, b / a, min_eig)};
}

Verdict fig3a() {
  const std::vector<double> cn0{30, 40, 50, 60};
  const auto white = AlgorithmSpec::lims_variant(2, true);
  const auto nowhite = AlgorithmSpec::lims_variant(2, false);
  const auto cfg = sweep(ChannelPreset::two_path_nonfading, cn0, {white, nowhite, el_wide, el_narrow});
  const auto rows = run_experiment(cfg);
  RandomStream rng(7);
  const auto crb = crb_curve_offset_averaged(realize(two_path_nonfading(tc), rng), cfg.grid(),
                                             AcfModel::ideal(tc), cfg.ti, cn0, 64);
  bool order = true, near = true, above = true;
  std::ostringstream d;
  for (std::size_t i = 0; i < cn0.size(); ++i) {
    const double w = row_mse(rows, white.label(), cn0[i]);
    const double nw = row_mse(rows, nowhite.label(), cn0[i]);
    const double ew = row_mse(rows, el_wide.label(), cn0[i]);
    const double en = row_mse(rows, el_narrow.label(), cn0[i]);
    const double bound = crb[i].crb_seconds2 / (tc * tc);
    if (cn0[i] >= 50) order = order && w < nw && nw < std::min(ew, en);
    if (cn0[i] == 60) near = w <= 3 * bound;
    above = above && w >= bound;
    d << fmt("%g dBHz: white %.2e nowhite %.2e el_wide %.2e el_narrow %.2e crb %.2e; ", cn0[i], w,
             nw, ew, en, bound);
  }
  d << fmt("(a) %s (b) %s (c) %s", order ? "ok" : "fail", near ? "ok" : "fail", above ? "ok" : "fail");
  return {order && near && above, d.str()};
}

Verdict fig4() {
  const std::vector<double> cn0{30, 40, 50, 60};
  const auto m1 = AlgorithmSpec::lims_variant(1, true);
  const auto m2 = AlgorithmSpec::lims_variant(2, true);
  const auto rows = run_experiment(sweep(ChannelPreset::single_path_fading, cn0, {m1, m2, el_wide, el_narrow}));
  bool narrow_wins = true, lims_wins = false, comparable = true;
  std::ostringstream d;
  for (double p : cn0) {
    const double a = row_mse(rows, m1.label(), p), b = row_mse(rows, m2.label(), p);
    const double ew = row_mse(rows, el_wide.label(), p), en = row_mse(rows, el_narrow.label(), p);
    if (p >= 40) narrow_wins = narrow_wins && en < ew;
    if (p == 60) lims_wins = 5 * a <= en;
    comparable = comparable && b <= 2 * a;
    d << fmt("%g dBHz: m1 %.2e m2 %.2e el_wide %.2e el_narrow %.2e; ", p, a, b, ew, en);
  }
  d << fmt("EL narrow < wide %s, M1 5x below EL narrow %s, M2 within 2x of M1 %s",
           narrow_wins ? "ok" : "fail", lims_wins ? "ok" : "fail", comparable ? "ok" : "fail");
  return {narrow_wins && lims_wins && comparable, d.str()};
}

Verdict fig5() {
  std::vector<AlgorithmSpec> algs{el_wide, el_narrow};
  for (int m = 1; m <= 4; ++m) algs.push_back(AlgorithmSpec::lims_variant(m, true));
  bool pass = true;
  std::ostringstream d;
  for (auto [channel, name] : {std::pair{ChannelPreset::channel_a, "A"}, std::pair{ChannelPreset::channel_b, "B"}}) {
    const auto rows = run_experiment(sweep(channel, {50}, algs));
    const double ew = row_mse(rows, "el_wide", 50), en = row_mse(rows, "el_narrow", 50);
    const double m1 = row_mse(rows, "lims_m1_white", 50);
    double best = INFINITY;
    int best_m = 0;
    for (int m = 2; m <= 4; ++m) {
      const double v = row_mse(rows, "lims_m" + std::to_string(m) + "_white", 50);
      if (v < best) best = v, best_m = m;
    }
    const double single = std::min({ew, en, m1});
    const bool plateau = single > 0.01;
    const bool better = 10 * best <= single;
    pass = pass && plateau && better;
    d << fmt("channel %s: el_wide %.3e el_narrow %.3e m1 %.3e, best M=%d %.3e (ratio %.1f); ", name,
             ew, en, m1, best_m, best, single / best);
  }
  return {pass, d.str()};
}

Verdict bandlimit() {
  const auto m3 = AlgorithmSpec::lims_variant(3, true);
  std::vector<double> mse;
  for (std::optional<double> bw : {std::optional<double>{}, std::optional<double>{8e6}, std::optional<double>{2e6}}) {
    auto cfg = sweep(ChannelPreset::channel_a, {50}, {m3});
    cfg.bandwidth = bw;
    mse.push_back(run_experiment(cfg)[0].mse_chips2);
  }
  const bool pass = mse[1] < 1.5 * mse[0] && mse[2] < 10 * mse[0];
  return {pass, fmt("unlimited %.3e, 8 MHz %.3e (x%.2f), 2 MHz %.3e (x%.2f)", mse[0], mse[1],
                    mse[1] / mse[0], mse[2], mse[2] / mse[0])};
}

Verdict convergence() {
  RandomStream channel_rng(11);
  const ChannelRealization ch = realize(two_path_nonfading(tc), channel_rng);
  const LagGrid g = LagGrid::centered(3 * tc, 0.1 * tc);
  const AcfModel acf = AcfModel::ideal(tc);
  LimsConfig cfg;
  cfg.paths = 2;
  cfg.iterations = 300;
  const LimsEstimator est(g, tc, cfg);
  cfg.initialization = Initialization::search;
  const LimsEstimator searched(g, tc, cfg);
  const CorrelatedNoise noise(noise_covariance(g, acf));
  int ok = 0, ok_search = 0;
  const int runs = 50;
  auto hit = [&](const Estimate& e) {
    return e.first_arrival && std::abs(*e.first_arrival - ch.delays[0]) < 0.1 * tc;
  };
  for (int r = 0; r < runs; ++r) {
    RandomStream rng = RandomStream::derive(11, 1, static_cast<std::uint64_t>(r));
    const auto obs = synthesize(ch, g, acf, 30.0, 0.01, rng, noise);
    ok += hit(est.run(obs)) ? 1 : 0;
    ok_search += hit(searched.run(obs)) ? 1 : 0;
  }
  // Fraction within 0.1 Tc for an unbiased Gaussian estimator at the bound.
  const double sigma = std::sqrt(crb_first_path({ch, g, acf, noise_density(30.0), 0.01}));
  const double ceiling = std::erf(0.1 * tc / (sigma * std::sqrt(2.0)));
  return {ok >= 0.9 * runs,
          fmt("%d of %d runs within 0.1 Tc after 300 iterations from the uniform start "
              "(%d from the search start; %.0f%% for an efficient estimator)",
              ok, runs, ok_search, 100 * ceiling)};
}

Verdict determinism() {
  ExperimentConfig cfg;
  cfg.cn0_sweep_dbhz = {40, 60};
  cfg.trials = 100;
  cfg.seed = 77;
  cfg.algorithms = {AlgorithmSpec::lims_variant(2, true), AlgorithmSpec::lims_variant(2, false),
                    el_wide, el_narrow};
  const auto dir = std::filesystem::temp_directory_path();
  auto bytes = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  emit_results(run_experiment(cfg, Execution::parallel), dir / "lims_det_a.csv");
  emit_results(run_experiment(cfg, Execution::parallel), dir / "lims_det_b.csv");
  emit_results(run_experiment(cfg, Execution::serial), dir / "lims_det_c.csv");
  const std::string a = bytes(dir / "lims_det_a.csv");
  const bool same = a == bytes(dir / "lims_det_b.csv") && a == bytes(dir / "lims_det_c.csv") &&
                    bytes(dir / "lims_det_a.dat") == bytes(dir / "lims_det_b.dat");
  for (const char* f : {"lims_det_a", "lims_det_b", "lims_det_c"}) {
    std::filesystem::remove(dir / (std::string(f) + ".csv"));
    std::filesystem::remove(dir / (std::string(f) + ".dat"));
  }
  return {same && !a.empty(), fmt("%zu CSV bytes identical across two runs and the serial schedule", a.size())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"EL equivalence", el_equivalence},
      {"gradient check", gradient_check},
      {"whitening identity", whitening_identity},
      {"noiseless super-resolution", noiseless_super_resolution},
      {"covariance oracle", covariance_oracle},
      {"CRB properties", crb_properties},
      {"two-path sweep orderings and bound", fig3a},
      {"single-path fading orderings", fig4},
      {"dense multipath channels A and B", fig5},
      {"band-limitation robustness", bandlimit},
      {"convergence envelope", convergence},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %2zu %s: %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                v.detail.c_str(), secs);
    std::fflush(stdout);
    failures += v.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}

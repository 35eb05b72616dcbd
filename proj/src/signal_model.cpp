#include "lims/signal_model.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "lims/csv.hpp"
#include "lims/errors.hpp"

namespace lims {

namespace {

// G2 phase-selector taps (1-based register stages) for PRN 1..32.
constexpr std::array<std::pair<int, int>, 32> kCaTaps{{
    {2, 6},  {3, 7},  {4, 8},  {5, 9},  {1, 9},  {2, 10}, {1, 8},  {2, 9},
    {3, 10}, {2, 3},  {3, 4},  {5, 6},  {6, 7},  {7, 8},  {8, 9},  {9, 10},
    {1, 4},  {2, 5},  {3, 6},  {4, 7},  {5, 8},  {6, 9},  {1, 3},  {4, 6},
    {5, 7},  {6, 8},  {7, 9},  {8, 10}, {1, 6},  {2, 7},  {3, 8},  {4, 9},
}};

double ideal_value(double chip, double zeta) {
  if (zeta > -chip && zeta <= 0.0) return zeta / chip + 1.0;
  if (zeta > 0.0 && zeta <= chip) return 1.0 - zeta / chip;
  return 0.0;
}

double lowpass_impulse(double bandwidth, double v) {
  if (v == 0.0) return bandwidth;
  return std::sin(std::numbers::pi * bandwidth * v) / (std::numbers::pi * v);
}

struct Quadrature {
  std::size_t intervals;
  double du;
};

Quadrature convolution_quadrature(double chip, double bandwidth, double step) {
  // Resolve both the table grid and the kernel oscillation period.
  const double target = std::min(step, 0.25 / bandwidth);
  const auto n = static_cast<std::size_t>(std::ceil(2.0 * chip / target));
  return {n, 2.0 * chip / static_cast<double>(n)};
}

double convolve_at(double chip, double bandwidth, const Quadrature& q, double zeta) {
  // Trapezoid rule over the triangle's support; both endpoints are zero.
  double acc = 0.0;
  for (std::size_t j = 1; j < q.intervals; ++j) {
    const double u = -chip + static_cast<double>(j) * q.du;
    acc += ideal_value(chip, u) * lowpass_impulse(bandwidth, zeta - u);
  }
  return acc * q.du;
}

}  // namespace

ChipSequence gen_ca_code(int prn) {
  if (prn < 1 || prn > 32) {
    throw std::invalid_argument("gen_ca_code: prn must be in 1..32, got " +
                                std::to_string(prn));
  }
  const auto [tap1, tap2] = kCaTaps[static_cast<std::size_t>(prn - 1)];
  std::array<int, 10> g1{};
  std::array<int, 10> g2{};
  g1.fill(1);
  g2.fill(1);

  ChipSequence seq;
  seq.chips.resize(kCaCodeLength);
  for (int i = 0; i < kCaCodeLength; ++i) {
    const int bit = g1[9] ^ g2[tap1 - 1] ^ g2[tap2 - 1];
    seq.chips[static_cast<std::size_t>(i)] = static_cast<std::int8_t>(bit ? 1 : -1);
    const int f1 = g1[2] ^ g1[9];
    const int f2 = g2[1] ^ g2[2] ^ g2[5] ^ g2[7] ^ g2[8] ^ g2[9];
    for (int j = 9; j > 0; --j) {
      g1[j] = g1[j - 1];
      g2[j] = g2[j - 1];
    }
    g1[0] = f1;
    g2[0] = f2;
  }
  return seq;
}

std::vector<double> bandlimited_half_table_serial(double chip, double bandwidth,
                                                  double step, std::size_t count) {
  const Quadrature q = convolution_quadrature(chip, bandwidth, step);
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = convolve_at(chip, bandwidth, q, static_cast<double>(i) * step);
  }
  return out;
}

std::vector<double> bandlimited_half_table_parallel(double chip, double bandwidth,
                                                    double step, std::size_t count) {
  const Quadrature q = convolution_quadrature(chip, bandwidth, step);
  std::vector<double> out(count);
  const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] =
        convolve_at(chip, bandwidth, q, static_cast<double>(i) * step);
  }
  return out;
}

AcfModel AcfModel::ideal(double chip) {
  if (!(chip > 0.0)) throw std::invalid_argument("AcfModel: chip duration must be > 0");
  AcfModel m;
  m.kind_ = AcfKind::ideal;
  m.chip_ = chip;
  return m;
}

AcfModel AcfModel::bandlimited(double chip, double bandwidth, double grid_step,
                               Execution exec) {
  if (!(chip > 0.0)) throw std::invalid_argument("AcfModel: chip duration must be > 0");
  if (!(bandwidth > 0.0)) {
    throw std::invalid_argument("make_bandlimited_acf: bandwidth must be > 0");
  }
  if (!(grid_step > 0.0) || grid_step > chip / 100.0 * (1.0 + 1e-12)) {
    throw std::invalid_argument("make_bandlimited_acf: grid_step must be in (0, Tc/100]");
  }
  AcfModel m;
  m.kind_ = AcfKind::bandlimited;
  m.chip_ = chip;
  m.bandwidth_ = bandwidth;
  m.step_ = grid_step;
  const auto count =
      static_cast<std::size_t>(std::floor(kBandlimitedHalfSpanChips * chip / grid_step)) + 1;
  m.half_span_ = static_cast<double>(count - 1) * grid_step;

  auto table = std::make_shared<Table>();
  table->value = exec == Execution::parallel
                     ? bandlimited_half_table_parallel(chip, bandwidth, grid_step, count)
                     : bandlimited_half_table_serial(chip, bandwidth, grid_step, count);
  const auto& v = table->value;
  table->slope.resize(count);
  table->slope[0] = 0.0;
  for (std::size_t i = 1; i + 1 < count; ++i) {
    table->slope[i] = (v[i + 1] - v[i - 1]) / (2.0 * grid_step);
  }
  table->slope[count - 1] = (v[count - 1] - v[count - 2]) / grid_step;
  m.table_ = std::move(table);
  return m;
}

std::optional<double> AcfModel::bandwidth() const {
  if (kind_ == AcfKind::bandlimited) return bandwidth_;
  return std::nullopt;
}

std::span<const double> AcfModel::table() const {
  if (!table_) return {};
  return table_->value;
}

double AcfModel::interpolate(const std::vector<double>& v, double zeta_abs, bool odd) const {
  // v holds an even (value) or odd (slope) function sampled at i * step, i >= 0.
  const double s = zeta_abs / step_;
  const auto last = static_cast<double>(v.size() - 1);
  if (s >= last) return 0.0;
  const auto i = static_cast<std::size_t>(s);
  const double f = s - static_cast<double>(i);
  const double p1 = v[i];
  const double p2 = v[i + 1];
  const double p0 = i == 0 ? (odd ? -v[1] : v[1]) : v[i - 1];
  const double p3 = i + 2 < v.size() ? v[i + 2] : p2;
  return p1 + 0.5 * f *
                  (p2 - p0 +
                   f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + f * (3.0 * (p1 - p2) + p3 - p0)));
}

double AcfModel::value(double zeta) const {
  if (kind_ == AcfKind::ideal) return ideal_value(chip_, zeta);
  return interpolate(table_->value, std::abs(zeta), false);
}

double AcfModel::delay_derivative(double zeta) const {
  if (kind_ == AcfKind::ideal) {
    if (zeta > -chip_ && zeta <= 0.0) return -1.0 / chip_;
    if (zeta > 0.0 && zeta <= chip_) return 1.0 / chip_;
    return 0.0;
  }
  const double slope = interpolate(table_->slope, std::abs(zeta), true);
  return zeta < 0.0 ? slope : -slope;
}

AcfModel make_bandlimited_acf(double chip, double bandwidth, double grid_step) {
  return AcfModel::bandlimited(chip, bandwidth, grid_step);
}

AcfModel shared_bandlimited_acf(double chip, double bandwidth) {
  static std::mutex mutex;
  static std::map<std::pair<double, double>, AcfModel> cache;
  const std::lock_guard lock(mutex);
  const auto key = std::make_pair(chip, bandwidth);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  AcfModel m = make_bandlimited_acf(chip, bandwidth, chip / 1000.0);
  cache.emplace(key, m);
  return m;
}

void write_acf_csv(const AcfModel& m, const std::filesystem::path& path, double half_span,
                   double step) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "zeta_seconds,value\n";
  const auto n = static_cast<long>(std::floor(half_span / step));
  for (long i = -n; i <= n; ++i) {
    const double zeta = static_cast<double>(i) * step;
    out << csv::num(zeta) << ',' << csv::num(m.value(zeta)) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace lims

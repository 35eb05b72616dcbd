#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "lims/execution.hpp"

namespace lims {

inline constexpr double kGpsChipRate = 1.023e6;
inline constexpr double kGpsChip = 1.0 / kGpsChipRate;
inline constexpr int kCaCodeLength = 1023;

/// One period of a BPSK spreading code, chips in {+1, -1}.
struct ChipSequence {
  std::vector<std::int8_t> chips;
  double chip_rate = kGpsChipRate;

  int period() const { return static_cast<int>(chips.size()); }
  double chip_duration() const { return 1.0 / chip_rate; }
};

/// GPS C/A Gold code for satellite `prn` in 1..32.
/// Throws std::invalid_argument for an out-of-range prn.
ChipSequence gen_ca_code(int prn);

enum class AcfKind { ideal, bandlimited };

/// Auto-correlation function R(zeta) of the spreading code.
///
/// The ideal kind is the triangle of half-width Tc with support (-Tc, Tc].
/// The band-limited kind is that triangle convolved with an ideal low-pass
/// impulse response of the given two-sided bandwidth, tabulated on a fine grid
/// and evaluated with cubic (Catmull-Rom) interpolation. Copies share the table.
class AcfModel {
 public:
  static AcfModel ideal(double chip);
  static AcfModel bandlimited(double chip, double bandwidth, double grid_step,
                              Execution exec = Execution::parallel);

  AcfKind kind() const { return kind_; }
  double chip() const { return chip_; }
  std::optional<double> bandwidth() const;
  double grid_step() const { return step_; }

  /// R(zeta); zero outside the support (ideal) or outside the table span.
  double value(double zeta) const;

  /// d/dt R(zeta - t) at t = 0, i.e. -R'(zeta). For the ideal kind the
  /// half-open convention applies: -1/Tc on (-Tc, 0], +1/Tc on (0, Tc].
  double delay_derivative(double zeta) const;

  /// Tabulated values at zeta_i = -half_span + i * grid_step (band-limited only).
  std::span<const double> table() const;
  double table_half_span() const { return half_span_; }

 private:
  struct Table {
    std::vector<double> value;
    std::vector<double> slope;  // dR/dzeta by central differences of `value`
  };

  AcfModel() = default;
  double interpolate(const std::vector<double>& v, double zeta_abs, bool odd) const;

  AcfKind kind_ = AcfKind::ideal;
  double chip_ = kGpsChip;
  double bandwidth_ = 0.0;
  double step_ = 0.0;
  double half_span_ = 0.0;
  std::shared_ptr<const Table> table_;
};

inline double acf_eval(const AcfModel& m, double zeta) { return m.value(zeta); }
inline double acf_derivative(const AcfModel& m, double zeta) {
  return m.delay_derivative(zeta);
}

/// Throws std::invalid_argument when bandwidth <= 0 or grid_step > Tc/100.
AcfModel make_bandlimited_acf(double chip, double bandwidth, double grid_step);

/// Band-limited ACF cached per (chip, bandwidth) at the default Tc/1000 step.
AcfModel shared_bandlimited_acf(double chip, double bandwidth);

/// Half span (in chips) covered by band-limited tables.
inline constexpr double kBandlimitedHalfSpanChips = 8.0;

/// Convolution kernel behind make_bandlimited_acf: values of the low-pass
/// filtered triangle at zeta_i = i * step, i = 0..count-1 (the table is even).
std::vector<double> bandlimited_half_table_serial(double chip, double bandwidth,
                                                  double step, std::size_t count);
std::vector<double> bandlimited_half_table_parallel(double chip, double bandwidth,
                                                    double step, std::size_t count);

/// Two-column CSV (zeta_seconds,value) sampled on [-half_span, half_span].
void write_acf_csv(const AcfModel& m, const std::filesystem::path& path,
                   double half_span, double step);

}  // namespace lims
